#include "cpd/parallel.hpp"

#include <algorithm>
#include <atomic>

namespace cpd {

namespace {
std::atomic<int> g_thread_count{1};
}

void set_thread_count(int n) { g_thread_count.store(std::max(1, n)); }

int thread_count() { return g_thread_count.load(); }

}  // namespace cpd
