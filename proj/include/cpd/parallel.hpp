// Deterministic data-parallel helper. Work items write to disjoint slots, so
// results are bitwise independent of the thread count.
#pragma once

#include <thread>
#include <vector>

namespace cpd {

// Process-wide worker count used by parallel_for (1 = serial). Set once by
// the CLI; safe to change between solves, not during one.
void set_thread_count(int n);
int thread_count();

// Invokes f(i) for i in [0, n) with static chunking. f must only write to
// locations owned by index i.
template <typename F>
void parallel_for(int n, F&& f) {
  const int workers = thread_count();
  if (workers <= 1 || n < 2 * workers) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &f] {
      for (int i = begin; i < end; ++i) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace cpd
