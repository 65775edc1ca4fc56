// Independent reference implementations used only by tests: dense solves and
// random problem generators. Deliberately naive so they cannot share bugs
// with the library code they check.
#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

// Row-major dense matrix.
struct Dense {
  int n = 0;
  std::vector<double> a;  // n*n

  double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }

  static Dense zero(int n) {
    Dense d;
    d.n = n;
    d.a.assign(static_cast<size_t>(n) * n, 0.0);
    return d;
  }
};

inline std::vector<double> multiply(const Dense& m, const std::vector<double>& x) {
  std::vector<double> y(static_cast<size_t>(m.n), 0.0);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) y[static_cast<size_t>(i)] += m.at(i, j) * x[static_cast<size_t>(j)];
  return y;
}

// Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Dense m, std::vector<double> b) {
  const int n = m.n;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m.at(i, k)) > std::abs(m.at(piv, k))) piv = i;
    if (m.at(piv, k) == 0.0) throw std::runtime_error("oracle solve: singular");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(m.at(k, j), m.at(piv, j));
      std::swap(b[static_cast<size_t>(k)], b[static_cast<size_t>(piv)]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = m.at(i, k) / m.at(k, k);
      for (int j = k; j < n; ++j) m.at(i, j) -= f * m.at(k, j);
      b[static_cast<size_t>(i)] -= f * b[static_cast<size_t>(k)];
    }
  }
  std::vector<double> x(static_cast<size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    double acc = b[static_cast<size_t>(i)];
    for (int j = i + 1; j < n; ++j) acc -= m.at(i, j) * x[static_cast<size_t>(j)];
    x[static_cast<size_t>(i)] = acc / m.at(i, i);
  }
  return x;
}

// Random SPD matrix B^T B + shift I with entries of order 1.
inline Dense random_spd(int n, std::mt19937_64& rng, double shift = 0.5) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dense b = Dense::zero(n);
  for (double& v : b.a) v = u(rng);
  Dense m = Dense::zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = (i == j) ? shift : 0.0;
      for (int k = 0; k < n; ++k) acc += b.at(k, i) * b.at(k, j);
      m.at(i, j) = acc;
    }
  return m;
}

inline std::vector<double> random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = u(rng);
  return v;
}

inline double box_qp_objective(const Dense& k, const std::vector<double>& f,
                               const std::vector<double>& x) {
  const auto kx = multiply(k, x);
  double q = 0.0;
  for (int i = 0; i < k.n; ++i)
    q += 0.5 * x[static_cast<size_t>(i)] * kx[static_cast<size_t>(i)] -
         f[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
  return q;
}

struct BoxQpResult {
  std::vector<double> x;
  double objective = 0.0;
  bool found = false;
};

// Brute force for min 1/2 x^T K x - f^T x over l <= x <= u, K SPD: enumerate
// all 3^n assignments of each variable to {free, at lower, at upper}, solve
// the free block exactly, and keep the feasible candidate with the smallest
// objective. The global minimizer is the equality-minimizer of its own face,
// so it is always in the candidate pool.
inline BoxQpResult solve_box_qp_bruteforce(const Dense& k, const std::vector<double>& f,
                                           const std::vector<double>& l,
                                           const std::vector<double>& u) {
  const int n = k.n;
  const double inf = std::numeric_limits<double>::infinity();
  BoxQpResult best;
  std::vector<int> state(static_cast<size_t>(n), 0);  // 0 free, 1 lower, 2 upper
  while (true) {
    bool valid = true;
    for (int i = 0; i < n && valid; ++i) {
      if (state[static_cast<size_t>(i)] == 1 && l[static_cast<size_t>(i)] == -inf) valid = false;
      if (state[static_cast<size_t>(i)] == 2 && u[static_cast<size_t>(i)] == inf) valid = false;
    }
    if (valid) {
      std::vector<int> free_idx;
      std::vector<double> x(static_cast<size_t>(n), 0.0);
      for (int i = 0; i < n; ++i) {
        if (state[static_cast<size_t>(i)] == 0) free_idx.push_back(i);
        else x[static_cast<size_t>(i)] = state[static_cast<size_t>(i)] == 1
                                             ? l[static_cast<size_t>(i)]
                                             : u[static_cast<size_t>(i)];
      }
      bool solved = true;
      if (!free_idx.empty()) {
        const int m = static_cast<int>(free_idx.size());
        Dense kff = Dense::zero(m);
        std::vector<double> rhs(static_cast<size_t>(m), 0.0);
        for (int a = 0; a < m; ++a) {
          rhs[static_cast<size_t>(a)] = f[static_cast<size_t>(free_idx[static_cast<size_t>(a)])];
          for (int b = 0; b < m; ++b)
            kff.at(a, b) = k.at(free_idx[static_cast<size_t>(a)], free_idx[static_cast<size_t>(b)]);
          for (int j = 0; j < n; ++j)
            if (state[static_cast<size_t>(j)] != 0)
              rhs[static_cast<size_t>(a)] -=
                  k.at(free_idx[static_cast<size_t>(a)], j) * x[static_cast<size_t>(j)];
        }
        try {
          const auto y = solve(kff, rhs);
          for (int a = 0; a < m; ++a)
            x[static_cast<size_t>(free_idx[static_cast<size_t>(a)])] = y[static_cast<size_t>(a)];
        } catch (const std::runtime_error&) {
          solved = false;
        }
      }
      if (solved) {
        bool feasible = true;
        for (int i = 0; i < n && feasible; ++i) {
          const double slack = 1e-10 * (1.0 + std::abs(x[static_cast<size_t>(i)]));
          if (x[static_cast<size_t>(i)] < l[static_cast<size_t>(i)] - slack ||
              x[static_cast<size_t>(i)] > u[static_cast<size_t>(i)] + slack)
            feasible = false;
        }
        if (feasible) {
          const double q = box_qp_objective(k, f, x);
          if (!best.found || q < best.objective) {
            best.found = true;
            best.objective = q;
            best.x = x;
          }
        }
      }
    }
    int carry = 0;
    while (carry < n && ++state[static_cast<size_t>(carry)] == 3) state[static_cast<size_t>(carry++)] = 0;
    if (carry == n) break;
  }
  return best;
}

}  // namespace oracle
