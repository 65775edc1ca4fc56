#include "cpd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>

#include "cpd/parallel.hpp"

namespace cpd {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         std::span<const Triplet> entries) {
  if (rows < 0 || cols < 0) throw LinalgError("negative matrix dimension");
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw LinalgError("triplet index out of range: (" +
                        std::to_string(t.row) + ", " + std::to_string(t.col) +
                        ")");
  }
  std::vector<Triplet> sorted(entries.begin(), entries.end());
  std::sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_.assign(static_cast<size_t>(rows) + 1, 0);
  m.col_ind_.reserve(sorted.size());
  m.values_.reserve(sorted.size());
  size_t i = 0;
  for (int r = 0; r < rows; ++r) {
    while (i < sorted.size() && sorted[i].row == r) {
      const int c = sorted[i].col;
      double v = 0.0;
      while (i < sorted.size() && sorted[i].row == r && sorted[i].col == c) {
        v += sorted[i].value;
        ++i;
      }
      m.col_ind_.push_back(c);
      m.values_.push_back(v);
    }
    m.row_ptr_[static_cast<size_t>(r) + 1] = static_cast<int>(m.col_ind_.size());
  }
  return m;
}

void SparseMatrix::multiply(std::span<const double> x,
                            std::span<double> y) const {
  if (static_cast<int>(x.size()) != cols_ || static_cast<int>(y.size()) != rows_)
    throw LinalgError("spmv dimension mismatch");
  parallel_for(rows_, [&](int r) {
    double acc = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      acc += values_[k] * x[col_ind_[k]];
    y[r] = acc;
  });
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(static_cast<size_t>(rows_));
  multiply(x, y);
  return y;
}

double SparseMatrix::coeff(int row, int col) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_)
    throw LinalgError("coeff index out of range");
  const int* begin = col_ind_.data() + row_ptr_[row];
  const int* end = col_ind_.data() + row_ptr_[row + 1];
  const int* it = std::lower_bound(begin, end, col);
  if (it != end && *it == col) return values_[static_cast<size_t>(it - col_ind_.data())];
  return 0.0;
}

std::vector<double> SparseMatrix::diagonal() const {
  const int n = std::min(rows_, cols_);
  std::vector<double> d(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) d[static_cast<size_t>(i)] = coeff(i, i);
  return d;
}

double SparseMatrix::symmetry_error() const {
  if (rows_ != cols_) throw LinalgError("symmetry check on non-square matrix");
  double err = 0.0;
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      err = std::max(err, std::abs(values_[k] - coeff(col_ind_[k], r)));
  return err;
}

void SparseMatrix::write_matrix_market(std::ostream& os) const {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << rows_ << ' ' << cols_ << ' ' << values_.size() << '\n';
  os.precision(17);
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      os << r + 1 << ' ' << col_ind_[k] + 1 << ' ' << values_[k] << '\n';
}

namespace {

// Symmetrized adjacency (pattern of A + A^T, no diagonal).
std::vector<std::vector<int>> build_adjacency(const SparseMatrix& a) {
  const int n = a.rows();
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  const auto rp = a.row_ptr();
  const auto ci = a.col_ind();
  for (int r = 0; r < n; ++r) {
    for (int k = rp[r]; k < rp[r + 1]; ++k) {
      const int c = ci[k];
      if (c == r) continue;
      adj[static_cast<size_t>(r)].push_back(c);
      adj[static_cast<size_t>(c)].push_back(r);
    }
  }
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return adj;
}

}  // namespace

std::vector<int> reverse_cuthill_mckee(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw LinalgError("RCM needs a square matrix");
  const int n = a.rows();
  const auto adj = build_adjacency(a);

  std::vector<int> order;
  order.reserve(static_cast<size_t>(n));
  std::vector<char> visited(static_cast<size_t>(n), 0);
  std::vector<int> degree(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) degree[static_cast<size_t>(i)] = static_cast<int>(adj[static_cast<size_t>(i)].size());

  for (;;) {
    int start = -1;
    for (int i = 0; i < n; ++i) {
      if (visited[static_cast<size_t>(i)]) continue;
      if (start < 0 || degree[static_cast<size_t>(i)] < degree[static_cast<size_t>(start)]) start = i;
    }
    if (start < 0) break;
    std::queue<int> q;
    q.push(start);
    visited[static_cast<size_t>(start)] = 1;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      order.push_back(v);
      std::vector<int> next;
      for (int w : adj[static_cast<size_t>(v)])
        if (!visited[static_cast<size_t>(w)]) next.push_back(w);
      std::sort(next.begin(), next.end(), [&](int x, int y) {
        return degree[static_cast<size_t>(x)] != degree[static_cast<size_t>(y)]
                   ? degree[static_cast<size_t>(x)] < degree[static_cast<size_t>(y)]
                   : x < y;
      });
      for (int w : next) {
        visited[static_cast<size_t>(w)] = 1;
        q.push(w);
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

SkylineLDLT SkylineLDLT::factorize(const SparseMatrix& a, bool require_spd) {
  if (a.rows() != a.cols()) throw LinalgError("factorize needs a square matrix");
  const int n = a.rows();
  SkylineLDLT f;
  f.n_ = n;
  f.perm_ = reverse_cuthill_mckee(a);
  f.inv_perm_.assign(static_cast<size_t>(n), 0);
  for (int k = 0; k < n; ++k) f.inv_perm_[static_cast<size_t>(f.perm_[static_cast<size_t>(k)])] = k;

  // Envelope of the permuted symmetrized pattern.
  f.col_start_.assign(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) f.col_start_[static_cast<size_t>(i)] = i;
  const auto rp = a.row_ptr();
  const auto ci = a.col_ind();
  for (int r = 0; r < n; ++r) {
    const int pr = f.inv_perm_[static_cast<size_t>(r)];
    for (int k = rp[r]; k < rp[r + 1]; ++k) {
      const int pc = f.inv_perm_[static_cast<size_t>(ci[k])];
      const int hi = std::max(pr, pc);
      const int lo = std::min(pr, pc);
      f.col_start_[static_cast<size_t>(hi)] = std::min(f.col_start_[static_cast<size_t>(hi)], lo);
    }
  }
  f.row_ptr_.assign(static_cast<size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i)
    f.row_ptr_[static_cast<size_t>(i) + 1] =
        f.row_ptr_[static_cast<size_t>(i)] + (i - f.col_start_[static_cast<size_t>(i)]);
  f.env_.assign(static_cast<size_t>(f.row_ptr_[static_cast<size_t>(n)]), 0.0);
  f.diag_.assign(static_cast<size_t>(n), 0.0);

  // Scatter values of the permuted matrix into the envelope.
  for (int r = 0; r < n; ++r) {
    const int pr = f.inv_perm_[static_cast<size_t>(r)];
    for (int k = rp[r]; k < rp[r + 1]; ++k) {
      const int pc = f.inv_perm_[static_cast<size_t>(ci[k])];
      const double v = a.values()[k];
      if (pc == pr) {
        f.diag_[static_cast<size_t>(pr)] = v;
      } else if (pc < pr) {
        f.env_[static_cast<size_t>(f.row_ptr_[static_cast<size_t>(pr)] + (pc - f.col_start_[static_cast<size_t>(pr)]))] = v;
      }
      // Upper-triangle entries are the transposes of stored ones; the
      // factorization reads only the lower triangle.
    }
  }

  double max_diag = 0.0;
  for (double d : f.diag_) max_diag = std::max(max_diag, std::abs(d));
  const double tiny = 1e-14 * std::max(max_diag, 1.0);

  for (int i = 0; i < n; ++i) {
    const int ci0 = f.col_start_[static_cast<size_t>(i)];
    double* li = f.env_.data() + f.row_ptr_[static_cast<size_t>(i)] - ci0;
    for (int j = ci0; j < i; ++j) {
      const int cj0 = f.col_start_[static_cast<size_t>(j)];
      const double* lj = f.env_.data() + f.row_ptr_[static_cast<size_t>(j)] - cj0;
      double sum = li[j];
      for (int k = std::max(ci0, cj0); k < j; ++k)
        sum -= li[k] * f.diag_[static_cast<size_t>(k)] * lj[k];
      li[j] = sum / f.diag_[static_cast<size_t>(j)];
    }
    double d = f.diag_[static_cast<size_t>(i)];
    for (int k = ci0; k < i; ++k) d -= li[k] * li[k] * f.diag_[static_cast<size_t>(k)];
    if (require_spd && d <= 0.0)
      throw LinalgError("non-positive pivot " + std::to_string(d) + " at row " +
                        std::to_string(i) + ": matrix is not positive definite");
    if (std::abs(d) <= tiny)
      throw LinalgError("near-zero pivot at row " + std::to_string(i) +
                        ": matrix is singular to working precision");
    f.diag_[static_cast<size_t>(i)] = d;
  }
  return f;
}

std::vector<double> SkylineLDLT::solve(std::span<const double> b) const {
  if (static_cast<int>(b.size()) != n_) throw LinalgError("solve dimension mismatch");
  std::vector<double> y(static_cast<size_t>(n_));
  for (int k = 0; k < n_; ++k) y[static_cast<size_t>(k)] = b[static_cast<size_t>(perm_[static_cast<size_t>(k)])];

  // L y' = y
  for (int i = 0; i < n_; ++i) {
    const int c0 = col_start_[static_cast<size_t>(i)];
    const double* li = env_.data() + row_ptr_[static_cast<size_t>(i)] - c0;
    double acc = y[static_cast<size_t>(i)];
    for (int k = c0; k < i; ++k) acc -= li[k] * y[static_cast<size_t>(k)];
    y[static_cast<size_t>(i)] = acc;
  }
  for (int i = 0; i < n_; ++i) y[static_cast<size_t>(i)] /= diag_[static_cast<size_t>(i)];
  // L^T x = y'
  for (int i = n_ - 1; i >= 0; --i) {
    const int c0 = col_start_[static_cast<size_t>(i)];
    const double* li = env_.data() + row_ptr_[static_cast<size_t>(i)] - c0;
    const double yi = y[static_cast<size_t>(i)];
    for (int k = c0; k < i; ++k) y[static_cast<size_t>(k)] -= li[k] * yi;
  }
  std::vector<double> x(static_cast<size_t>(n_));
  for (int k = 0; k < n_; ++k) x[static_cast<size_t>(perm_[static_cast<size_t>(k)])] = y[static_cast<size_t>(k)];
  return x;
}

std::vector<double> cholesky_solve(const SparseMatrix& a,
                                   std::span<const double> b) {
  return SkylineLDLT::factorize(a, /*require_spd=*/true).solve(b);
}

PcgResult pcg_solve(
    int n, const std::function<void(std::span<const double>, std::span<double>)>& apply,
    std::span<const double> precond_diag, std::span<const double> b,
    double rel_tol, int max_iterations) {
  if (static_cast<int>(b.size()) != n || static_cast<int>(precond_diag.size()) != n)
    throw LinalgError("pcg dimension mismatch");
  for (double d : precond_diag)
    if (!(d > 0.0)) throw LinalgError("pcg preconditioner diagonal not positive");

  PcgResult res;
  res.x.assign(static_cast<size_t>(n), 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(static_cast<size_t>(n)), p(static_cast<size_t>(n)), ap(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] / precond_diag[static_cast<size_t>(i)];
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < max_iterations; ++it) {
    apply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0))
      throw LinalgError("pcg breakdown: operator not positive definite (p^T A p = " +
                        std::to_string(pap) + ")");
    const double alpha = rz / pap;
    for (int i = 0; i < n; ++i) {
      res.x[static_cast<size_t>(i)] += alpha * p[static_cast<size_t>(i)];
      r[static_cast<size_t>(i)] -= alpha * ap[static_cast<size_t>(i)];
    }
    res.iterations = it + 1;
    res.relative_residual = norm2(r) / bnorm;
    if (res.relative_residual <= rel_tol) {
      res.converged = true;
      return res;
    }
    for (int i = 0; i < n; ++i) z[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] / precond_diag[static_cast<size_t>(i)];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int i = 0; i < n; ++i) p[static_cast<size_t>(i)] = z[static_cast<size_t>(i)] + beta * p[static_cast<size_t>(i)];
  }
  return res;
}

PcgResult pcg_solve(const SparseMatrix& a, std::span<const double> b,
                    double rel_tol, int max_iterations) {
  std::vector<double> diag = a.diagonal();
  for (double& d : diag)
    if (d == 0.0) d = 1.0;
  return pcg_solve(
      a.rows(),
      [&a](std::span<const double> x, std::span<double> y) { a.multiply(x, y); },
      diag, b, rel_tol, max_iterations);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace cpd
