// Sparse linear algebra shared by the FEM and QP solvers: CSR storage,
// reverse Cuthill-McKee ordering, skyline LDLT factorization, and a
// diagonally preconditioned conjugate gradient.
#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpd {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

class LinalgError : public std::runtime_error {
 public:
  explicit LinalgError(const std::string& what) : std::runtime_error(what) {}
};

// Compressed-row sparse matrix. Column indices are sorted and unique per row.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  // Duplicate (row, col) entries are summed. Entries that cancel exactly are
  // kept (structural zeros are legal); indices out of range throw.
  static SparseMatrix from_triplets(int rows, int cols,
                                    std::span<const Triplet> entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::span<const int> row_ptr() const { return row_ptr_; }
  std::span<const int> col_ind() const { return col_ind_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  // y = A x. Rows are independent, so the optional parallel split over rows
  // is bitwise identical to the serial product.
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;

  double coeff(int row, int col) const;
  std::vector<double> diagonal() const;

  // max |A_ij - A_ji| over the stored pattern (0 for exactly symmetric).
  double symmetry_error() const;

  // MatrixMarket coordinate format, 1-based indices.
  void write_matrix_market(std::ostream& os) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_ind_;
  std::vector<double> values_;
};

// Reverse Cuthill-McKee permutation of the symmetrized pattern of A.
// Returns perm with perm[k] = original index placed at position k.
std::vector<int> reverse_cuthill_mckee(const SparseMatrix& a);

// Symmetric skyline (envelope) LDLT of P A P^T with P from RCM. Only the
// lower triangle of A is read; A must be structurally symmetric.
class SkylineLDLT {
 public:
  // require_spd: reject non-positive pivots (Cholesky contract for SPD
  // input). Otherwise only pivots that are negligible relative to the
  // largest diagonal entry are rejected (near-singular matrix).
  static SkylineLDLT factorize(const SparseMatrix& a, bool require_spd);

  std::vector<double> solve(std::span<const double> b) const;

 private:
  int n_ = 0;
  std::vector<int> perm_;      // perm_[k] = original index at position k
  std::vector<int> inv_perm_;
  std::vector<int> col_start_; // first stored column of each skyline row
  std::vector<int> row_ptr_;   // offsets into env_ per row
  std::vector<double> env_;    // strictly-lower envelope entries
  std::vector<double> diag_;   // D of the LDLT
};

// Convenience wrapper with the SPD contract: non-positive pivot throws.
std::vector<double> cholesky_solve(const SparseMatrix& a,
                                   std::span<const double> b);

struct PcgResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

// Preconditioned conjugate gradient on a generic SPD operator.
// apply(x, y) must set y = A x; precond_diag holds the diagonal of the
// preconditioner M (solves use division by these entries). Indefiniteness
// (p^T A p <= 0) throws, signalling a bug upstream.
PcgResult pcg_solve(
    int n, const std::function<void(std::span<const double>, std::span<double>)>& apply,
    std::span<const double> precond_diag, std::span<const double> b,
    double rel_tol, int max_iterations);

// Matrix form of pcg_solve with the matrix's own diagonal as preconditioner.
PcgResult pcg_solve(const SparseMatrix& a, std::span<const double> b,
                    double rel_tol, int max_iterations);

// Vector kernels.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

}  // namespace cpd
