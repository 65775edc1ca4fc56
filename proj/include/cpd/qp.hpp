// Box-constrained convex quadratic programming: minimize 1/2 c^T K c - f^T c
// subject to lower <= c <= upper, solved with a reflective trust-region
// method (affine scaling by the distance to the active bounds, a two
// dimensional subspace model, and reflected step candidates). Inner Newton
// systems use diagonally preconditioned conjugate gradients. An independent
// first-order (KKT) certifier checks any candidate point.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cpd/linalg.hpp"

namespace cpd {

class QpError : public std::runtime_error {
 public:
  explicit QpError(const std::string& what) : std::runtime_error(what) {}
};

// Bounds may be -inf / +inf componentwise; lower <= upper is required and
// K must be symmetric (checked against the stored pattern).
struct QpProblem {
  SparseMatrix K;
  std::vector<double> f;
  std::vector<double> lower;
  std::vector<double> upper;

  int size() const { return static_cast<int>(f.size()); }
  void validate() const;
};

struct TrustRegionOpts {
  // Stop when the projected-gradient norm falls below rel_tol times its
  // value at the starting point.
  double rel_tol = 1e-14;
  // Relative residual tolerance of the inner PCG solves for the Newton
  // direction of the scaled model.
  double pcg_tol = 0.1;
  int max_outer = 200;
  // Initial trust-region radius in the scaled space; <= 0 selects an
  // automatic radius proportional to the scaled gradient (hence to ||f||
  // for a cold start).
  double initial_radius = 0.0;

  void validate() const;
};

struct QpSolution {
  std::vector<double> c;
  std::vector<double> lambda_min;  // multipliers of the lower bounds, >= 0
  std::vector<double> lambda_max;  // multipliers of the upper bounds, >= 0
  int outer_iterations = 0;
  long long pcg_iterations_total = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
  // True when the projected-gradient stopping test was met or the final
  // point certifies first-order optimality (kkt_residual <= 1e-8). A false
  // value reports a max_outer / stagnation exit; the fields above still
  // describe the best point found.
  bool converged = false;
};

struct KktReport {
  double residual = 0.0;        // max of the component measures below
  double stationarity = 0.0;    // ||Kc - f - lambda_min + lambda_max|| / (1 + ||f||)
  double feasibility = 0.0;     // max bound overshoot (absolute)
  double negativity = 0.0;      // most negative multiplier (absolute)
  double complementarity = 0.0; // |(c-l).lambda_min| + |(u-c).lambda_max|, scaled by 1 + ||f||
  std::vector<double> lambda_min;
  std::vector<double> lambda_max;
};

// Multipliers are recovered from the gradient g = Kc - f restricted to the
// active set; a bound counts as active within 1e-12 * (upper - lower)
// (absolute 1e-12 when the opposite bound is infinite).
KktReport kkt_residual(const QpProblem& problem, std::span<const double> candidate);

// warm_start (optional) is projected into the box and nudged strictly
// inside before iterating.
QpSolution solve_box_qp(const QpProblem& problem, const TrustRegionOpts& opts = {},
                        const std::vector<double>* warm_start = nullptr);

}  // namespace cpd
