// Anisotropic steady diffusion: strain-dependent diffusivity evaluation,
// P1 FEM assembly with Dirichlet condensation, and two solution paths for
// the condensed SPD system: the classical Galerkin solve (which may violate
// physical bounds) and the bound-constrained non-negative solve (a box QP).
#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpd/constitutive.hpp"
#include "cpd/linalg.hpp"
#include "cpd/mesh.hpp"
#include "cpd/qp.hpp"

namespace cpd {

class DiffusionError : public std::runtime_error {
 public:
  explicit DiffusionError(const std::string& what) : std::runtime_error(what) {}
};

enum class DiffusivityMode { OneWay, TwoWay };

// Symmetric 2x2 diffusivity tensor.
struct DiffusivityTensor {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
};

struct DiffusivityModel {
  DiffusivityMode mode = DiffusivityMode::OneWay;
  double d1 = 1.0;
  double d2 = 1.0;
  double theta = 0.0;  // principal-axis angle, radians
  double eta_T = 1.0;
  double eta_S = 1.0;
  double E_ref = 1e-3;
  double phi_T = 1.0;
  double phi_S = 1.0;

  static DiffusivityModel from_material(const MaterialParams& mat, DiffusivityMode mode);
  void validate() const;
};

// D(I_E) = D0 + (phi_T - 1) D0 r_T(I_E) + (phi_S - 1) D0 r_S(I_E) with
// r(I) = (e^{eta I} - 1)/(e^{eta E_ref} - 1) (the ratio degenerates to
// I/E_ref as eta -> 0). One-way mode ignores the strain. If the combined
// scalar factor drives an eigenvalue below 1e-9 min(d1, d2) it is floored
// there and *floored is set.
DiffusivityTensor diffusivity_at(double strain_invariant, const DiffusivityModel& model,
                                 bool* floored = nullptr);

struct DiffusionBC {
  struct Dirichlet {
    std::string node_set;
    double value = 0.0;
  };
  struct Neumann {
    std::string edge_tag;
    double flux = 0.0;  // prescribed inflow per unit length
  };
  std::vector<Dirichlet> dirichlet;  // must be nonempty
  std::vector<Neumann> neumann;
};

// Condensed system K c_free = f with Dirichlet values eliminated. Free nodes
// are kept in ascending node order, so the classical and constrained paths
// act on the identical reduced operator.
struct DiffusionSystem {
  SparseMatrix K;
  std::vector<double> f;
  std::vector<int> free_nodes;      // ascending original node indices
  std::vector<double> dirichlet_c;  // node_count entries; free slots are 0
  std::vector<bool> is_dirichlet;
  double max_dirichlet = 0.0;
  double min_dirichlet = 0.0;
  int floored_evaluations = 0;  // SPD-floor events during assembly
  double assembly_seconds = 0.0;

  int node_count() const { return static_cast<int>(dirichlet_c.size()); }
  // Scatter a reduced vector into a full nodal field (Dirichlet data filled).
  std::vector<double> expand(std::span<const double> reduced) const;
  // Gather the free entries of a full nodal vector.
  std::vector<double> restrict_free(std::span<const double> full) const;
};

// element_strain_invariant holds the in-plane strain trace per element
// (empty means zero strain everywhere, e.g. the uncoupled or one-way case).
DiffusionSystem assemble_diffusion(const Mesh& mesh,
                                   std::span<const double> element_strain_invariant,
                                   const DiffusionBC& bc, const DiffusivityModel& model,
                                   double m_source = 0.0);

struct DiffusionResult {
  NodalField c;
  int solver_iterations = 0;
  long long pcg_total_iterations = 0;  // inner CG work of the NN path
  double assembly_time = 0.0;
  double solve_time = 0.0;
  double violation_pct = 0.0;
  double min_c = 0.0;
  double max_c = 0.0;
};

// Percentage of nodes outside [c_min - 1e-12, c_max + 1e-12].
double violation_metrics(const NodalField& c, double c_min, double c_max);

// Classical Galerkin path: diagonally preconditioned CG to relative 1e-6.
// Violations are measured against [c_min, c_max] but not corrected.
DiffusionResult solve_cg_path(const DiffusionSystem& system, double c_min, double c_max);

// Non-negative (bound-constrained) path: reflective trust-region QP on the
// same reduced system. The result satisfies the bounds within 1e-10 and a
// KKT residual of 1e-8; warm_start_full (optional) is a full nodal field.
DiffusionResult solve_nn_path(const DiffusionSystem& system, double c_min, double c_max,
                              const std::vector<double>* warm_start_full = nullptr);

}  // namespace cpd
