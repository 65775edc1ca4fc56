// Plane-stress FEM equilibrium: constitutive sweeps over the elements,
// residual and tangent assembly, and the incremental Newton driver for one
// load step. Displacement fields are flat vectors [u0x, u0y, u1x, ...].
#pragma once

#include <array>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpd/constitutive.hpp"
#include "cpd/linalg.hpp"
#include "cpd/mesh.hpp"

namespace cpd {

class DeformationError : public std::runtime_error {
 public:
  explicit DeformationError(const std::string& what) : std::runtime_error(what) {}
};

struct DeformationBC {
  struct Dirichlet {
    std::string node_set;
    int component = 0;  // 0 = x, 1 = y
    std::function<double(double)> value;  // prescribed displacement at time t
  };
  struct Neumann {
    std::string edge_tag;
    std::function<std::array<double, 2>(double)> traction;  // force per length
  };
  std::vector<Dirichlet> dirichlet;  // must constrain rigid-body motion
  std::vector<Neumann> neumann;
};

// Constrained/free splitting of the 2 * node_count displacement dofs at a
// fixed time. Conflicting prescriptions of one dof are rejected.
struct DofMap {
  std::vector<int> free_dofs;      // ascending dof ids (2 * node + component)
  std::vector<int> reduced_index;  // per dof; -1 when constrained
  std::vector<double> prescribed;  // per dof; 0 for free dofs

  static DofMap build(const Mesh& mesh, const DeformationBC& bc, double t);
  int free_count() const { return static_cast<int>(free_dofs.size()); }
};

// Output of one constitutive pass over all elements at a trial displacement.
struct StressSweep {
  std::vector<QuadPointState> states;  // updated (uncommitted) states
  std::vector<Mat3> tangents;          // consistent plane-stress tangents
  std::vector<double> delta_gamma;     // plastic increment per element
  int max_local_iterations = 0;        // worst local Newton across elements
};

// Runs stress_update on every element for the increment u_trial - u_n and
// returns the residual r = f_int - f_ext(t) with Dirichlet rows zeroed.
// c_elem holds one concentration per element (empty = zero). The sweep
// (updated states, tangents) is written to *sweep when provided.
std::vector<double> assemble_residual(const Mesh& mesh,
                                      const std::vector<QuadPointState>& states_n,
                                      std::span<const double> u_n,
                                      std::span<const double> u_trial,
                                      const DeformationBC& bc, double t,
                                      std::span<const double> c_elem, ModelVariant model,
                                      const MaterialParams& mat,
                                      StressSweep* sweep = nullptr);

// External load vector (tractions + body force) at time t, no Dirichlet rows
// zeroed; used for convergence floors and reaction bookkeeping.
std::vector<double> assemble_external(const Mesh& mesh, const DeformationBC& bc, double t,
                                      const MaterialParams& mat);

// Tangent stiffness from a sweep: K = sum_e area B^T C_alg B. With condense,
// the matrix is reduced to the free dofs (rows and columns eliminated).
SparseMatrix assemble_jacobian(const Mesh& mesh, const StressSweep& sweep,
                               const DofMap* condense = nullptr);

struct DeformationOpts {
  double rel_tol = 1e-6;
  int max_newton = 60;
};

struct DeformationStepResult {
  NodalField displacement;             // Vector2: total displacement u_{n+1}
  std::vector<QuadPointState> states;  // committed states at convergence
  std::vector<double> delta_gamma;     // per element, from the converged sweep
  int newton_iterations = 0;           // number of linear solves
  std::vector<double> residual_norms;  // free-dof residual per evaluation
  std::vector<double> reaction;        // f_int - f_ext at convergence (full)
  double assembly_time = 0.0;
  double solve_time = 0.0;
  bool used_pcg_fallback = false;
};

// Incremental Newton with full steps from the committed states_n and total
// displacement u_n; prescribed dofs move to their time-t values before the
// first iteration, then stay fixed. States commit only on convergence.
// Throws DeformationError (with the residual history in the message) when
// max_newton is exhausted.
DeformationStepResult solve_load_step(const Mesh& mesh,
                                      const std::vector<QuadPointState>& states_n,
                                      std::span<const double> u_n,
                                      const DeformationBC& bc, double t,
                                      std::span<const double> c_elem, ModelVariant model,
                                      const MaterialParams& mat,
                                      const DeformationOpts& opts = {});

}  // namespace cpd
