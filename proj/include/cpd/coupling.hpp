// Staggered driver: per load step, solve equilibrium with the concentration
// frozen at the previous step, then re-solve steady diffusion on the updated
// strain field, and carry the new concentration into the next step.
#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpd/deformation.hpp"
#include "cpd/diffusion.hpp"
#include "cpd/mesh.hpp"

namespace cpd {

class CouplingError : public std::runtime_error {
 public:
  explicit CouplingError(const std::string& what) : std::runtime_error(what) {}
};

// Uncoupled: constitutive sees c = 0 and diffusion uses the base tensor.
// OneWay: diffusion uses the base tensor, deformation sees c.
// TwoWay: diffusion additionally sees the strain invariant field.
enum class CouplingMode { Uncoupled, OneWay, TwoWay };

// Classical Galerkin solve vs the bound-constrained formulation.
enum class DiffusionPath { Cg, Nn };

struct LoadStep {
  double time = 0.0;   // seconds
  double scale = 0.0;  // fraction of the peak load in [0, 1]
};

struct LoadSchedule {
  std::vector<LoadStep> steps;
  void validate() const;  // strictly increasing times, scales in [0, 1]
};

// 26 steps over 2.2 s: one large 0.44 s increment, 17 equal increments to
// the 1.2 s peak, then unloading resolved with 0.2 s and finally 0.05 s
// increments. Scale ramps t/1.2 up and (2.4 - t)/1.2 down.
LoadSchedule default_load_schedule();

struct CoupledState {
  NodalField displacement;             // Vector2
  NodalField concentration;            // Scalar
  std::vector<QuadPointState> states;  // per element
  int step = 0;                        // 1-based index of the producing step
};

// One row of the run report, mirroring the benchmark table columns.
struct StepRecord {
  int step = 0;  // 1-based
  double time = 0.0;
  double load_scale = 0.0;
  int newton_iterations = 0;
  double def_assembly_s = 0.0;
  double def_solve_s = 0.0;
  int diffusion_iterations = 0;
  long long pcg_total = 0;
  double diff_assembly_s = 0.0;
  double diff_solve_s = 0.0;
  double violation_pct = 0.0;
  double min_c = 0.0;
  double max_c = 0.0;
  double plastic_zone_pct = 0.0;
  std::array<double, 2> probe_a{0.0, 0.0};  // mean displacement of probe set A
  std::array<double, 2> probe_b{0.0, 0.0};
};

struct RunReport {
  std::vector<StepRecord> rows;  // one per load step
};

struct CoupledProblem {
  const Mesh* mesh = nullptr;
  MaterialParams mat;
  ModelVariant model = ModelVariant::ModelI;
  CouplingMode mode = CouplingMode::TwoWay;
  DiffusionPath path = DiffusionPath::Nn;
  double c_min = 0.0;
  double c_max = std::numeric_limits<double>::infinity();
  DeformationBC deformation_bc;  // value/traction functions receive the scale
  DiffusionBC diffusion_bc;
  LoadSchedule schedule;
  DeformationOpts deformation_opts;
  // Initial concentration: pure-diffusion solve at zero strain (default) or
  // the literal zero field.
  bool zero_initial_concentration = false;
  // Warm-start each constrained diffusion solve from the previous step's
  // concentration. Off by default so every step's iteration counts measure
  // a full solve.
  bool warm_start_diffusion = false;
  std::string probe_a = "point_A";  // node sets probed into the report
  std::string probe_b = "point_B";
  int snapshot_every = 1;  // 0 disables field snapshots
};

struct CoupledRun {
  RunReport report;
  CoupledState final_state;
  std::vector<CoupledState> history;  // snapshots at configured steps
};

// 100 x (elements with kappa > 0) / element count.
double plastic_zone_percentage(std::span<const QuadPointState> states);

// In-plane strain trace per element for a displacement field.
std::vector<double> element_strain_invariants(const Mesh& mesh,
                                              std::span<const double> u);

// Runs the full staggered loop. Throws CouplingError with the failing step
// index when a subproblem fails.
CoupledRun run_coupled(const CoupledProblem& problem);

}  // namespace cpd
