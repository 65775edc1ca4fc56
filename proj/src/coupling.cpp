#include "cpd/coupling.hpp"

#include <cmath>
#include <utility>

namespace cpd {
namespace {

std::array<double, 2> probe_mean(const Mesh& mesh, const std::string& set,
                                 std::span<const double> u) {
  const auto& nodes = mesh.node_set(set);
  std::array<double, 2> mean{0.0, 0.0};
  for (int n : nodes) {
    mean[0] += u[2 * n];
    mean[1] += u[2 * n + 1];
  }
  mean[0] /= static_cast<double>(nodes.size());
  mean[1] /= static_cast<double>(nodes.size());
  return mean;
}

std::vector<double> element_means(const Mesh& mesh, std::span<const double> nodal) {
  std::vector<double> out(mesh.elements.size());
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& conn = mesh.elements[e];
    out[e] = (nodal[conn[0]] + nodal[conn[1]] + nodal[conn[2]]) / 3.0;
  }
  return out;
}

}  // namespace

void LoadSchedule::validate() const {
  if (steps.empty()) throw CouplingError("load schedule has no steps");
  double prev = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i].time > prev))
      throw CouplingError("load schedule times must be strictly increasing and positive");
    if (!(steps[i].scale >= 0.0) || !(steps[i].scale <= 1.0))
      throw CouplingError("load scales must lie in [0, 1]");
    prev = steps[i].time;
  }
}

LoadSchedule default_load_schedule() {
  LoadSchedule s;
  const double t_peak = 1.2;
  auto push = [&](double t) {
    const double scale = (t <= t_peak) ? t / t_peak : (2.0 * t_peak - t) / t_peak;
    s.steps.push_back({t, scale});
  };
  push(0.44);
  for (int i = 1; i < 17; ++i) push(0.44 + i * (t_peak - 0.44) / 17.0);
  push(t_peak);  // exact peak, immune to increment round-off
  for (int i = 1; i <= 4; ++i) push(t_peak + 0.2 * i);
  for (int i = 1; i <= 4; ++i) push(2.0 + 0.05 * i);
  s.steps.back().time = 2.2;  // exact endpoint, no accumulation dust
  s.validate();
  return s;
}

double plastic_zone_percentage(std::span<const QuadPointState> states) {
  if (states.empty()) return 0.0;
  int yielded = 0;
  for (const auto& st : states)
    if (st.kappa > 0.0) ++yielded;
  return 100.0 * yielded / static_cast<double>(states.size());
}

std::vector<double> element_strain_invariants(const Mesh& mesh,
                                              std::span<const double> u) {
  std::vector<double> inv(mesh.elements.size(), 0.0);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto geo = element_geometry(mesh, e);
    const auto& conn = mesh.elements[e];
    double tr = 0.0;
    for (int i = 0; i < 3; ++i)
      tr += geo.dN[i][0] * u[2 * conn[i]] + geo.dN[i][1] * u[2 * conn[i] + 1];
    inv[e] = tr;
  }
  return inv;
}

CoupledRun run_coupled(const CoupledProblem& p) {
  if (!p.mesh) throw CouplingError("coupling: no mesh configured");
  const Mesh& mesh = *p.mesh;
  p.mat.validate();
  p.schedule.validate();
  if (!(p.c_min <= p.c_max)) throw CouplingError("coupling: c_min must not exceed c_max");
  if (p.snapshot_every < 0) throw CouplingError("coupling: snapshot_every must be >= 0");
  mesh.node_set(p.probe_a);  // resolve early; throws on unknown sets
  mesh.node_set(p.probe_b);

  const DiffusivityModel dmodel = DiffusivityModel::from_material(
      p.mat, p.mode == CouplingMode::TwoWay ? DiffusivityMode::TwoWay
                                            : DiffusivityMode::OneWay);

  auto solve_diffusion = [&](std::span<const double> invariants,
                             const std::vector<double>* warm) {
    const DiffusionSystem sys =
        assemble_diffusion(mesh, invariants, p.diffusion_bc, dmodel, p.mat.m_source);
    return p.path == DiffusionPath::Nn ? solve_nn_path(sys, p.c_min, p.c_max, warm)
                                       : solve_cg_path(sys, p.c_min, p.c_max);
  };

  std::vector<double> u(2 * mesh.nodes.size(), 0.0);
  std::vector<QuadPointState> states(mesh.elements.size());
  std::vector<double> c(mesh.nodes.size(), 0.0);
  if (!p.zero_initial_concentration) {
    try {
      c = solve_diffusion({}, nullptr).c.values;
    } catch (const std::exception& err) {
      throw CouplingError(std::string("coupling: initial diffusion solve failed: ") +
                          err.what());
    }
  }

  CoupledRun run;
  run.report.rows.reserve(p.schedule.steps.size());
  const int n_steps = static_cast<int>(p.schedule.steps.size());
  for (int k = 0; k < n_steps; ++k) {
    const LoadStep& step = p.schedule.steps[k];
    StepRecord row;
    row.step = k + 1;
    row.time = step.time;
    row.load_scale = step.scale;

    DeformationStepResult def;
    try {
      const std::vector<double> c_elem =
          p.mode == CouplingMode::Uncoupled ? std::vector<double>{}
                                            : element_means(mesh, c);
      def = solve_load_step(mesh, states, u, p.deformation_bc, step.scale, c_elem,
                            p.model, p.mat, p.deformation_opts);
    } catch (const std::exception& err) {
      throw CouplingError("coupling: deformation solve failed at step " +
                          std::to_string(k + 1) + ": " + err.what());
    }
    u = std::move(def.displacement.values);
    states = std::move(def.states);
    row.newton_iterations = def.newton_iterations;
    row.def_assembly_s = def.assembly_time;
    row.def_solve_s = def.solve_time;
    row.plastic_zone_pct = plastic_zone_percentage(states);

    DiffusionResult diff;
    try {
      const std::vector<double> invariants =
          p.mode == CouplingMode::TwoWay ? element_strain_invariants(mesh, u)
                                         : std::vector<double>{};
      diff = solve_diffusion(invariants, p.warm_start_diffusion ? &c : nullptr);
    } catch (const std::exception& err) {
      throw CouplingError("coupling: diffusion solve failed at step " +
                          std::to_string(k + 1) + ": " + err.what());
    }
    c = std::move(diff.c.values);
    row.diffusion_iterations = diff.solver_iterations;
    row.pcg_total = diff.pcg_total_iterations;
    row.diff_assembly_s = diff.assembly_time;
    row.diff_solve_s = diff.solve_time;
    row.violation_pct = diff.violation_pct;
    row.min_c = diff.min_c;
    row.max_c = diff.max_c;
    row.probe_a = probe_mean(mesh, p.probe_a, u);
    row.probe_b = probe_mean(mesh, p.probe_b, u);
    run.report.rows.push_back(row);

    if (p.snapshot_every > 0 && ((k + 1) % p.snapshot_every == 0 || k + 1 == n_steps)) {
      CoupledState snap;
      snap.step = k + 1;
      snap.displacement = {NodalField::Kind::Vector2, u};
      snap.concentration = {NodalField::Kind::Scalar, c};
      snap.states = states;
      run.history.push_back(std::move(snap));
    }
  }

  run.final_state.displacement = {NodalField::Kind::Vector2, std::move(u)};
  run.final_state.concentration = {NodalField::Kind::Scalar, std::move(c)};
  run.final_state.states = std::move(states);
  run.final_state.step = n_steps;
  return run;
}

}  // namespace cpd
