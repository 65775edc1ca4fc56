// Steady anisotropic diffusion assembly and the two solution paths.
//
// Assembly is exact for P1 elements with one centroid quadrature point
// (the diffusivity is constant per element). Element matrices are computed
// in parallel, then scattered serially in element order so the assembled
// values are bitwise independent of the thread count. Dirichlet degrees of
// freedom are eliminated in ascending node order.
#include "cpd/diffusion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <unordered_map>

#include "cpd/parallel.hpp"

namespace cpd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kViolationTol = 1e-12;

double exp_ratio(double eta, double strain, double e_ref) {
  if (eta == 0.0) return strain / e_ref;  // continuous limit of the ratio
  return std::expm1(eta * strain) / std::expm1(eta * e_ref);
}

}  // namespace

DiffusivityModel DiffusivityModel::from_material(const MaterialParams& mat,
                                                 DiffusivityMode mode) {
  DiffusivityModel m;
  m.mode = mode;
  m.d1 = mat.d1;
  m.d2 = mat.d2;
  m.theta = mat.theta;
  m.eta_T = mat.eta_T;
  m.eta_S = mat.eta_S;
  m.E_ref = mat.E_ref;
  m.phi_T = mat.phi_T;
  m.phi_S = mat.phi_S;
  m.validate();
  return m;
}

void DiffusivityModel::validate() const {
  if (!(d1 > 0.0) || !(d2 > 0.0))
    throw DiffusionError("diffusivity: principal values must be positive");
  if (!std::isfinite(theta)) throw DiffusionError("diffusivity: theta must be finite");
  if (mode == DiffusivityMode::TwoWay) {
    if (eta_T < 0.0 || eta_S < 0.0)
      throw DiffusionError("diffusivity: eta_T and eta_S must be nonnegative");
    if (E_ref == 0.0 || !std::isfinite(E_ref))
      throw DiffusionError("diffusivity: E_ref must be finite and nonzero");
  }
}

DiffusivityTensor diffusivity_at(double strain_invariant, const DiffusivityModel& model,
                                 bool* floored) {
  model.validate();
  if (floored) *floored = false;
  // Scalar factor on the base tensor; the phi = 1 terms vanish exactly so
  // the two-way model reduces bitwise to the one-way tensor.
  double s = 1.0;
  if (model.mode == DiffusivityMode::TwoWay) {
    if (model.phi_T != 1.0)
      s += (model.phi_T - 1.0) * exp_ratio(model.eta_T, strain_invariant, model.E_ref);
    if (model.phi_S != 1.0)
      s += (model.phi_S - 1.0) * exp_ratio(model.eta_S, strain_invariant, model.E_ref);
  }
  const double floor = 1e-9 * std::min(model.d1, model.d2);
  double e1 = s * model.d1;
  double e2 = s * model.d2;
  if (e1 < floor || e2 < floor) {
    e1 = std::max(e1, floor);
    e2 = std::max(e2, floor);
    if (floored) *floored = true;
  }
  const double c = std::cos(model.theta);
  const double sn = std::sin(model.theta);
  DiffusivityTensor d;
  d.xx = e1 * c * c + e2 * sn * sn;
  d.yy = e1 * sn * sn + e2 * c * c;
  d.xy = (e1 - e2) * sn * c;
  return d;
}

std::vector<double> DiffusionSystem::expand(std::span<const double> reduced) const {
  if (reduced.size() != free_nodes.size())
    throw DiffusionError("diffusion: reduced vector size mismatch");
  std::vector<double> full = dirichlet_c;
  for (std::size_t k = 0; k < free_nodes.size(); ++k) full[free_nodes[k]] = reduced[k];
  return full;
}

std::vector<double> DiffusionSystem::restrict_free(std::span<const double> full) const {
  if (static_cast<int>(full.size()) != node_count())
    throw DiffusionError("diffusion: full vector size mismatch");
  std::vector<double> reduced(free_nodes.size());
  for (std::size_t k = 0; k < free_nodes.size(); ++k) reduced[k] = full[free_nodes[k]];
  return reduced;
}

DiffusionSystem assemble_diffusion(const Mesh& mesh,
                                   std::span<const double> element_strain_invariant,
                                   const DiffusionBC& bc, const DiffusivityModel& model,
                                   double m_source) {
  const auto t0 = std::chrono::steady_clock::now();
  model.validate();
  const int n_nodes = static_cast<int>(mesh.nodes.size());
  const std::size_t n_elem = mesh.elements.size();
  if (!element_strain_invariant.empty() && element_strain_invariant.size() != n_elem)
    throw DiffusionError("diffusion: strain field size does not match element count");
  if (bc.dirichlet.empty())
    throw DiffusionError("diffusion: at least one Dirichlet set is required");

  struct Contribution {
    double ke[3][3];
    double fe[3];
    bool floored;
  };
  std::vector<Contribution> contrib(n_elem);
  parallel_for(n_elem, [&](std::size_t e) {
    const auto geo = element_geometry(mesh, static_cast<int>(e));
    const double inv = element_strain_invariant.empty() ? 0.0 : element_strain_invariant[e];
    auto& out = contrib[e];
    const DiffusivityTensor d = diffusivity_at(inv, model, &out.floored);
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        const double dx = d.xx * geo.dN[j][0] + d.xy * geo.dN[j][1];
        const double dy = d.xy * geo.dN[j][0] + d.yy * geo.dN[j][1];
        const double v = geo.area * (geo.dN[i][0] * dx + geo.dN[i][1] * dy);
        out.ke[i][j] = v;
        out.ke[j][i] = v;  // exact symmetry by construction
      }
      out.fe[i] = m_source * geo.area / 3.0;
    }
  });

  DiffusionSystem sys;
  sys.dirichlet_c.assign(n_nodes, 0.0);
  sys.is_dirichlet.assign(n_nodes, false);

  // Dirichlet data; conflicting prescriptions on a shared node are an error.
  std::vector<bool> seen(n_nodes, false);
  for (const auto& d : bc.dirichlet) {
    if (!std::isfinite(d.value))
      throw DiffusionError("diffusion: Dirichlet value must be finite");
    for (int node : mesh.node_set(d.node_set)) {
      if (seen[node] && sys.dirichlet_c[node] != d.value)
        throw DiffusionError("diffusion: conflicting Dirichlet values at node " +
                             std::to_string(node));
      seen[node] = true;
      sys.is_dirichlet[node] = true;
      sys.dirichlet_c[node] = d.value;
    }
  }
  sys.min_dirichlet = kInf;
  sys.max_dirichlet = -kInf;
  for (int i = 0; i < n_nodes; ++i) {
    if (!sys.is_dirichlet[i]) continue;
    sys.min_dirichlet = std::min(sys.min_dirichlet, sys.dirichlet_c[i]);
    sys.max_dirichlet = std::max(sys.max_dirichlet, sys.dirichlet_c[i]);
  }

  std::vector<int> reduced_index(n_nodes, -1);
  for (int i = 0; i < n_nodes; ++i) {
    if (!sys.is_dirichlet[i]) {
      reduced_index[i] = static_cast<int>(sys.free_nodes.size());
      sys.free_nodes.push_back(i);
    }
  }
  const int n_free = static_cast<int>(sys.free_nodes.size());

  // Serial scatter in element order: deterministic regardless of threads.
  std::vector<double> f_full(n_nodes, 0.0);
  std::vector<Triplet> triplets;
  triplets.reserve(n_elem * 9);
  sys.f.assign(n_free, 0.0);
  for (std::size_t e = 0; e < n_elem; ++e) {
    const auto& out = contrib[e];
    if (out.floored) ++sys.floored_evaluations;
    const auto& conn = mesh.elements[e];
    for (int i = 0; i < 3; ++i) {
      f_full[conn[i]] += out.fe[i];
      const int ri = reduced_index[conn[i]];
      if (ri < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int rj = reduced_index[conn[j]];
        if (rj >= 0) {
          triplets.push_back({ri, rj, out.ke[i][j]});
        } else {
          sys.f[ri] -= out.ke[i][j] * sys.dirichlet_c[conn[j]];
        }
      }
    }
  }
  for (const auto& nm : bc.neumann) {
    bool matched = false;
    for (const auto& edge : mesh.boundary_edges) {
      if (edge.tag != nm.edge_tag) continue;
      matched = true;
      const double dx = mesh.nodes[edge.b][0] - mesh.nodes[edge.a][0];
      const double dy = mesh.nodes[edge.b][1] - mesh.nodes[edge.a][1];
      const double half = 0.5 * nm.flux * std::hypot(dx, dy);
      f_full[edge.a] += half;
      f_full[edge.b] += half;
    }
    if (!matched)
      throw DiffusionError("diffusion: no boundary edges tagged '" + nm.edge_tag + "'");
  }
  for (int k = 0; k < n_free; ++k) sys.f[k] += f_full[sys.free_nodes[k]];

  sys.K = SparseMatrix::from_triplets(n_free, n_free, triplets);
  if (sys.floored_evaluations > 0) {
    std::clog << "diffusion: floored " << sys.floored_evaluations
              << " non-SPD diffusivity evaluations\n";
  }
  sys.assembly_seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0).count();
  return sys;
}

double violation_metrics(const NodalField& c, double c_min, double c_max) {
  if (c.kind != NodalField::Kind::Scalar)
    throw DiffusionError("diffusion: violation metrics need a scalar field");
  if (c.values.empty()) return 0.0;
  std::size_t bad = 0;
  for (double v : c.values) {
    if (v < c_min - kViolationTol || v > c_max + kViolationTol) ++bad;
  }
  return 100.0 * static_cast<double>(bad) / static_cast<double>(c.values.size());
}

namespace {

DiffusionResult finish(const DiffusionSystem& system, std::vector<double> reduced,
                       double c_min, double c_max, double solve_seconds) {
  DiffusionResult res;
  res.c.kind = NodalField::Kind::Scalar;
  res.c.values = system.expand(reduced);
  res.assembly_time = system.assembly_seconds;
  res.solve_time = solve_seconds;
  res.min_c = kInf;
  res.max_c = -kInf;
  for (double v : res.c.values) {
    res.min_c = std::min(res.min_c, v);
    res.max_c = std::max(res.max_c, v);
  }
  res.violation_pct = violation_metrics(res.c, c_min, c_max);
  return res;
}

}  // namespace

DiffusionResult solve_cg_path(const DiffusionSystem& system, double c_min, double c_max) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> reduced;
  int iterations = 0;
  if (!system.free_nodes.empty()) {
    const int n = static_cast<int>(system.free_nodes.size());
    auto pcg = pcg_solve(system.K, system.f, 1e-6, 10 * n + 100);
    if (!pcg.converged)
      throw DiffusionError("diffusion: classical path CG failed to converge");
    reduced = std::move(pcg.x);
    iterations = pcg.iterations;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto res = finish(system, std::move(reduced), c_min, c_max, secs);
  res.solver_iterations = iterations;
  res.pcg_total_iterations = 0;
  return res;
}

DiffusionResult solve_nn_path(const DiffusionSystem& system, double c_min, double c_max,
                              const std::vector<double>* warm_start_full) {
  if (!(c_min <= c_max)) throw DiffusionError("diffusion: c_min must not exceed c_max");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> reduced;
  int outer = 0;
  long long pcg_total = 0;
  if (!system.free_nodes.empty()) {
    QpProblem qp;
    qp.K = system.K;
    qp.f = system.f;
    qp.lower.assign(system.free_nodes.size(), c_min);
    qp.upper.assign(system.free_nodes.size(), c_max);
    std::vector<double> warm;
    const std::vector<double>* warm_ptr = nullptr;
    if (warm_start_full) {
      warm = system.restrict_free(*warm_start_full);
      warm_ptr = &warm;
    }
    const auto sol = solve_box_qp(qp, {}, warm_ptr);
    if (!sol.converged)
      throw DiffusionError("diffusion: constrained path did not converge (KKT residual " +
                           std::to_string(sol.kkt_residual) + ")");
    reduced = sol.c;
    outer = sol.outer_iterations;
    pcg_total = sol.pcg_iterations_total;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto res = finish(system, std::move(reduced), c_min, c_max, secs);
  res.solver_iterations = outer;
  res.pcg_total_iterations = pcg_total;
  return res;
}

}  // namespace cpd
