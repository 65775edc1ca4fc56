// Plane-stress equilibrium assembly and the incremental Newton driver.
//
// Element sweeps run in parallel; the scatter into global vectors and
// matrices is serial in element order, so assembled values are bitwise
// independent of the thread count. The linear solver is a skyline LDLT on
// the condensed system with a diagonally preconditioned CG fallback.
#include "cpd/deformation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>

#include "cpd/parallel.hpp"

namespace cpd {
namespace {

// Strain of a P1 element evaluated from nodal displacements (tensor xy).
Strain2 element_strain(const ElementGeometry& geo, const std::array<int, 3>& conn,
                       std::span<const double> u) {
  Strain2 e;
  double dux_dy = 0.0, duy_dx = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double ux = u[2 * conn[i]];
    const double uy = u[2 * conn[i] + 1];
    e.xx += geo.dN[i][0] * ux;
    e.yy += geo.dN[i][1] * uy;
    dux_dy += geo.dN[i][1] * ux;
    duy_dx += geo.dN[i][0] * uy;
  }
  e.xy = 0.5 * (dux_dy + duy_dx);
  return e;
}

StressSweep run_sweep(const Mesh& mesh, const std::vector<QuadPointState>& states_n,
                      std::span<const double> u_n, std::span<const double> u_trial,
                      std::span<const double> c_elem, ModelVariant model,
                      const MaterialParams& mat) {
  const std::size_t n_elem = mesh.elements.size();
  if (states_n.size() != n_elem)
    throw DeformationError("deformation: state count does not match element count");
  if (!c_elem.empty() && c_elem.size() != n_elem)
    throw DeformationError("deformation: concentration field size mismatch");
  const std::size_t n_dof = 2 * mesh.nodes.size();
  if (u_n.size() != n_dof || u_trial.size() != n_dof)
    throw DeformationError("deformation: displacement vector size mismatch");

  StressSweep sweep;
  sweep.states.resize(n_elem);
  sweep.tangents.resize(n_elem);
  sweep.delta_gamma.assign(n_elem, 0.0);
  std::vector<int> local_iters(n_elem, 0);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(static_cast<int>(n_elem), [&](int e) {
    try {
      const auto geo = element_geometry(mesh, e);
      const auto& conn = mesh.elements[e];
      Strain2 de;
      {
        Strain2 total = element_strain(geo, conn, u_trial);
        Strain2 prev = element_strain(geo, conn, u_n);
        de.xx = total.xx - prev.xx;
        de.yy = total.yy - prev.yy;
        de.xy = total.xy - prev.xy;
      }
      const double c = c_elem.empty() ? 0.0 : c_elem[e];
      auto res = stress_update(states_n[e], de, c, model, mat);
      sweep.states[e] = res.new_state;
      sweep.tangents[e] = res.tangent;
      sweep.delta_gamma[e] = res.delta_gamma;
      local_iters[e] = res.local_newton_iterations;
    } catch (...) {
      std::scoped_lock lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  for (int it : local_iters) sweep.max_local_iterations = std::max(sweep.max_local_iterations, it);
  return sweep;
}

}  // namespace

DofMap DofMap::build(const Mesh& mesh, const DeformationBC& bc, double t) {
  if (bc.dirichlet.empty())
    throw DeformationError("deformation: at least one Dirichlet constraint is required");
  const int n_dof = 2 * mesh.node_count();
  DofMap map;
  map.reduced_index.assign(n_dof, 0);
  map.prescribed.assign(n_dof, 0.0);
  std::vector<bool> constrained(n_dof, false);
  for (const auto& d : bc.dirichlet) {
    if (d.component != 0 && d.component != 1)
      throw DeformationError("deformation: Dirichlet component must be 0 or 1");
    if (!d.value) throw DeformationError("deformation: Dirichlet value function is empty");
    const double v = d.value(t);
    if (!std::isfinite(v))
      throw DeformationError("deformation: prescribed displacement must be finite");
    for (int node : mesh.node_set(d.node_set)) {
      const int dof = 2 * node + d.component;
      if (constrained[dof] && map.prescribed[dof] != v)
        throw DeformationError("deformation: conflicting prescriptions at node " +
                               std::to_string(node));
      constrained[dof] = true;
      map.prescribed[dof] = v;
    }
  }
  for (int dof = 0; dof < n_dof; ++dof) {
    if (constrained[dof]) {
      map.reduced_index[dof] = -1;
    } else {
      map.reduced_index[dof] = static_cast<int>(map.free_dofs.size());
      map.free_dofs.push_back(dof);
    }
  }
  return map;
}

std::vector<double> assemble_external(const Mesh& mesh, const DeformationBC& bc, double t,
                                      const MaterialParams& mat) {
  std::vector<double> f(2 * mesh.nodes.size(), 0.0);
  if (mat.rho_b[0] != 0.0 || mat.rho_b[1] != 0.0) {
    for (int e = 0; e < mesh.element_count(); ++e) {
      const double third = mesh.element_area(e) / 3.0;
      for (int i = 0; i < 3; ++i) {
        f[2 * mesh.elements[e][i]] += third * mat.rho_b[0];
        f[2 * mesh.elements[e][i] + 1] += third * mat.rho_b[1];
      }
    }
  }
  for (const auto& nm : bc.neumann) {
    if (!nm.traction) throw DeformationError("deformation: traction function is empty");
    const auto trac = nm.traction(t);
    bool matched = false;
    for (const auto& edge : mesh.boundary_edges) {
      if (edge.tag != nm.edge_tag) continue;
      matched = true;
      const double dx = mesh.nodes[edge.b][0] - mesh.nodes[edge.a][0];
      const double dy = mesh.nodes[edge.b][1] - mesh.nodes[edge.a][1];
      const double half = 0.5 * std::hypot(dx, dy);
      for (int node : {edge.a, edge.b}) {
        f[2 * node] += half * trac[0];
        f[2 * node + 1] += half * trac[1];
      }
    }
    if (!matched)
      throw DeformationError("deformation: no boundary edges tagged '" + nm.edge_tag + "'");
  }
  return f;
}

std::vector<double> assemble_residual(const Mesh& mesh,
                                      const std::vector<QuadPointState>& states_n,
                                      std::span<const double> u_n,
                                      std::span<const double> u_trial,
                                      const DeformationBC& bc, double t,
                                      std::span<const double> c_elem, ModelVariant model,
                                      const MaterialParams& mat, StressSweep* sweep) {
  StressSweep local = run_sweep(mesh, states_n, u_n, u_trial, c_elem, model, mat);
  std::vector<double> r = assemble_external(mesh, bc, t, mat);
  for (double& v : r) v = -v;  // r = f_int - f_ext
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto geo = element_geometry(mesh, e);
    const auto& s = local.states[e].stress;
    for (int i = 0; i < 3; ++i) {
      const int node = mesh.elements[e][i];
      r[2 * node] += geo.area * (s.xx * geo.dN[i][0] + s.xy * geo.dN[i][1]);
      r[2 * node + 1] += geo.area * (s.xy * geo.dN[i][0] + s.yy * geo.dN[i][1]);
    }
  }
  const DofMap map = DofMap::build(mesh, bc, t);
  for (std::size_t dof = 0; dof < r.size(); ++dof)
    if (map.reduced_index[dof] < 0) r[dof] = 0.0;
  if (sweep) *sweep = std::move(local);
  return r;
}

SparseMatrix assemble_jacobian(const Mesh& mesh, const StressSweep& sweep,
                               const DofMap* condense) {
  const std::size_t n_elem = mesh.elements.size();
  if (sweep.tangents.size() != n_elem)
    throw DeformationError("deformation: sweep does not match the mesh");
  struct ElementStiffness {
    double k[6][6];
  };
  std::vector<ElementStiffness> kes(n_elem);
  parallel_for(static_cast<int>(n_elem), [&](int e) {
    const auto geo = element_geometry(mesh, e);
    // Voigt rows (xx, yy, gamma_xy): B[0][2i] = dNi_x, B[1][2i+1] = dNi_y,
    // B[2][2i] = dNi_y, B[2][2i+1] = dNi_x.
    double b[3][6] = {};
    for (int i = 0; i < 3; ++i) {
      b[0][2 * i] = geo.dN[i][0];
      b[1][2 * i + 1] = geo.dN[i][1];
      b[2][2 * i] = geo.dN[i][1];
      b[2][2 * i + 1] = geo.dN[i][0];
    }
    const Mat3& c = sweep.tangents[e];
    double cb[3][6];
    for (int r = 0; r < 3; ++r)
      for (int j = 0; j < 6; ++j)
        cb[r][j] = c[r][0] * b[0][j] + c[r][1] * b[1][j] + c[r][2] * b[2][j];
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        kes[e].k[i][j] =
            geo.area * (b[0][i] * cb[0][j] + b[1][i] * cb[1][j] + b[2][i] * cb[2][j]);
  });

  std::vector<Triplet> triplets;
  triplets.reserve(n_elem * 36);
  if (condense) {
    const auto& idx = condense->reduced_index;
    for (std::size_t e = 0; e < n_elem; ++e) {
      const auto& conn = mesh.elements[e];
      for (int i = 0; i < 6; ++i) {
        const int gi = idx[2 * conn[i / 2] + i % 2];
        if (gi < 0) continue;
        for (int j = 0; j < 6; ++j) {
          const int gj = idx[2 * conn[j / 2] + j % 2];
          if (gj >= 0) triplets.push_back({gi, gj, kes[e].k[i][j]});
        }
      }
    }
    return SparseMatrix::from_triplets(condense->free_count(), condense->free_count(),
                                       triplets);
  }
  const int n_dof = 2 * mesh.node_count();
  for (std::size_t e = 0; e < n_elem; ++e) {
    const auto& conn = mesh.elements[e];
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        triplets.push_back(
            {2 * conn[i / 2] + i % 2, 2 * conn[j / 2] + j % 2, kes[e].k[i][j]});
  }
  return SparseMatrix::from_triplets(n_dof, n_dof, triplets);
}

DeformationStepResult solve_load_step(const Mesh& mesh,
                                      const std::vector<QuadPointState>& states_n,
                                      std::span<const double> u_n,
                                      const DeformationBC& bc, double t,
                                      std::span<const double> c_elem, ModelVariant model,
                                      const MaterialParams& mat,
                                      const DeformationOpts& opts) {
  using clock = std::chrono::steady_clock;
  const DofMap map = DofMap::build(mesh, bc, t);
  DeformationStepResult result;

  // Prescribed dofs move to their time-t values before the first iteration;
  // Newton then iterates on the free dofs only.
  std::vector<double> u(u_n.begin(), u_n.end());
  for (std::size_t dof = 0; dof < u.size(); ++dof)
    if (map.reduced_index[dof] < 0) u[dof] = map.prescribed[dof];

  const std::vector<double> f_ext = assemble_external(mesh, bc, t, mat);
  const double abs_floor = 1e-14 * std::max(1.0, norm2(f_ext));

  StressSweep sweep;
  double r0 = 0.0;
  for (int it = 0;; ++it) {
    const auto ta = clock::now();
    std::vector<double> r =
        assemble_residual(mesh, states_n, u_n, u, bc, t, c_elem, model, mat, &sweep);
    double rn = 0.0;
    for (int dof : map.free_dofs) rn += r[dof] * r[dof];
    rn = std::sqrt(rn);
    result.residual_norms.push_back(rn);
    result.assembly_time += std::chrono::duration<double>(clock::now() - ta).count();
    if (it == 0) r0 = rn;
    if (rn <= opts.rel_tol * r0 || rn <= abs_floor) break;
    if (it >= opts.max_newton) {
      std::ostringstream oss;
      oss << "deformation: no convergence in " << opts.max_newton
          << " Newton iterations; residuals:";
      for (double v : result.residual_norms) oss << ' ' << v;
      throw DeformationError(oss.str());
    }

    const auto tb = clock::now();
    const SparseMatrix k = assemble_jacobian(mesh, sweep, &map);
    result.assembly_time += std::chrono::duration<double>(clock::now() - tb).count();

    std::vector<double> rhs(map.free_count());
    for (int i = 0; i < map.free_count(); ++i) rhs[i] = -r[map.free_dofs[i]];
    const auto tc = clock::now();
    std::vector<double> du;
    try {
      du = cholesky_solve(k, rhs);
    } catch (const LinalgError& direct_error) {
      auto pcg = pcg_solve(k, rhs, 1e-12, 20 * map.free_count() + 100);
      if (!pcg.converged)
        throw DeformationError(std::string("deformation: linear solve failed (") +
                               direct_error.what() + "; CG fallback did not converge)");
      du = std::move(pcg.x);
      result.used_pcg_fallback = true;
    }
    result.solve_time += std::chrono::duration<double>(clock::now() - tc).count();
    for (int i = 0; i < map.free_count(); ++i) u[map.free_dofs[i]] += du[i];
    ++result.newton_iterations;
  }

  // Commit: the final sweep was evaluated at the accepted iterate.
  result.states = std::move(sweep.states);
  result.delta_gamma = std::move(sweep.delta_gamma);
  result.displacement.kind = NodalField::Kind::Vector2;
  result.displacement.values = std::move(u);
  // Reactions: f_int - f_ext without Dirichlet zeroing.
  result.reaction = assemble_external(mesh, bc, t, mat);
  for (double& v : result.reaction) v = -v;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto geo = element_geometry(mesh, e);
    const auto& s = result.states[e].stress;
    for (int i = 0; i < 3; ++i) {
      const int node = mesh.elements[e][i];
      result.reaction[2 * node] += geo.area * (s.xx * geo.dN[i][0] + s.xy * geo.dN[i][1]);
      result.reaction[2 * node + 1] +=
          geo.area * (s.xy * geo.dN[i][0] + s.yy * geo.dN[i][1]);
    }
  }
  return result;
}

}  // namespace cpd
