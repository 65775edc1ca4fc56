// Tests for the diffusion module: diffusivity tensors (one-way, two-way,
// SPD floor), P1 assembly identities, Dirichlet/Neumann handling, the
// classical vs bound-constrained solution paths, and determinism.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "cpd/diffusion.hpp"
#include "cpd/parallel.hpp"
#include "oracles.hpp"

using namespace cpd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Structured unit-square triangulation with m x m cells, tagged sides, and a
// single-node "pin" set at the origin.
Mesh make_unit_square(int m) {
  Mesh mesh;
  const auto id = [m](int i, int j) { return j * (m + 1) + i; };
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i <= m; ++i)
      mesh.nodes.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      mesh.elements.push_back({a, b, c});
      mesh.elements.push_back({a, c, d});
    }
  for (int i = 0; i < m; ++i) {
    mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), "bottom"});
    mesh.boundary_edges.push_back({id(i + 1, m), id(i, m), "top"});
  }
  for (int j = 0; j < m; ++j) {
    mesh.boundary_edges.push_back({id(m, j), id(m, j + 1), "right"});
    mesh.boundary_edges.push_back({id(0, j + 1), id(0, j), "left"});
  }
  for (int j = 0; j <= m; ++j) {
    mesh.node_sets["left"].push_back(id(0, j));
    mesh.node_sets["right"].push_back(id(m, j));
  }
  for (int i = 0; i <= m; ++i) {
    mesh.node_sets["bottom"].push_back(id(i, 0));
    mesh.node_sets["top"].push_back(id(i, m));
  }
  mesh.node_sets["pin"].push_back(0);
  validate_mesh(mesh);
  return mesh;
}

Mesh benchmark_mesh(int refinement) {
  return generate_plate_with_hole(0.36, 0.2, 0.05, refinement);
}

DiffusivityModel one_way(double d1, double d2, double theta) {
  DiffusivityModel m;
  m.mode = DiffusivityMode::OneWay;
  m.d1 = d1;
  m.d2 = d2;
  m.theta = theta;
  return m;
}

DiffusionBC hole_to_outer() {
  DiffusionBC bc;
  bc.dirichlet.push_back({"hole", 1.0});
  bc.dirichlet.push_back({"outer", 0.0});
  return bc;
}

}  // namespace

TEST_CASE("diffusivity_at: rotation of the principal axes") {
  const auto d0 = diffusivity_at(0.0, one_way(5.0, 2.0, 0.0));
  CHECK(d0.xx == 5.0);
  CHECK(d0.yy == 2.0);
  CHECK(d0.xy == 0.0);

  const double th = std::numbers::pi / 3.0;
  const auto d = diffusivity_at(0.0, one_way(50.0, 1.0, th));
  const double c = std::cos(th), s = std::sin(th);
  CHECK(d.xx == doctest::Approx(50.0 * c * c + 1.0 * s * s).epsilon(1e-14));
  CHECK(d.yy == doctest::Approx(50.0 * s * s + 1.0 * c * c).epsilon(1e-14));
  CHECK(d.xy == doctest::Approx((50.0 - 1.0) * s * c).epsilon(1e-14));
  // Trace and determinant are rotation invariants.
  CHECK(d.xx + d.yy == doctest::Approx(51.0).epsilon(1e-14));
  CHECK(d.xx * d.yy - d.xy * d.xy == doctest::Approx(50.0).epsilon(1e-13));
}

TEST_CASE("diffusivity_at: two-way limits") {
  DiffusivityModel m = one_way(3.0, 1.5, 0.7);
  m.mode = DiffusivityMode::TwoWay;
  m.eta_T = 1.0;
  m.eta_S = 1.0;
  m.E_ref = 1e-3;
  m.phi_T = 1.25;
  m.phi_S = 1.25;

  const auto base = diffusivity_at(0.0, one_way(3.0, 1.5, 0.7));
  // Zero strain: the exponential terms vanish.
  const auto dz = diffusivity_at(0.0, m);
  CHECK(dz.xx == base.xx);
  CHECK(dz.yy == base.yy);
  CHECK(dz.xy == base.xy);
  // Strain at the reference value: D = (phi_T + phi_S - 1) D0.
  const auto dr = diffusivity_at(1e-3, m);
  const double factor = 1.25 + 1.25 - 1.0;
  CHECK(dr.xx == doctest::Approx(factor * base.xx).epsilon(1e-12));
  CHECK(dr.yy == doctest::Approx(factor * base.yy).epsilon(1e-12));
  CHECK(dr.xy == doctest::Approx(factor * base.xy).epsilon(1e-12));
  // phi = 1 reduces to the one-way tensor bitwise for any strain.
  m.phi_T = 1.0;
  m.phi_S = 1.0;
  for (double inv : {-0.02, -1e-4, 0.0, 3e-3, 0.05}) {
    const auto d = diffusivity_at(inv, m);
    CHECK(d.xx == base.xx);
    CHECK(d.yy == base.yy);
    CHECK(d.xy == base.xy);
  }
}

TEST_CASE("diffusivity_at: non-SPD evaluations are floored and flagged") {
  DiffusivityModel m = one_way(3.0, 1.5, 0.4);
  m.mode = DiffusivityMode::TwoWay;
  m.eta_T = 1.0;
  m.eta_S = 1.0;
  m.E_ref = 1e-3;
  m.phi_T = 1.25;
  m.phi_S = 1.25;
  // Large compressive strain drives the scalar factor negative.
  bool floored = false;
  const auto d = diffusivity_at(-5.0, m, &floored);
  CHECK(floored);
  const double floor = 1e-9 * 1.5;
  CHECK(d.xx == doctest::Approx(floor).epsilon(1e-12));
  CHECK(d.yy == doctest::Approx(floor).epsilon(1e-12));
  CHECK(std::abs(d.xy) <= 1e-20);

  floored = true;
  (void)diffusivity_at(0.0, m, &floored);
  CHECK_FALSE(floored);

  CHECK_THROWS_AS(diffusivity_at(0.0, one_way(-1.0, 1.0, 0.0)), DiffusionError);
}

TEST_CASE("assemble_diffusion: linear solution reproduced exactly") {
  const auto mesh = make_unit_square(4);
  DiffusionBC bc;
  bc.dirichlet.push_back({"left", 0.0});
  bc.dirichlet.push_back({"right", 1.0});
  const auto sys = assemble_diffusion(mesh, {}, bc, one_way(1.0, 1.0, 0.0));
  const auto reduced = cholesky_solve(sys.K, sys.f);
  const auto full = sys.expand(reduced);
  for (int i = 0; i < mesh.node_count(); ++i)
    CHECK(full[i] == doctest::Approx(mesh.nodes[i][0]).scale(1.0).epsilon(1e-12));
}

TEST_CASE("assemble_diffusion: Neumann flux drives the exact linear profile") {
  // -div(D grad c) = 0, c(0) = 0, inflow h on the right edge, D = 2 I:
  // c = (h / d) x exactly.
  const auto mesh = make_unit_square(3);
  DiffusionBC bc;
  bc.dirichlet.push_back({"left", 0.0});
  bc.neumann.push_back({"right", 3.0});
  const auto sys = assemble_diffusion(mesh, {}, bc, one_way(2.0, 2.0, 0.0));
  const auto full = sys.expand(cholesky_solve(sys.K, sys.f));
  for (int i = 0; i < mesh.node_count(); ++i)
    CHECK(full[i] == doctest::Approx(1.5 * mesh.nodes[i][0]).scale(1.0).epsilon(1e-12));
}

TEST_CASE("assemble_diffusion: bilinear form is exact on linear fields") {
  const auto mesh = make_unit_square(4);
  DiffusionBC bc;
  bc.dirichlet.push_back({"pin", 0.0});  // origin only; gradients unconstrained
  const auto model = one_way(3.0, 1.0, 0.62);
  const auto d = diffusivity_at(0.0, model);
  const auto sys = assemble_diffusion(mesh, {}, bc, model);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double bu = coef(rng), cu = coef(rng), bv = coef(rng), cv = coef(rng);
    std::vector<double> u(mesh.node_count()), v(mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i) {
      u[i] = bu * mesh.nodes[i][0] + cu * mesh.nodes[i][1];
      v[i] = bv * mesh.nodes[i][0] + cv * mesh.nodes[i][1];
    }
    const auto ur = sys.restrict_free(u);
    const auto vr = sys.restrict_free(v);
    const auto kv = sys.K.multiply(vr);
    // Domain area is exactly 1; the gradient fields are constant.
    const double expect = bu * (d.xx * bv + d.xy * cv) + cu * (d.xy * bv + d.yy * cv);
    CHECK(dot(ur, kv) == doctest::Approx(expect).scale(10.0).epsilon(1e-12));
  }
}

TEST_CASE("assemble_diffusion: bookkeeping and input validation") {
  const auto mesh = make_unit_square(3);
  DiffusionBC bc;
  bc.dirichlet.push_back({"left", 0.25});
  bc.dirichlet.push_back({"right", 1.0});
  const auto sys = assemble_diffusion(mesh, {}, bc, one_way(1.0, 1.0, 0.0));
  CHECK(sys.min_dirichlet == 0.25);
  CHECK(sys.max_dirichlet == 1.0);
  for (std::size_t k = 1; k < sys.free_nodes.size(); ++k)
    CHECK(sys.free_nodes[k - 1] < sys.free_nodes[k]);
  CHECK(static_cast<int>(sys.free_nodes.size()) ==
        mesh.node_count() - 2 * 4);  // two pinned columns of 4 nodes

  std::vector<double> full(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) full[i] = 0.1 * i;
  const auto round_trip = sys.expand(sys.restrict_free(full));
  for (int node : sys.free_nodes) CHECK(round_trip[node] == full[node]);
  for (int i = 0; i < mesh.node_count(); ++i)
    if (sys.is_dirichlet[i]) CHECK(round_trip[i] == sys.dirichlet_c[i]);

  DiffusionBC empty;
  CHECK_THROWS_AS(assemble_diffusion(mesh, {}, empty, one_way(1, 1, 0)), DiffusionError);

  DiffusionBC conflict;
  conflict.dirichlet.push_back({"left", 0.0});
  conflict.dirichlet.push_back({"bottom", 1.0});  // shares the origin corner
  CHECK_THROWS_AS(assemble_diffusion(mesh, {}, conflict, one_way(1, 1, 0)), DiffusionError);

  DiffusionBC bad_edge = hole_to_outer();
  bad_edge.dirichlet = {{"left", 0.0}};
  bad_edge.neumann.push_back({"no_such_tag", 1.0});
  CHECK_THROWS_AS(assemble_diffusion(mesh, {}, bad_edge, one_way(1, 1, 0)), DiffusionError);

  const std::vector<double> wrong_size(mesh.element_count() + 1, 0.0);
  DiffusionBC ok;
  ok.dirichlet.push_back({"left", 0.0});
  CHECK_THROWS_AS(assemble_diffusion(mesh, wrong_size, ok, one_way(1, 1, 0)),
                  DiffusionError);
}

TEST_CASE("assemble_diffusion: exact symmetry and positive definiteness") {
  const auto mesh = benchmark_mesh(1);
  const auto sys = assemble_diffusion(mesh, {}, hole_to_outer(),
                                      one_way(50.0, 1.0, std::numbers::pi / 3));
  CHECK(sys.K.symmetry_error() == 0.0);

  // Inverse power iteration estimates the smallest eigenvalue.
  const int n = sys.K.rows();
  std::mt19937_64 rng(3);
  auto x = oracle::random_vector(n, rng);
  double lambda = 0.0;
  for (int it = 0; it < 30; ++it) {
    const double nx = norm2(x);
    for (auto& v : x) v /= nx;
    const auto y = cholesky_solve(sys.K, x);
    const double xy = dot(x, y);
    lambda = 1.0 / xy;
    x = y;
  }
  CHECK(lambda > 0.0);
}

TEST_CASE("solve_cg_path: trivial and residual contracts") {
  const auto mesh = benchmark_mesh(1);
  // Zero source, homogeneous Dirichlet: the solution is identically zero.
  DiffusionBC zero;
  zero.dirichlet.push_back({"hole", 0.0});
  zero.dirichlet.push_back({"outer", 0.0});
  const auto sys0 = assemble_diffusion(mesh, {}, zero, one_way(1, 1, 0));
  const auto res0 = solve_cg_path(sys0, 0.0, kInf);
  CHECK(res0.min_c == 0.0);
  CHECK(res0.max_c == 0.0);
  CHECK(res0.violation_pct == 0.0);

  const auto sys = assemble_diffusion(mesh, {}, hole_to_outer(), one_way(1, 1, 0));
  const auto res = solve_cg_path(sys, 0.0, kInf);
  CHECK(res.solver_iterations > 0);
  CHECK(res.pcg_total_iterations == 0);
  // Relative residual of the reduced system is within the 1e-6 tolerance.
  auto r = sys.K.multiply(sys.restrict_free(res.c.values));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= sys.f[i];
  CHECK(norm2(r) <= 1e-6 * norm2(sys.f));
}

TEST_CASE("solve_cg_path: isotropic diffusion respects the bounds") {
  const auto mesh = benchmark_mesh(2);
  const auto sys = assemble_diffusion(mesh, {}, hole_to_outer(), one_way(1, 1, 0));
  const auto res = solve_cg_path(sys, 0.0, 1.0);
  CHECK(res.violation_pct == 0.0);
  CHECK(res.min_c >= -1e-12);
  CHECK(res.max_c <= 1.0 + 1e-12);
}

TEST_CASE("solve_cg_path: strong anisotropy violates the lower bound") {
  const auto mesh = benchmark_mesh(2);
  const auto sys = assemble_diffusion(mesh, {}, hole_to_outer(),
                                      one_way(50.0, 1.0, std::numbers::pi / 3));
  const auto res = solve_cg_path(sys, 0.0, kInf);
  CHECK(res.min_c < 0.0);
  CHECK(res.violation_pct > 0.0);
}

TEST_CASE("solve_nn_path: inactive constraints match the unconstrained solve") {
  const auto mesh = benchmark_mesh(1);
  const auto sys = assemble_diffusion(mesh, {}, hole_to_outer(), one_way(1, 1, 0));
  const auto nn = solve_nn_path(sys, 0.0, kInf);
  const auto direct = sys.expand(cholesky_solve(sys.K, sys.f));
  for (int i = 0; i < mesh.node_count(); ++i)
    CHECK(std::abs(nn.c.values[i] - direct[i]) <= 1e-8 * (1.0 + std::abs(direct[i])));
  CHECK(nn.violation_pct == 0.0);

  const auto cg = solve_cg_path(sys, 0.0, kInf);
  for (int i = 0; i < mesh.node_count(); ++i)
    CHECK(std::abs(nn.c.values[i] - cg.c.values[i]) <= 1e-4);
}

TEST_CASE("solve_nn_path: bounds enforced under strong anisotropy") {
  const auto mesh = benchmark_mesh(2);
  const auto sys = assemble_diffusion(mesh, {}, hole_to_outer(),
                                      one_way(50.0, 1.0, std::numbers::pi / 3));
  const auto nn = solve_nn_path(sys, 0.0, kInf);
  CHECK(nn.min_c >= -1e-10);
  CHECK(nn.violation_pct == 0.0);
  CHECK(nn.pcg_total_iterations > 0);
  CHECK(nn.solver_iterations > 0);

  // Maximum principle with both bounds taken from the Dirichlet data.
  const auto boxed = solve_nn_path(sys, sys.min_dirichlet, sys.max_dirichlet);
  CHECK(boxed.min_c >= 0.0 - 1e-10);
  CHECK(boxed.max_c <= 1.0 + 1e-10);
  CHECK(boxed.violation_pct == 0.0);

  // Warm starting from the previous solution converges at least as fast.
  const auto warm = solve_nn_path(sys, 0.0, kInf, &nn.c.values);
  CHECK(warm.solver_iterations <= nn.solver_iterations);
  CHECK(std::abs(warm.min_c - nn.min_c) <= 1e-9);
}

TEST_CASE("violation_metrics: counting convention") {
  NodalField zeros;
  zeros.values.assign(10, 0.0);
  CHECK(violation_metrics(zeros, 0.0, kInf) == 0.0);

  NodalField f;
  f.values = {-1.0, 0.5, 2.0};
  CHECK(violation_metrics(f, 0.0, 1.0) == doctest::Approx(200.0 / 3.0).epsilon(1e-14));
  // The tolerance band 1e-12 excludes roundoff-level excursions.
  NodalField tiny;
  tiny.values = {-0.9e-12, 1.0 + 0.9e-12};
  CHECK(violation_metrics(tiny, 0.0, 1.0) == 0.0);

  NodalField vec;
  vec.kind = NodalField::Kind::Vector2;
  vec.values.assign(4, 0.0);
  CHECK_THROWS_AS(violation_metrics(vec, 0.0, 1.0), DiffusionError);
}

TEST_CASE("assemble_diffusion: two-way with phi = 1 is bitwise one-way") {
  const auto mesh = benchmark_mesh(1);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> strain(-4e-3, 4e-3);
  std::vector<double> inv(mesh.element_count());
  for (auto& v : inv) v = strain(rng);

  auto base = one_way(50.0, 1.0, std::numbers::pi / 3);
  DiffusivityModel two = base;
  two.mode = DiffusivityMode::TwoWay;
  two.eta_T = 1.0;
  two.eta_S = 1.0;
  two.E_ref = 1e-3;
  two.phi_T = 1.0;
  two.phi_S = 1.0;

  const auto sys1 = assemble_diffusion(mesh, inv, hole_to_outer(), base);
  const auto sys2 = assemble_diffusion(mesh, inv, hole_to_outer(), two);
  REQUIRE(sys1.K.values().size() == sys2.K.values().size());
  for (std::size_t i = 0; i < sys1.K.values().size(); ++i)
    CHECK(sys1.K.values()[i] == sys2.K.values()[i]);
  for (std::size_t i = 0; i < sys1.f.size(); ++i) CHECK(sys1.f[i] == sys2.f[i]);
}

TEST_CASE("assemble_diffusion: bitwise independent of the thread count") {
  const auto mesh = benchmark_mesh(1);
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> strain(-4e-3, 4e-3);
  std::vector<double> inv(mesh.element_count());
  for (auto& v : inv) v = strain(rng);

  DiffusivityModel two = one_way(50.0, 1.0, std::numbers::pi / 3);
  two.mode = DiffusivityMode::TwoWay;
  two.eta_T = 1.0;
  two.eta_S = 1.0;
  two.E_ref = 1e-3;
  two.phi_T = 1.2;
  two.phi_S = 1.2;

  set_thread_count(1);
  const auto sys1 = assemble_diffusion(mesh, inv, hole_to_outer(), two, 0.7);
  set_thread_count(4);
  const auto sys4 = assemble_diffusion(mesh, inv, hole_to_outer(), two, 0.7);
  set_thread_count(1);
  REQUIRE(sys1.K.values().size() == sys4.K.values().size());
  for (std::size_t i = 0; i < sys1.K.values().size(); ++i)
    CHECK(sys1.K.values()[i] == sys4.K.values()[i]);
  for (std::size_t i = 0; i < sys1.f.size(); ++i) CHECK(sys1.f[i] == sys4.f[i]);
}
