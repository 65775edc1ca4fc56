#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cpd/constitutive.hpp"
#include "generators.hpp"

using namespace cpd;

namespace {

Sym3 uniaxial(double sigma) { return {sigma, 0.0, 0.0, 0.0}; }

double max_abs(const Mat3& m) {
  double v = 0.0;
  for (const auto& row : m)
    for (double x : row) v = std::max(v, std::abs(x));
  return v;
}

}  // namespace

TEST_CASE("lame_params: virgin, degraded, and uncoupled values") {
  auto mat = gen::case1_material();
  auto [l0, m0] = lame_params(0.0, mat);
  CHECK(l0 == 1.94e10);
  CHECK(m0 == 2.92e10);

  auto [l, m] = lame_params(0.05, mat);  // c equals c_ref
  CHECK(l == doctest::Approx(1.94e10 - 8.5e8).epsilon(1e-14));
  CHECK(m == doctest::Approx(2.92e10 - 8.5e8).epsilon(1e-14));

  mat.lambda1 = 0.0;
  mat.mu1 = 0.0;
  auto [lu, mu] = lame_params(0.73, mat);
  CHECK(lu == 1.94e10);
  CHECK(mu == 2.92e10);
}

TEST_CASE("lame_params rejects non-physical degraded moduli") {
  auto mat = gen::case1_material();
  // mu(c) <= 0 at c = mu0 c_ref / |mu1| ~ 1.717
  CHECK_THROWS_AS(lame_params(2.0, mat), ConstitutiveError);
}

TEST_CASE("material constants: E, nu, kappa0, H from Et") {
  auto mat = gen::case1_material();
  // Oracle: E = mu0 (3 lambda0 + 2 mu0) / (lambda0 + mu0) evaluated exactly.
  const double E = mat.youngs();
  CHECK(E == doctest::Approx(7.00559670782e10).epsilon(1e-10));
  CHECK(mat.poisson() == doctest::Approx(0.19958848).epsilon(1e-7));
  CHECK(mat.kappa0() == doctest::Approx(243e6 / E).epsilon(1e-14));
  // Round trip Et -> H -> Et.
  const double Et = mat.H / (1.0 + mat.H / E);
  CHECK(Et == doctest::Approx(2.171e9).epsilon(1e-12));
  CHECK_THROWS_AS(MaterialParams::hardening_from_tangent_modulus(E, E), ConstitutiveError);
}

TEST_CASE("yield_function: unstressed, uniaxial, and Model II onset") {
  auto mat = gen::case1_material();
  CHECK(yield_function(ModelVariant::ModelI, Sym3{}, 0.0, 0.0, mat) ==
        doctest::Approx(-243e6));
  // Uniaxial sigma gives f = sigma - sigma0 for both models at kappa = 0, c = 0.
  for (auto model : {ModelVariant::ModelI, ModelVariant::ModelII}) {
    CHECK(yield_function(model, uniaxial(100e6), 0.0, 0.0, mat) ==
          doctest::Approx(100e6 - 243e6).epsilon(1e-12));
    CHECK(yield_function(model, uniaxial(243e6), 0.0, 0.0, mat) ==
          doctest::Approx(0.0).scale(243e6).epsilon(1e-12));
  }
  // Model II with zeta = -0.3, c = 1: onset at 0.7 sigma0.
  CHECK(yield_function(ModelVariant::ModelII, uniaxial(0.7 * 243e6), 0.0, 1.0, mat) ==
        doctest::Approx(0.0).scale(243e6).epsilon(1e-12));
  // LinearElastic never yields.
  CHECK(yield_function(ModelVariant::LinearElastic, uniaxial(1e12), 0.0, 0.0, mat) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("stress_update: zero increment leaves an elastic state unchanged") {
  auto mat = gen::case1_material();
  QuadPointState virgin;
  for (auto model : {ModelVariant::ModelI, ModelVariant::ModelII,
                     ModelVariant::LinearElastic, ModelVariant::PerfectPlastic}) {
    auto r = stress_update(virgin, Strain2{}, 0.3, model, mat);
    CHECK(r.delta_gamma == 0.0);
    CHECK(r.new_state.stress.norm() == 0.0);
    CHECK(r.new_state.kappa == 0.0);
  }
  // Pre-stressed elastic state (plane stress respected) is also a fixed point.
  auto pre = stress_update(QuadPointState{}, Strain2{1e-3, -2e-4, 3e-4}, 0.0,
                           ModelVariant::ModelI, mat);
  auto r2 = stress_update(pre.new_state, Strain2{}, 0.0, ModelVariant::ModelI, mat);
  CHECK(r2.delta_gamma == 0.0);
  CHECK(r2.new_state.stress.xx == pre.new_state.stress.xx);
  CHECK(r2.new_state.stress.xy == pre.new_state.stress.xy);
}

TEST_CASE("perfect plasticity projects the deviator onto the yield cylinder") {
  auto mat = gen::case1_material();
  QuadPointState state;
  for (int i = 0; i < 5; ++i) {
    auto r = stress_update(state, Strain2{4e-3, -1e-3, 2e-3}, 0.0,
                           ModelVariant::PerfectPlastic, mat);
    state = r.new_state;
    if (r.delta_gamma > 0.0) {
      const double nrm = state.stress.deviator().norm();
      CHECK(nrm == doctest::Approx(std::sqrt(2.0 / 3.0) * mat.sigma0).epsilon(1e-9));
    }
  }
  CHECK(state.kappa > 0.0);
}

TEST_CASE("Model II: updated deviator is coaxial with the trial deviator") {
  auto mat = gen::case1_material();
  gen::StateGenerator g(ModelVariant::ModelII, mat, 2024);
  for (int i = 0; i < 200; ++i) {
    auto s = g.next_plastic();
    // Rebuild the trial deviator from the inputs of the converged update.
    auto r = stress_update(s.state, s.delta_eps, s.c, ModelVariant::ModelII, mat);
    const Strain2 d = s.delta_eps;
    const double tr = d.xx + d.yy + r.eps33;
    const Sym3 trial{s.state.stress.xx + mat.lambda0 * tr + 2.0 * mat.mu0 * d.xx,
                     s.state.stress.yy + mat.lambda0 * tr + 2.0 * mat.mu0 * d.yy,
                     s.state.stress.zz + mat.lambda0 * tr + 2.0 * mat.mu0 * r.eps33,
                     s.state.stress.xy + 2.0 * mat.mu0 * d.xy};
    const Sym3 st = trial.deviator();
    const Sym3 sn = r.new_state.stress.deviator();
    const double cosine =
        (st.xx * sn.xx + st.yy * sn.yy + st.zz * sn.zz + 2.0 * st.xy * sn.xy) /
        (st.norm() * sn.norm());
    CHECK(cosine >= 1.0 - 1e-12);
    // Consistency condition satisfied at exit.
    CHECK(yield_function(ModelVariant::ModelII, r.new_state.stress, r.new_state.kappa,
                         s.c, mat) <= 1e-8 * mat.sigma0);
  }
}

TEST_CASE("Kuhn-Tucker, traceless flow, monotone kappa, plane stress: 1000 samples each") {
  auto mat = gen::case1_material();
  for (auto model : {ModelVariant::ModelI, ModelVariant::ModelII,
                     ModelVariant::PerfectPlastic}) {
    gen::StateGenerator g(model, mat, 7 + static_cast<int>(model));
    for (int i = 0; i < 1000; ++i) {
      auto s = g.next();
      auto r = stress_update(s.state, s.delta_eps, s.c, model, mat);
      const double f = yield_function(model, r.new_state.stress, r.new_state.kappa, s.c, mat);
      CHECK(r.delta_gamma >= 0.0);
      CHECK(f <= 1e-8 * mat.sigma0);
      CHECK(r.delta_gamma * f <= 1e-8 * mat.sigma0 * std::max(r.delta_gamma, 1.0));
      CHECK(std::abs(r.new_state.plastic_strain.trace()) <= 1e-12);
      CHECK(r.new_state.kappa >= s.state.kappa);
      CHECK(std::abs(r.new_state.stress.zz) <= 1e-9 * mat.sigma0);
      CHECK((r.delta_gamma == 0.0) ==
            (r.new_state.kappa == s.state.kappa && r.delta_gamma == 0.0));
    }
  }
}

TEST_CASE("elastic tangent equals the textbook plane-stress matrix") {
  auto mat = gen::case1_material();
  const double E = mat.youngs(), nu = mat.poisson();
  const double k = E / (1.0 - nu * nu);
  auto c = elastic_tangent_plane_stress(mat.lambda0, mat.mu0);
  CHECK(c[0][0] == doctest::Approx(k).epsilon(1e-12));
  CHECK(c[0][1] == doctest::Approx(k * nu).epsilon(1e-12));
  CHECK(c[1][0] == doctest::Approx(k * nu).epsilon(1e-12));
  CHECK(c[1][1] == doctest::Approx(k).epsilon(1e-12));
  CHECK(c[2][2] == doctest::Approx(k * (1.0 - nu) / 2.0).epsilon(1e-12));
  CHECK(c[0][2] == doctest::Approx(0.0));
  CHECK(c[2][0] == doctest::Approx(0.0));

  // algorithmic_tangent with delta_gamma = 0 returns the same matrix.
  auto c2 = algorithmic_tangent(uniaxial(1e8), 0.0, 0.0, 0.0, ModelVariant::ModelII, mat);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(c2[i][j] == c[i][j]);

  // Model I at c = 0 and Model II share the elastic branch exactly.
  auto c3 = algorithmic_tangent(uniaxial(1e8), 0.0, 0.0, 0.0, ModelVariant::ModelI, mat);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(c3[i][j] == c2[i][j]);
}

TEST_CASE("consistent tangent matches central finite differences") {
  auto mat = gen::case1_material();
  const double h = 1e-7;
  for (auto model : {ModelVariant::ModelI, ModelVariant::ModelII}) {
    gen::StateGenerator g(model, mat, 31 + static_cast<int>(model));
    for (int i = 0; i < 30; ++i) {
      auto s = g.next_plastic();
      auto r = stress_update(s.state, s.delta_eps, s.c, model, mat);
      CHECK(std::abs(r.tangent[0][1] - r.tangent[1][0]) <=
            1e-9 * std::max(1.0, max_abs(r.tangent)));
      Mat3 fd{};
      for (int dir = 0; dir < 3; ++dir) {
        Strain2 p = s.delta_eps, m = s.delta_eps;
        // Third direction perturbs engineering shear gamma by h.
        if (dir == 0) { p.xx += h; m.xx -= h; }
        if (dir == 1) { p.yy += h; m.yy -= h; }
        if (dir == 2) { p.xy += h / 2.0; m.xy -= h / 2.0; }
        auto rp = stress_update(s.state, p, s.c, model, mat);
        auto rm = stress_update(s.state, m, s.c, model, mat);
        const double col[3] = {
            (rp.new_state.stress.xx - rm.new_state.stress.xx) / (2.0 * h),
            (rp.new_state.stress.yy - rm.new_state.stress.yy) / (2.0 * h),
            (rp.new_state.stress.xy - rm.new_state.stress.xy) / (2.0 * h)};
        for (int row = 0; row < 3; ++row) fd[row][dir] = col[row];
      }
      const double scale = max_abs(r.tangent);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          CHECK(std::abs(fd[a][b] - r.tangent[a][b]) <= 1e-4 * scale);
    }
  }
}

TEST_CASE("uncoupled parameter choices make the update bitwise c-independent") {
  auto mat = gen::case1_material();
  mat.lambda1 = 0.0;
  mat.mu1 = 0.0;
  QuadPointState state;
  const Strain2 d{5e-3, -2e-3, 1.5e-3};
  auto a = stress_update(state, d, 0.0, ModelVariant::ModelI, mat);
  auto b = stress_update(state, d, 0.87, ModelVariant::ModelI, mat);
  CHECK(a.new_state.stress.xx == b.new_state.stress.xx);
  CHECK(a.new_state.kappa == b.new_state.kappa);
  CHECK(a.delta_gamma == b.delta_gamma);

  auto mat2 = gen::case1_material();
  mat2.zeta = 0.0;
  auto a2 = stress_update(state, d, 0.0, ModelVariant::ModelII, mat2);
  auto b2 = stress_update(state, d, 0.87, ModelVariant::ModelII, mat2);
  CHECK(a2.new_state.stress.xx == b2.new_state.stress.xx);
  CHECK(a2.delta_gamma == b2.delta_gamma);
}

TEST_CASE("Model II local Newton reports non-convergence only for pathological input") {
  auto mat = gen::case1_material();
  // Healthy parameters converge far below the iteration cap.
  QuadPointState state;
  auto r = stress_update(state, Strain2{1e-2, 0.0, 0.0}, 0.5, ModelVariant::ModelII, mat);
  CHECK(r.local_newton_iterations < 20);
  CHECK(r.delta_gamma > 0.0);
  // (zeta c + 1) <= 0 is rejected.
  CHECK_THROWS_AS(
      stress_update(state, Strain2{1e-2, 0.0, 0.0}, 4.0, ModelVariant::ModelII, mat),
      ConstitutiveError);
}
