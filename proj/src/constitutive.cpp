#include "cpd/constitutive.hpp"

#include <cmath>
#include <limits>

namespace cpd {

double MaterialParams::youngs() const {
  return mu0 * (3.0 * lambda0 + 2.0 * mu0) / (lambda0 + mu0);
}

double MaterialParams::poisson() const { return lambda0 / (2.0 * (lambda0 + mu0)); }

double MaterialParams::hardening_from_tangent_modulus(double Et, double E) {
  if (!(Et > 0.0) || !(Et < E))
    throw ConstitutiveError("tangent modulus must satisfy 0 < Et < E");
  return Et / (1.0 - Et / E);
}

void MaterialParams::validate() const {
  if (!(mu0 > 0.0)) throw ConstitutiveError("mu0 must be positive");
  if (!(3.0 * lambda0 + 2.0 * mu0 > 0.0))
    throw ConstitutiveError("virgin bulk modulus must be positive");
  if (H < 0.0) throw ConstitutiveError("H must be non-negative");
  if (!(n_w >= 1.0)) throw ConstitutiveError("n_w must be at least 1");
  if (!(c_ref > 0.0)) throw ConstitutiveError("c_ref must be positive");
  if (!(sigma0 > 0.0)) throw ConstitutiveError("sigma0 must be positive");
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw ConstitutiveError("d1, d2 must be positive");
  if (eta_T < 0.0 || eta_S < 0.0) throw ConstitutiveError("eta_T, eta_S must be non-negative");
  if (!(phi_T > 0.0) || !(phi_S > 0.0)) throw ConstitutiveError("phi_T, phi_S must be positive");
}

double Sym3::norm() const {
  return std::sqrt(xx * xx + yy * yy + zz * zz + 2.0 * xy * xy);
}

std::pair<double, double> lame_params(double c, const MaterialParams& mat) {
  const double lambda = mat.lambda0 + mat.lambda1 * c / mat.c_ref;
  const double mu = mat.mu0 + mat.mu1 * c / mat.c_ref;
  if (!(mu > 0.0))
    throw ConstitutiveError("degraded shear modulus not positive at c = " + std::to_string(c));
  if (!(3.0 * lambda + 2.0 * mu > 0.0))
    throw ConstitutiveError("degraded bulk modulus not positive at c = " + std::to_string(c));
  return {lambda, mu};
}

namespace {

constexpr double kSqrt23 = 0.81649658092772603273;  // sqrt(2/3)

struct ModelTraits {
  double lambda = 0.0;
  double mu = 0.0;
  bool plastic = true;  // false for LinearElastic
  double hardening_H = 0.0;  // Model I / PerfectPlastic
};

ModelTraits traits_for(ModelVariant model, double c, const MaterialParams& mat) {
  ModelTraits t;
  switch (model) {
    case ModelVariant::ModelI: {
      auto [l, m] = lame_params(c, mat);
      t.lambda = l;
      t.mu = m;
      t.hardening_H = mat.H;
      break;
    }
    case ModelVariant::PerfectPlastic:
      t.lambda = mat.lambda0;
      t.mu = mat.mu0;
      t.hardening_H = 0.0;
      break;
    case ModelVariant::ModelII:
    case ModelVariant::LinearElastic:
      t.lambda = mat.lambda0;
      t.mu = mat.mu0;
      t.plastic = model == ModelVariant::ModelII;
      break;
  }
  return t;
}

// Elastic-limit radius sigma_y*(kappa) and its kappa-derivative.
double sigma_y(ModelVariant model, double kappa, double c, const MaterialParams& mat,
               double hardening_H) {
  if (model == ModelVariant::ModelII) {
    const double scale = mat.zeta * c + 1.0;
    if (!(scale > 0.0))
      throw ConstitutiveError("(zeta c + 1) must be positive, got " + std::to_string(scale));
    return scale * mat.sigma0 * std::pow(1.0 + kappa / mat.kappa0(), mat.n_w);
  }
  return mat.sigma0 + hardening_H * kappa;
}

double sigma_y_slope(ModelVariant model, double kappa, double c,
                     const MaterialParams& mat, double hardening_H) {
  if (model == ModelVariant::ModelII) {
    const double k0 = mat.kappa0();
    return (mat.zeta * c + 1.0) * mat.sigma0 * (mat.n_w / k0) *
           std::pow(1.0 + kappa / k0, mat.n_w - 1.0);
  }
  return hardening_H;
}

struct ReturnMapResult {
  Sym3 stress;          // updated 3D stress
  Sym3 trial_stress;    // elastic trial
  Sym3 plastic_strain;  // updated
  double kappa = 0.0;   // updated
  double delta_gamma = 0.0;
  int newton_iterations = 0;
};

// Fixed-strain backward-Euler radial return in 3D (eps33 given).
ReturnMapResult radial_return(const QuadPointState& sn, double exx, double eyy,
                              double ezz, double exy, double c, ModelVariant model,
                              const MaterialParams& mat, const ModelTraits& t) {
  ReturnMapResult r;
  const double tr = exx + eyy + ezz;
  r.trial_stress = {sn.stress.xx + t.lambda * tr + 2.0 * t.mu * exx,
                    sn.stress.yy + t.lambda * tr + 2.0 * t.mu * eyy,
                    sn.stress.zz + t.lambda * tr + 2.0 * t.mu * ezz,
                    sn.stress.xy + 2.0 * t.mu * exy};
  r.stress = r.trial_stress;
  r.plastic_strain = sn.plastic_strain;
  r.kappa = sn.kappa;

  if (!t.plastic) return r;

  const Sym3 s_trial = r.trial_stress.deviator();
  const double nrm = s_trial.norm();
  const double f_trial = nrm - kSqrt23 * sigma_y(model, sn.kappa, c, mat, t.hardening_H);
  if (f_trial <= 0.0) return r;

  double dg = 0.0;
  if (model == ModelVariant::ModelII) {
    // F(dg) = nrm - 2 mu dg - sqrt(2/3) sigma_y(kappa_n + sqrt(2/3) dg) is
    // concave and decreasing; Newton from 0 converges globally. Iterate well
    // below the contract tolerance so finite differences of the composed map
    // stay clean.
    const double target = kSqrt23 * 1e-13 * mat.sigma0;
    const double contract = kSqrt23 * 1e-8 * mat.sigma0;
    double f = f_trial;
    double prev_abs = std::numeric_limits<double>::max();
    for (int k = 0; k < 50; ++k) {
      const double kap = sn.kappa + kSqrt23 * dg;
      const double slope = -2.0 * t.mu - (2.0 / 3.0) * sigma_y_slope(model, kap, c, mat, 0.0);
      dg -= f / slope;
      if (dg < 0.0) dg = 0.0;
      f = nrm - 2.0 * t.mu * dg -
          kSqrt23 * sigma_y(model, sn.kappa + kSqrt23 * dg, c, mat, 0.0);
      r.newton_iterations = k + 1;
      const double abs_f = std::abs(f);
      if (abs_f <= target) break;
      if (abs_f >= prev_abs && abs_f <= contract) break;  // roundoff stall
      prev_abs = abs_f;
    }
    if (std::abs(f) > contract)
      throw ConstitutiveError("local Newton for the consistency condition did not converge: residual " +
                              std::to_string(f) + " Pa after 50 iterations");
  } else {
    dg = f_trial / (2.0 * t.mu + (2.0 / 3.0) * t.hardening_H);
    r.newton_iterations = 0;
  }

  const double inv = 1.0 / nrm;
  const Sym3 n_hat{s_trial.xx * inv, s_trial.yy * inv, s_trial.zz * inv, s_trial.xy * inv};
  r.stress = {r.trial_stress.xx - 2.0 * t.mu * dg * n_hat.xx,
              r.trial_stress.yy - 2.0 * t.mu * dg * n_hat.yy,
              r.trial_stress.zz - 2.0 * t.mu * dg * n_hat.zz,
              r.trial_stress.xy - 2.0 * t.mu * dg * n_hat.xy};
  r.plastic_strain = {sn.plastic_strain.xx + dg * n_hat.xx, sn.plastic_strain.yy + dg * n_hat.yy,
                      sn.plastic_strain.zz + dg * n_hat.zz, sn.plastic_strain.xy + dg * n_hat.xy};
  r.kappa = sn.kappa + kSqrt23 * dg;
  r.delta_gamma = dg;
  return r;
}

using Mat4 = std::array<std::array<double, 4>, 4>;

// 3D consistent tangent in Voigt order (11, 22, 33, 12) with engineering
// shear in the last slot.
Mat4 tangent4(const Sym3& trial_stress, double kappa_updated, double delta_gamma,
              double c, ModelVariant model, const MaterialParams& mat,
              const ModelTraits& t) {
  Mat4 m{};
  const double l = t.lambda, mu = t.mu;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = l + (i == j ? 2.0 * mu : 0.0);
  m[3][3] = mu;

  if (delta_gamma <= 0.0) return m;

  const Sym3 s_trial = trial_stress.deviator();
  const double nrm = s_trial.norm();
  const std::array<double, 4> n{s_trial.xx / nrm, s_trial.yy / nrm, s_trial.zz / nrm,
                                s_trial.xy / nrm};
  const double curly_m =
      2.0 * mu + (2.0 / 3.0) * sigma_y_slope(model, kappa_updated, c, mat, t.hardening_H);
  const double a = 4.0 * mu * mu / curly_m;
  const double b = 4.0 * mu * mu * delta_gamma / nrm;

  // Deviatoric symmetric identity in engineering convention.
  Mat4 idev{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) idev[i][j] = (i == j ? 1.0 : 0.0) - 1.0 / 3.0;
  idev[3][3] = 0.5;

  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      m[i][j] -= a * n[i] * n[j] + b * (idev[i][j] - n[i] * n[j]);
  return m;
}

Mat3 condense(const Mat4& m) {
  const int keep[3] = {0, 1, 3};
  Mat3 red{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      red[a][b] = m[keep[a]][keep[b]] - m[keep[a]][2] * m[2][keep[b]] / m[2][2];
  return red;
}

}  // namespace

double yield_function(ModelVariant model, const Sym3& stress, double kappa, double c,
                      const MaterialParams& mat) {
  if (model == ModelVariant::LinearElastic)
    return -std::numeric_limits<double>::infinity();
  const double vm = std::sqrt(1.5) * stress.deviator().norm();
  const double h = model == ModelVariant::PerfectPlastic ? 0.0 : mat.H;
  return vm - sigma_y(model, kappa, c, mat, h);
}

Mat3 elastic_tangent_plane_stress(double lambda, double mu) {
  Mat4 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = lambda + (i == j ? 2.0 * mu : 0.0);
  m[3][3] = mu;
  return condense(m);
}

Mat3 algorithmic_tangent(const Sym3& trial_stress, double kappa_updated,
                         double delta_gamma, double c, ModelVariant model,
                         const MaterialParams& mat) {
  const ModelTraits t = traits_for(model, c, mat);
  return condense(tangent4(trial_stress, kappa_updated, delta_gamma, c, model, mat, t));
}

StressUpdateResult stress_update(const QuadPointState& state_n, const Strain2& delta_eps,
                                 double c, ModelVariant model, const MaterialParams& mat) {
  const ModelTraits t = traits_for(model, c, mat);

  auto evaluate = [&](double ezz) {
    return radial_return(state_n, delta_eps.xx, delta_eps.yy, ezz, delta_eps.xy, c,
                         model, mat, t);
  };

  // Planar-stress residual g(ezz) = T33(ezz) is strictly increasing; Newton
  // with the exact (algorithmic) derivative plus a bisection safeguard.
  const double tol_target = 1e-11 * mat.sigma0;
  const double tol_contract = 1e-9 * mat.sigma0;
  double ezz = -t.lambda / (t.lambda + 2.0 * t.mu) * (delta_eps.xx + delta_eps.yy);
  ReturnMapResult rr = evaluate(ezz);
  double g = rr.stress.zz;

  double lo = ezz, hi = ezz;  // bracket with g(lo) < 0 < g(hi), grown on demand
  bool have_lo = g < 0.0, have_hi = g > 0.0;
  if (have_lo) lo = ezz;
  if (have_hi) hi = ezz;

  int iters = 0;
  double prev_abs = std::numeric_limits<double>::max();
  while (std::abs(g) > tol_target && iters < 100) {
    ++iters;
    const Mat4 c4 = tangent4(rr.trial_stress, rr.kappa, rr.delta_gamma, c, model, mat, t);
    double step = -g / c4[2][2];
    double next = ezz + step;
    if (have_lo && have_hi && (next <= lo || next >= hi)) next = 0.5 * (lo + hi);
    if (!have_lo && g > 0.0 && next >= ezz) next = ezz - std::max(2.0 * std::abs(step), 1e-6);
    if (!have_hi && g < 0.0 && next <= ezz) next = ezz + std::max(2.0 * std::abs(step), 1e-6);
    ezz = next;
    rr = evaluate(ezz);
    g = rr.stress.zz;
    if (g < 0.0) {
      lo = ezz;
      have_lo = true;
    } else if (g > 0.0) {
      hi = ezz;
      have_hi = true;
    }
    const double abs_g = std::abs(g);
    if (abs_g >= prev_abs && abs_g <= tol_contract) break;  // roundoff stall
    prev_abs = abs_g;
  }
  if (std::abs(g) > tol_contract)
    throw ConstitutiveError("plane-stress enforcement did not converge: |T33| = " +
                            std::to_string(std::abs(g)) + " Pa");

  StressUpdateResult out;
  out.new_state = {rr.stress, rr.plastic_strain, rr.kappa};
  out.delta_gamma = rr.delta_gamma;
  out.eps33 = ezz;
  out.local_newton_iterations = rr.newton_iterations;
  out.tangent = condense(tangent4(rr.trial_stress, rr.kappa, rr.delta_gamma, c, model, mat, t));
  return out;
}

}  // namespace cpd
