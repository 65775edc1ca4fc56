// Concentration-degraded J2 plasticity under plane stress: degradation
// models, backward-Euler return mapping with a nested out-of-plane strain
// solve, and the consistent algorithmic tangent.
//
// Model I:  lambda(c) = lambda0 + lambda1 c/c_ref, mu(c) likewise, linear
//           isotropic hardening sigma_y = sigma0 + H kappa.
// Model II: virgin elastic moduli, Swift hardening with the elastic limit
//           scaled by (zeta c + 1): sigma_y = (zeta c + 1) sigma0
//           (1 + kappa/kappa0)^{n_w}, kappa0 = sigma0/E.
#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

namespace cpd {

class ConstitutiveError : public std::runtime_error {
 public:
  explicit ConstitutiveError(const std::string& what) : std::runtime_error(what) {}
};

// All material constants in one bag (elasticity, hardening, coupling,
// diffusivity). Diffusivity members are consumed by the diffusion solver.
struct MaterialParams {
  double lambda0 = 0.0;  // Pa
  double mu0 = 0.0;      // Pa
  double lambda1 = 0.0;  // Pa per unit c/c_ref
  double mu1 = 0.0;      // Pa per unit c/c_ref
  double c_ref = 1.0;
  double sigma0 = 0.0;   // Pa, initial yield stress
  double H = 0.0;        // Pa, Model I hardening modulus
  double n_w = 1.0;      // Model II work-hardening exponent
  double zeta = 0.0;     // Model II yield-coupling parameter
  std::array<double, 2> rho_b{0.0, 0.0};  // body force per volume
  double d1 = 1.0;       // principal diffusivities
  double d2 = 1.0;
  double theta = 0.0;    // principal-axis angle (radians)
  double eta_T = 0.0;
  double eta_S = 0.0;
  double E_ref = 1.0;    // reference strain invariant
  double phi_T = 1.0;
  double phi_S = 1.0;
  double m_source = 0.0; // volumetric source

  double youngs() const;      // E from the virgin Lame parameters
  double poisson() const;
  double kappa0() const { return sigma0 / youngs(); }

  // H = Et / (1 - Et/E); used when the config supplies a tangent modulus.
  static double hardening_from_tangent_modulus(double Et, double E);

  void validate() const;  // throws ConstitutiveError on violated invariants
};

enum class ModelVariant { ModelI, ModelII, LinearElastic, PerfectPlastic };

// Symmetric tensor with zero out-of-plane shear (all that plane-stress J2
// flow with in-plane loading can produce). xy is the tensor component.
struct Sym3 {
  double xx = 0.0, yy = 0.0, zz = 0.0, xy = 0.0;

  double trace() const { return xx + yy + zz; }
  Sym3 deviator() const {
    const double p = trace() / 3.0;
    return {xx - p, yy - p, zz - p, xy};
  }
  double norm() const;  // Frobenius norm, counting xy twice
};

struct QuadPointState {
  Sym3 stress;          // Pa, out-of-plane normal kept to enforce plane stress
  Sym3 plastic_strain;  // traceless
  double kappa = 0.0;   // accumulated equivalent plastic strain
};

// In-plane strain increment; xy is the tensor component (gamma/2).
struct Strain2 {
  double xx = 0.0, yy = 0.0, xy = 0.0;
};

// Reduced plane-stress tangent in Voigt order (11, 22, 12) with engineering
// shear gamma = 2 eps_12 in the third slot.
using Mat3 = std::array<std::array<double, 3>, 3>;

struct StressUpdateResult {
  QuadPointState new_state;
  double delta_gamma = 0.0;
  Mat3 tangent{};
  double eps33 = 0.0;  // out-of-plane strain increment resolved by the update
  int local_newton_iterations = 0;
};

// lambda(c), mu(c) for Model I degradation. Throws when the degraded moduli
// leave the admissible range (mu <= 0 or bulk modulus <= 0).
std::pair<double, double> lame_params(double c, const MaterialParams& mat);

// Scaled von Mises yield value: f = sqrt(3/2) ||dev stress|| - sigma_y*.
// Uniaxial stress sigma at kappa = 0, c = 0 gives f = sigma - sigma0.
// LinearElastic returns -infinity (never yields).
double yield_function(ModelVariant model, const Sym3& stress, double kappa,
                      double c, const MaterialParams& mat);

// Backward-Euler return mapping for one in-plane strain increment at frozen
// concentration. Enforces plane stress (|T33| <= 1e-9 sigma0) by a nested
// scalar Newton on the out-of-plane strain increment, and returns the exact
// consistent tangent of the composed map.
StressUpdateResult stress_update(const QuadPointState& state_n, const Strain2& delta_eps,
                                 double c, ModelVariant model, const MaterialParams& mat);

// Consistent tangent from the trial state of the converged update:
// trial_stress is the full 3D elastic trial stress, kappa_updated the
// post-update kappa. delta_gamma = 0 returns the plane-stress elastic matrix.
Mat3 algorithmic_tangent(const Sym3& trial_stress, double kappa_updated,
                         double delta_gamma, double c, ModelVariant model,
                         const MaterialParams& mat);

// Plane-stress elastic matrix for given Lame parameters:
// E/(1-nu^2) [1 nu 0; nu 1 0; 0 0 (1-nu)/2].
Mat3 elastic_tangent_plane_stress(double lambda, double mu);

}  // namespace cpd
