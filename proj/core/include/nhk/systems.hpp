#pragma once

// Builtin systems and the snakeboard's closed forms.
//
//   snakeboard   (x, y, theta, psi, phi), two wheel constraints, frames
//                X_psi, X_phi, X_S for D and X1, X2 for W. Parameters m, r,
//                J0 (rotor) and Jw (each wheel).
//   nh_particle  (x, y, z), ε = dz − y dx, adapted with s = z.
//   rolling_disk (x, y, phi, theta), ε¹ = dx − R cosθ dφ, ε² = dy − R sinθ dφ,
//                adapted with s = (x, y).

#include <array>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nhk/jacobiator.hpp"
#include "nhk/manifold.hpp"

namespace nhk {

using ParamMap = std::map<std::string, double>;

std::vector<std::string> builtin_names();

/// Definition document with parameter overrides applied. Unknown system
/// or parameter names raise LookupError; invalid values raise DomainError.
nlohmann::json builtin_definition(const std::string& name, const ParamMap& overrides = {});

NonholonomicSystem builtin(const std::string& name, const ParamMap& overrides = {});

struct SnakeboardParams {
  double m = 1.0;
  double r = 1.0;
  double J0 = 0.5;
  double Jw = 0.25;

  /// Defaults overridden by `p`; validated.
  static SnakeboardParams from(const ParamMap& p);
};

/// Closed forms at p (only φ and the momenta matter):
///   J1, J2        coefficients with p̃₁ = −p̃₂ = J1 p̃_S + J2 p̃_ψ:
///                 J1 = (J0 − mr²) sinφ sec²φ / (4r(r²m − J0 sin²φ)),
///                 J2 = −mr cosφ / (2(r²m − J0 sin²φ))
///   J1_alt, J2_alt
///                 mr sinφ sec²φ / (4(r²m − J0 sin²φ)) and −J1_alt sin 2φ;
///                 these do not satisfy the relation above for this metric
///                 and frame and are kept for comparison only
///   jac_ppsi      4r cosφ J2      (dp̃_φ, dp̃_S, dψ)
///   jac_palphaS   4r cosφ J1      (dp̃_φ, dp̃_S, α_S)
///   jac_eps1/2    (−1)^i 2r cosφ  (dp̃_φ, dp̃_S, ε^i)
///   KW_coeff      −2r cosφ
///   pi_coeff      2 tanφ p̃_S + 4r cosφ (J1 p̃_S + J2 p̃_ψ) = π(dp̃_φ, dp̃_S)
/// The three jac_* values are the cyclic sums returned by the jacobiator
/// functions.
double snakeboard_expected(const std::string& name, const PointM& p, const ParamMap& params = {});

/// Reduced chart (ψ, φ, p̃_ψ, p̃_φ, p̃_S).
using ReducedPoint = std::array<double, 5>;
using ReducedVector = std::array<double, 5>;
/// Group representative (x, y, θ).
using Representative = std::array<double, 3>;

/// Tρ∘π♯∘ρ* evaluated at one representative and cross-checked against a
/// second one.
ReducedVector snakeboard_reduced_sharp(const ReducedPoint& p_red, const ReducedVector& alpha,
                                       const ParamMap& params = {});

/// π_red(dz^a, dz^b) from the full bivector at the given representative.
Matrix<double> snakeboard_reduced_bivector(const ReducedPoint& p_red, const ParamMap& params = {},
                                           const Representative& rep = {0.0, 0.0, 0.0});

/// π_red(dz^a, dz^b) from the closed-form reduced display.
Matrix<double> snakeboard_reduced_bivector_closed_form(const ReducedPoint& p_red,
                                                       const ParamMap& params = {});

/// Cyclic sum of the reduced bracket in the reduced chart, differentiating
/// only along reduced coordinates.
Trivector snakeboard_reduced_jacobiator(const ReducedPoint& p_red, const ParamMap& params = {},
                                        const Representative& rep = {0.0, 0.0, 0.0});

/// Full chart point over a reduced point.
PointM snakeboard_lift(const ReducedPoint& p_red, const Representative& rep);

}  // namespace nhk
