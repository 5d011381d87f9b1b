#include "nhk/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nhk/bracket.hpp"

namespace nhk {

namespace {

using nlohmann::json;

json snakeboard_doc() {
  const double half_pi = std::numbers::pi / 2.0;
  return {
      {"name", "snakeboard"},
      {"coords", {"x", "y", "theta", "psi", "phi"}},
      {"constraints_rank", 2},
      {"params", {{"m", 1.0}, {"r", 1.0}, {"J0", 0.5}, {"Jw", 0.25}}},
      {"metric",
       {{"m", "0", "0", "0", "0"},
        {"0", "m", "0", "0", "0"},
        {"0", "0", "m*r^2", "J0", "0"},
        {"0", "0", "J0", "J0", "0"},
        {"0", "0", "0", "0", "2*Jw"}}},
      {"potential", "0"},
      {"constraint_forms",
       {{"-sin(theta+phi)", "cos(theta+phi)", "-r*cos(phi)", "0", "0"},
        {"-sin(theta-phi)", "cos(theta-phi)", "r*cos(phi)", "0", "0"}}},
      {"d_frame",
       {{"names", {"psi", "phi", "S"}},
        {"vectors",
         {{"0", "0", "0", "1", "0"},
          {"0", "0", "0", "0", "1"},
          {"-2*r*cos(phi)^2*cos(theta)", "-2*r*cos(phi)^2*sin(theta)", "sin(2*phi)", "0", "0"}}}}},
      {"w_frame",
       {{"-0.5*sin(theta)*sec(phi)", "0.5*cos(theta)*sec(phi)", "-sec(phi)/(2*r)", "0", "0"},
        {"-0.5*sin(theta)*sec(phi)", "0.5*cos(theta)*sec(phi)", "sec(phi)/(2*r)", "0", "0"}}},
      {"adapted", nullptr},
      {"domain", {{"phi", {-half_pi, half_pi}}}},
  };
}

json nh_particle_doc() {
  return {
      {"name", "nh_particle"},
      {"coords", {"x", "y", "z"}},
      {"constraints_rank", 1},
      {"params", json::object()},
      {"metric", {{"1", "0", "0"}, {"0", "1", "0"}, {"0", "0", "1"}}},
      {"potential", "0"},
      {"constraint_forms", {{"-y", "0", "1"}}},
      {"w_frame", nullptr},
      {"adapted", {{"s_indices", {2}}}},
      {"domain", nullptr},
  };
}

json rolling_disk_doc() {
  return {
      {"name", "rolling_disk"},
      {"coords", {"x", "y", "phi", "theta"}},
      {"constraints_rank", 2},
      {"params", {{"mass", 1.0}, {"R", 1.0}, {"Iroll", 0.5}, {"Iyaw", 0.25}}},
      {"metric",
       {{"mass", "0", "0", "0"}, {"0", "mass", "0", "0"}, {"0", "0", "Iroll", "0"}, {"0", "0", "0", "Iyaw"}}},
      {"potential", "0"},
      {"constraint_forms", {{"1", "0", "-R*cos(theta)", "0"}, {"0", "1", "-R*sin(theta)", "0"}}},
      {"w_frame", nullptr},
      {"adapted", {{"s_indices", {0, 1}}}},
      {"domain", nullptr},
  };
}

void require_positive(const ParamMap& p, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    const double v = p.at(n);
    if (!(v > 0.0)) throw DomainError(std::string("parameter ") + n + " must be positive");
  }
}

ParamMap params_of(const json& doc) { return doc["params"].get<ParamMap>(); }

}  // namespace

std::vector<std::string> builtin_names() { return {"snakeboard", "nh_particle", "rolling_disk"}; }

json builtin_definition(const std::string& name, const ParamMap& overrides) {
  json doc;
  if (name == "snakeboard") {
    doc = snakeboard_doc();
  } else if (name == "nh_particle") {
    doc = nh_particle_doc();
  } else if (name == "rolling_disk") {
    doc = rolling_disk_doc();
  } else {
    throw LookupError("unknown builtin system '" + name + "'");
  }
  for (const auto& [key, value] : overrides) {
    if (!doc["params"].contains(key)) {
      throw LookupError("system '" + name + "' has no parameter '" + key + "'");
    }
    doc["params"][key] = value;
  }
  const ParamMap p = params_of(doc);
  if (name == "snakeboard") {
    require_positive(p, {"m", "r", "J0", "Jw"});
    // r²m − J0 sin²φ > 0 on the whole φ interval.
    if (!(p.at("r") * p.at("r") * p.at("m") > p.at("J0"))) {
      throw DomainError("snakeboard parameters need r^2 m > J0");
    }
  } else if (name == "rolling_disk") {
    require_positive(p, {"mass", "R", "Iroll", "Iyaw"});
  }
  return doc;
}

NonholonomicSystem builtin(const std::string& name, const ParamMap& overrides) {
  return load_system(builtin_definition(name, overrides));
}

SnakeboardParams SnakeboardParams::from(const ParamMap& p) {
  const ParamMap full = params_of(builtin_definition("snakeboard", p));
  return {full.at("m"), full.at("r"), full.at("J0"), full.at("Jw")};
}

double snakeboard_expected(const std::string& name, const PointM& p, const ParamMap& params) {
  static const std::vector<std::string> names = {"jac_ppsi", "jac_palphaS", "jac_eps1",   "jac_eps2",
                                                 "J1",       "J2",          "J1_alt", "J2_alt",
                                                 "KW_coeff", "pi_coeff"};
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw LookupError("unknown closed form '" + name + "'");
  }
  const SnakeboardParams sp = SnakeboardParams::from(params);
  if (p.q.size() != 5) throw ContractViolation("snakeboard point needs 5 coordinates");
  const double phi = p.q[4];
  if (!(phi > -std::numbers::pi / 2 && phi < std::numbers::pi / 2) || std::abs(std::cos(phi)) <= 1e-12) {
    throw DomainError("phi = " + std::to_string(phi) + " outside (-pi/2, pi/2)");
  }
  const double c = std::cos(phi), s = std::sin(phi);
  const double mr2 = sp.m * sp.r * sp.r;
  const double den = mr2 - sp.J0 * s * s;
  // κ(X₁, X_α)[κ(X_α, X_β)]⁻¹ for the builtin metric and frames.
  const double J1 = (sp.J0 - mr2) * s / (4.0 * sp.r * c * c * den);
  const double J2 = -sp.m * sp.r * c / (2.0 * den);
  if (name == "J1") return J1;
  if (name == "J2") return J2;
  if (name == "J1_alt") return sp.m * sp.r * s / (c * c) / (4.0 * den);
  if (name == "J2_alt") return -sp.m * sp.r * s / (c * c) / (4.0 * den) * std::sin(2.0 * phi);
  if (name == "jac_ppsi") return 4.0 * sp.r * c * J2;
  if (name == "jac_palphaS") return 4.0 * sp.r * c * J1;
  if (name == "jac_eps1") return -2.0 * sp.r * c;
  if (name == "jac_eps2") return 2.0 * sp.r * c;
  if (name == "KW_coeff") return -2.0 * sp.r * c;
  if (p.ptilde.size() != 3) throw ContractViolation("snakeboard point needs 3 momenta");
  const double p_psi = p.ptilde[0], p_S = p.ptilde[2];
  return 2.0 * std::tan(phi) * p_S + 4.0 * sp.r * c * (J1 * p_S + J2 * p_psi);
}

// ---------------------------------------------------------------------------
// Reduction by SE(2)

namespace {

constexpr std::array<std::size_t, 5> kReducedToFull = {3, 4, 5, 6, 7};

}  // namespace

PointM snakeboard_lift(const ReducedPoint& z, const Representative& rep) {
  return PointM{{rep[0], rep[1], rep[2], z[0], z[1]}, {z[2], z[3], z[4]}};
}

Matrix<double> snakeboard_reduced_bivector(const ReducedPoint& p_red, const ParamMap& params,
                                           const Representative& rep) {
  const NonholonomicSystem sys = builtin("snakeboard", params);
  const BivectorAtPoint pi = nh_bivector(sys, snakeboard_lift(p_red, rep), 0);
  Matrix<double> out(5, 5);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) out(a, b) = pi.entry(kReducedToFull[a], kReducedToFull[b]);
  return out;
}

Matrix<double> snakeboard_reduced_bivector_closed_form(const ReducedPoint& p_red, const ParamMap& params) {
  const PointM p = snakeboard_lift(p_red, {0.0, 0.0, 0.0});
  const double f = snakeboard_expected("pi_coeff", p, params);
  // ∂ψ∧∂p̃_ψ + ∂φ∧∂p̃_φ − f ∂p̃_S∧∂p̃_φ in the chart (ψ, φ, p̃_ψ, p̃_φ, p̃_S)
  Matrix<double> out(5, 5);
  out(0, 2) = 1.0;
  out(2, 0) = -1.0;
  out(1, 3) = 1.0;
  out(3, 1) = -1.0;
  out(4, 3) = -f;
  out(3, 4) = f;
  return out;
}

ReducedVector snakeboard_reduced_sharp(const ReducedPoint& p_red, const ReducedVector& alpha,
                                       const ParamMap& params) {
  const NonholonomicSystem sys = builtin("snakeboard", params);
  auto at = [&](const Representative& rep) {
    const BivectorAtPoint pi = nh_bivector(sys, snakeboard_lift(p_red, rep), 0);
    std::vector<double> full(sys.dim_M(), 0.0);  // ρ*α
    for (std::size_t a = 0; a < 5; ++a) full[kReducedToFull[a]] = alpha[a];
    const std::vector<double> v = pi.apply(full);
    ReducedVector out{};
    for (std::size_t a = 0; a < 5; ++a) out[a] = v[kReducedToFull[a]];  // Tρ
    return out;
  };
  const ReducedVector v0 = at({0.0, 0.0, 0.0});
  const ReducedVector v1 = at({1.3, -0.7, 0.9});
  double scale = 1.0;
  for (double x : v0) scale = std::max(scale, std::abs(x));
  for (std::size_t a = 0; a < 5; ++a) {
    if (std::abs(v0[a] - v1[a]) > 1e-10 * scale) {
      throw InternalInvariant("reduced sharp depends on the group representative");
    }
  }
  return v0;
}

Trivector snakeboard_reduced_jacobiator(const ReducedPoint& p_red, const ParamMap& params,
                                        const Representative& rep) {
  const NonholonomicSystem sys = builtin("snakeboard", params);
  const BivectorAtPoint pi = nh_bivector(sys, snakeboard_lift(p_red, rep), 1);
  const auto& ix = kReducedToFull;
  auto P = [&](std::size_t a, std::size_t b) { return pi.entry(ix[a], ix[b]); };
  auto dP = [&](std::size_t a, std::size_t b, std::size_t l) { return pi.entry_jet(ix[a], ix[b]).grad(ix[l]); };
  auto outer = [&](std::size_t f, std::size_t g, std::size_t h) {
    double s = 0.0;
    for (std::size_t l = 0; l < 5; ++l) s += P(f, l) * dP(g, h, l);
    return s;
  };
  Trivector t(5);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b)
      for (std::size_t c = 0; c < 5; ++c) t(a, b, c) = outer(a, b, c) + outer(b, c, a) + outer(c, a, b);
  return t;
}

}  // namespace nhk
