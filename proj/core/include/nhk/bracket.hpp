#pragma once

// The nonholonomic bivector π and the dynamics it generates.
//
// Sign conventions: π♯(α) = X iff X ∈ C and i_X Ω_M|_C = −α|_C;
// {f, g} = π(df, dg); X_f = −π♯(df).

#include <span>
#include <vector>

#include "nhk/manifold.hpp"

namespace nhk {

struct BivectorAtPoint {
  /// N×N, π♯(α) = sharp·α. At order 1 entries carry first derivatives in
  /// the chart variables (q, p̃).
  Matrix<Jet1> sharp;

  [[nodiscard]] std::size_t dim() const noexcept { return sharp.rows(); }
  /// π(dy^a, dy^b).
  [[nodiscard]] double entry(std::size_t a, std::size_t b) const { return sharp(b, a).value(); }
  /// Jet of π(dy^a, dy^b).
  [[nodiscard]] const Jet1& entry_jet(std::size_t a, std::size_t b) const { return sharp(b, a); }
  [[nodiscard]] std::vector<double> apply(std::span<const double> covector) const;
  [[nodiscard]] double pair(std::span<const double> alpha, std::span<const double> beta) const;
};

BivectorAtPoint nh_bivector(const PhaseSpaceModel& model);
BivectorAtPoint nh_bivector(const NonholonomicSystem& sys, const PointM& p, int order = 0);

struct HamiltonianAtPoint {
  double value = 0.0;
  std::vector<double> differential;  // chart coframe {dq, dp̃}
};

HamiltonianAtPoint hamiltonian_M(const NonholonomicSystem& sys, const PointM& p);

/// X_nh = −π♯(dH_M), checked against i_X Ω_M|_C = dH_M|_C.
std::vector<double> nh_vector_field(const PhaseSpaceModel& model, const BivectorAtPoint& pi);
std::vector<double> nh_vector_field(const NonholonomicSystem& sys, const PointM& p);

/// {f, g} for chart covectors df, dg.
double bracket(const BivectorAtPoint& pi, std::span<const double> df, std::span<const double> dg);

}  // namespace nhk
