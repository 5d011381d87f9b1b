#pragma once

// Curvatures of the splittings TQ = D ⊕ W and TM = C ⊕ 𝒲, and the
// coefficients A, C, K of adapted coordinates.

#include <span>
#include <vector>

#include "nhk/manifold.hpp"

namespace nhk {

/// K_𝒲(X, Y) = −P_𝒲([P_C X, P_C Y]) = Σ_a (Xᵀ·coeffs[a]·Y) Z̃_a.
struct CurvatureAtPoint {
  std::vector<Matrix<double>> coeffs;  // k matrices, N×N, antisymmetric
  Matrix<double> W_basis;              // N×k, the Z̃_a used for coeffs

  /// Components of K_𝒲(X, Y) along Z̃_a.
  [[nodiscard]] std::vector<double> components(std::span<const double> x,
                                               std::span<const double> y) const;
  /// K_𝒲(X, Y) in the chart basis.
  [[nodiscard]] std::vector<double> apply(std::span<const double> x, std::span<const double> y) const;
};

/// Requires a model built at order 1.
CurvatureAtPoint curvature_at(const PhaseSpaceModel& model);

std::vector<double> curvature_KW_M(const NonholonomicSystem& sys, const PointM& p,
                                   std::span<const double> x, std::span<const double> y,
                                   const std::optional<LiftShift>& lift = std::nullopt);

/// dε^a(P_D v, P_D w)·Z_a.
std::vector<double> curvature_KW_Q(const NonholonomicSystem& sys, std::span<const double> q,
                                   std::span<const double> v, std::span<const double> w);

/// Coefficients of adapted coordinates (r, s) with ε^a = ds^a + A^a_α dr^α.
/// Arrays are indexed [a][α][β] flattened as (a·m + α)·m + β.
struct AdaptedData {
  std::size_t k = 0, m = 0;
  Matrix<Jet2> A;  // k×m, jets in q
  Matrix<Jet2> J;  // k×m, p̃_a = J_a^β p̃_β for p̃_a = p(∂/∂s^a), jets in q
  std::vector<double> C;
  std::vector<double> Kcoef;

  [[nodiscard]] double c(std::size_t a, std::size_t al, std::size_t be) const {
    return C[(a * m + al) * m + be];
  }
  [[nodiscard]] double K(std::size_t a, std::size_t al, std::size_t be) const {
    return Kcoef[(a * m + al) * m + be];
  }
};

AdaptedData adapted_data(const NonholonomicSystem& sys, std::span<const double> q);

}  // namespace nhk
