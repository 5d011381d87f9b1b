#include "nhk/bracket.hpp"

#include <cmath>
#include <string>

namespace nhk {

std::vector<double> BivectorAtPoint::apply(std::span<const double> covector) const {
  if (covector.size() != dim()) throw ContractViolation("bivector: covector has the wrong length");
  std::vector<double> out(dim(), 0.0);
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t j = 0; j < dim(); ++j) out[i] += sharp(i, j).value() * covector[j];
  return out;
}

double BivectorAtPoint::pair(std::span<const double> alpha, std::span<const double> beta) const {
  // π(α, β) = β(π♯α)
  const std::vector<double> v = apply(alpha);
  double s = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) s += beta[i] * v[i];
  return s;
}

BivectorAtPoint nh_bivector(const PhaseSpaceModel& model) {
  const Matrix<Jet1>& bc = model.basis_C();
  const Matrix<Jet1> bct = bc.transpose();
  const Matrix<Jet1> omega_c = bct * model.omega() * bc;
  // With X = B_C·c and i_X Ω = −Ω·X in components, i_X Ω|_C = −α|_C
  // reads Ω_C·c = B_Cᵀ·α.
  Matrix<Jet1> inv;
  try {
    inv = inverse(omega_c, 1e-12);
  } catch (const InternalInvariant&) {
    throw InternalInvariant("2-form restricted to C is singular at this point");
  }
  const Matrix<Jet1> s = bc * inv * bct;
  BivectorAtPoint out;
  out.sharp = Matrix<Jet1>(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = i + 1; j < s.cols(); ++j) {
      Jet1 a = s(i, j) - s(j, i);
      a *= 0.5;
      out.sharp(i, j) = a;
      out.sharp(j, i) = -a;
    }
  }
  return out;
}

BivectorAtPoint nh_bivector(const NonholonomicSystem& sys, const PointM& p, int order) {
  return nh_bivector(PhaseSpaceModel(sys, p, order));
}

HamiltonianAtPoint hamiltonian_M(const NonholonomicSystem& sys, const PointM& p) {
  const PhaseSpaceModel model(sys, p, 0);
  return {model.hamiltonian(), model.hamiltonian_differential()};
}

std::vector<double> nh_vector_field(const PhaseSpaceModel& model, const BivectorAtPoint& pi) {
  const std::vector<double>& dh = model.hamiltonian_differential();
  std::vector<double> x = pi.apply(dh);
  for (double& v : x) v = -v;

  // i_X Ω restricted to C against dH restricted to C.
  const std::size_t n = model.dim();
  const Matrix<double> om = values(model.omega());
  const Matrix<double> bc = values(model.basis_C());
  double scale = 1.0, dev = 0.0;
  for (std::size_t c = 0; c < bc.cols(); ++c) {
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      rhs += dh[i] * bc(i, c);
      for (std::size_t j = 0; j < n; ++j) lhs += x[i] * om(i, j) * bc(j, c);
    }
    scale = std::max(scale, std::abs(rhs));
    dev = std::max(dev, std::abs(lhs - rhs));
  }
  if (dev > 1e-9 * scale) {
    throw InternalInvariant("dynamics equation violated by " + std::to_string(dev));
  }
  return x;
}

std::vector<double> nh_vector_field(const NonholonomicSystem& sys, const PointM& p) {
  const PhaseSpaceModel model(sys, p, 0);
  return nh_vector_field(model, nh_bivector(model));
}

double bracket(const BivectorAtPoint& pi, std::span<const double> df, std::span<const double> dg) {
  return pi.pair(df, dg);
}

}  // namespace nhk
