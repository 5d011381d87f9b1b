#include "nhk/curvature.hpp"

#include <cmath>

namespace nhk {

std::vector<double> CurvatureAtPoint::components(std::span<const double> x,
                                                 std::span<const double> y) const {
  std::vector<double> out(coeffs.size(), 0.0);
  for (std::size_t a = 0; a < coeffs.size(); ++a) {
    const Matrix<double>& c = coeffs[a];
    if (x.size() != c.rows() || y.size() != c.cols()) throw ContractViolation("curvature: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) continue;
      for (std::size_t j = 0; j < y.size(); ++j) s += x[i] * c(i, j) * y[j];
    }
    out[a] = s;
  }
  return out;
}

std::vector<double> CurvatureAtPoint::apply(std::span<const double> x, std::span<const double> y) const {
  const std::vector<double> c = components(x, y);
  std::vector<double> out(W_basis.rows(), 0.0);
  for (std::size_t a = 0; a < c.size(); ++a)
    for (std::size_t r = 0; r < out.size(); ++r) out[r] += c[a] * W_basis(r, a);
  return out;
}

CurvatureAtPoint curvature_at(const PhaseSpaceModel& model) {
  if (model.order() < 1) throw ContractViolation("curvature_at needs a model of order 1");
  const std::size_t N = model.dim();
  const Matrix<Jet1>& bc = model.basis_C();
  const std::size_t m2 = bc.cols(), k = model.basis_W().cols();
  const Matrix<double>& binv = model.basis_inverse();

  // Lie brackets of the C-basis fields, decomposed along Z̃_a.
  std::vector<Matrix<double>> w(k, Matrix<double>(m2, m2));
  std::vector<double> br(N);
  for (std::size_t i = 0; i < m2; ++i) {
    for (std::size_t j = i + 1; j < m2; ++j) {
      for (std::size_t r = 0; r < N; ++r) {
        const Jet1& ui = bc(r, i);
        const Jet1& vj = bc(r, j);
        double s = 0.0;
        for (std::size_t l = 0; l < N; ++l) {
          if (!vj.is_constant()) s += bc(l, i).value() * vj.grad(l);
          if (!ui.is_constant()) s -= bc(l, j).value() * ui.grad(l);
        }
        br[r] = s;
      }
      for (std::size_t a = 0; a < k; ++a) {
        double s = 0.0;
        for (std::size_t r = 0; r < N; ++r) s += binv(m2 + a, r) * br[r];
        w[a](i, j) = s;
        w[a](j, i) = -s;
      }
    }
  }

  CurvatureAtPoint out;
  out.W_basis = values(model.basis_W());
  out.coeffs.assign(k, Matrix<double>(N, N));
  const Matrix<double> bcinv = binv.block(0, 0, m2, N);
  for (std::size_t a = 0; a < k; ++a) {
    // coeffs = −Binv_Cᵀ·w·Binv_C, then antisymmetrised exactly.
    const Matrix<double> full = bcinv.transpose() * w[a] * bcinv;
    Matrix<double>& c = out.coeffs[a];
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t l = j + 1; l < N; ++l) {
        const double v = -0.5 * (full(j, l) - full(l, j));
        c(j, l) = v;
        c(l, j) = -v;
      }
    }
  }
  return out;
}

std::vector<double> curvature_KW_M(const NonholonomicSystem& sys, const PointM& p,
                                   std::span<const double> x, std::span<const double> y,
                                   const std::optional<LiftShift>& lift) {
  const PhaseSpaceModel model(sys, p, 1, lift);
  return curvature_at(model).apply(x, y);
}

std::vector<double> curvature_KW_Q(const NonholonomicSystem& sys, std::span<const double> q,
                                   std::span<const double> v, std::span<const double> w) {
  const std::size_t n = sys.n(), k = sys.k(), m = sys.m();
  if (v.size() != n || w.size() != n) throw ContractViolation("curvature_KW_Q: expected vectors on Q");
  detail::check_in_domain(sys, q);
  std::vector<Jet1> qj(n);
  for (std::size_t i = 0; i < n; ++i) qj[i] = Jet1::variable(q[i], i, n);
  const auto f = detail::build_frame<Jet1>(sys, std::span<const Jet1>(qj));

  // P_D = X·χ
  std::vector<double> pv(n, 0.0), pw(n, 0.0);
  for (std::size_t al = 0; al < m; ++al) {
    double cv = 0.0, cw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cv += f.chi(al, i).value() * v[i];
      cw += f.chi(al, i).value() * w[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      pv[i] += f.X(i, al).value() * cv;
      pw[i] += f.X(i, al).value() * cw;
    }
  }

  std::vector<double> out(n, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    // dε(u, v) = Σ u^i v^j (∂_i ε_j − ∂_j ε_i)
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const Jet1& eij = f.eps(a, j);
        const Jet1& eji = f.eps(a, i);
        const double d = (eij.is_constant() ? 0.0 : eij.grad(i)) - (eji.is_constant() ? 0.0 : eji.grad(j));
        s += pv[i] * pw[j] * d;
      }
    }
    for (std::size_t r = 0; r < n; ++r) out[r] += s * f.Z(r, a).value();
  }
  return out;
}

AdaptedData adapted_data(const NonholonomicSystem& sys, std::span<const double> q) {
  if (!sys.is_adapted()) {
    throw UnsupportedOperation("system '" + sys.name() + "' does not declare adapted coordinates");
  }
  const std::size_t n = sys.n(), k = sys.k(), m = sys.m();
  detail::check_in_domain(sys, q);
  std::vector<Jet2> qj(n);
  for (std::size_t i = 0; i < n; ++i) qj[i] = Jet2::variable(q[i], i, n);
  const auto f = detail::build_frame<Jet2>(sys, std::span<const Jet2>(qj));
  const auto& r_idx = sys.r_indices();
  const auto& s_idx = sys.s_indices();

  AdaptedData d;
  d.k = k;
  d.m = m;
  d.A = Matrix<Jet2>(k, m);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t al = 0; al < m; ++al) d.A(a, al) = f.eps(a, r_idx[al]);

  // J for the coordinate complement ∂/∂s, whatever complement the system uses.
  const Matrix<Jet2> kx = f.kappa * f.X;
  const Matrix<Jet2> kd = f.X.transpose() * kx;
  Matrix<Jet2> zkx(k, m);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t al = 0; al < m; ++al) zkx(a, al) = kx(s_idx[a], al);
  d.J = solve(kd, zkx.transpose()).transpose();

  auto grad = [](const Jet2& x, std::size_t i) { return x.is_constant() ? 0.0 : x.grad(i); };
  d.C.assign(k * m * m, 0.0);
  d.Kcoef.assign(k * m * m, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t al = 0; al < m; ++al) {
      for (std::size_t be = 0; be < m; ++be) {
        double c = grad(d.A(a, be), r_idx[al]);
        for (std::size_t b = 0; b < k; ++b) c -= d.A(b, al).value() * grad(d.A(a, be), s_idx[b]);
        d.C[(a * m + al) * m + be] = c;
      }
    }
    for (std::size_t al = 0; al < m; ++al) {
      for (std::size_t be = al + 1; be < m; ++be) {
        const double kk = d.C[(a * m + al) * m + be] - d.C[(a * m + be) * m + al];
        d.Kcoef[(a * m + al) * m + be] = kk;
        d.Kcoef[(a * m + be) * m + al] = -kk;
      }
    }
  }
  return d;
}

}  // namespace nhk
