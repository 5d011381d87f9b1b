#include <gtest/gtest.h>

#include <cmath>

#include "nhk/curvature.hpp"
#include "support.hpp"

namespace nhk {
namespace {

using test::sample_points;

std::vector<double> random_vector(Lcg& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

std::vector<NonholonomicSystem> nonholonomic_systems() {
  std::vector<NonholonomicSystem> out;
  for (const auto& name : builtin_names()) out.push_back(builtin(name));
  out.push_back(load_system_file(test::data_file("adapted_m3.json")));
  return out;
}

TEST(Curvature, CoefficientsAreAntisymmetricAndSemiBasic) {
  for (const auto& sys : nonholonomic_systems()) {
    SCOPED_TRACE(sys.name());
    const std::size_t N = sys.dim_M(), n = sys.n();
    for (const PointM& p : sample_points(sys, 10)) {
      const CurvatureAtPoint K = curvature_at(PhaseSpaceModel(sys, p, 1));
      ASSERT_EQ(K.coeffs.size(), sys.k());
      for (const auto& c : K.coeffs)
        for (std::size_t i = 0; i < N; ++i)
          for (std::size_t j = 0; j < N; ++j) {
            EXPECT_NEAR(c(i, j), -c(j, i), 1e-12);
            if (i >= n || j >= n) EXPECT_NEAR(c(i, j), 0.0, 1e-10) << i << "," << j;
          }
    }
  }
}

TEST(Curvature, VanishesForIntegrableConstraints) {
  for (const std::string file : {"holonomic_dz.json", "holonomic_exact.json", "holonomic_board.json"}) {
    SCOPED_TRACE(file);
    const NonholonomicSystem sys = load_system_file(test::data_file(file));
    Lcg rng(21);
    for (const PointM& p : sample_points(sys, 20)) {
      const CurvatureAtPoint K = curvature_at(PhaseSpaceModel(sys, p, 1));
      for (const auto& c : K.coeffs) EXPECT_LT(max_abs(c), 1e-10);
      const auto v = random_vector(rng, sys.n()), w = random_vector(rng, sys.n());
      EXPECT_LT(test::max_abs(curvature_KW_Q(sys, p.q, v, w)), 1e-10);
    }
  }
}

TEST(Curvature, SnakeboardCoefficient) {
  const NonholonomicSystem sys = builtin("snakeboard");
  for (const PointM& p : sample_points(sys, 30)) {
    const PhaseSpaceModel model(sys, p, 1);
    const CurvatureAtPoint K = curvature_at(model);
    const Matrix<double> C = values(model.basis_C());
    const auto XS = test::column(C, 2), Xphi = test::column(C, 1), Xpsi = test::column(C, 0);
    const double kw = snakeboard_expected("KW_coeff", p);
    const auto c = K.components(XS, Xphi);
    EXPECT_NEAR(c[0], kw, 1e-11);
    EXPECT_NEAR(c[1], -kw, 1e-11);
    for (double v : K.components(Xpsi, Xphi)) EXPECT_NEAR(v, 0.0, 1e-11);
    for (double v : K.components(Xpsi, XS)) EXPECT_NEAR(v, 0.0, 1e-11);
    // K_𝒲(X̃_S, X̃_φ) = −2r cosφ (X̃_1 − X̃_2)
    const auto full = K.apply(XS, Xphi);
    const Matrix<double> W = values(model.basis_W());
    for (std::size_t i = 0; i < full.size(); ++i) EXPECT_NEAR(full[i], kw * (W(i, 0) - W(i, 1)), 1e-11);
  }
}

TEST(Curvature, BaseCurvatureExamples) {
  {
    const NonholonomicSystem sys = builtin("nh_particle");
    const auto k = curvature_KW_Q(sys, std::vector<double>{0.3, -0.5, 2.0}, test::unit(3, 0), test::unit(3, 1));
    EXPECT_NEAR(k[0], 0.0, 1e-14);
    EXPECT_NEAR(k[1], 0.0, 1e-14);
    EXPECT_NEAR(k[2], 1.0, 1e-14);
  }
  {
    const NonholonomicSystem sys = builtin("rolling_disk");
    const double th = 0.6;
    const auto k = curvature_KW_Q(sys, std::vector<double>{0.1, 0.2, 0.3, th}, test::unit(4, 2), test::unit(4, 3));
    EXPECT_NEAR(k[0], -std::sin(th), 1e-14);
    EXPECT_NEAR(k[1], std::cos(th), 1e-14);
    EXPECT_NEAR(k[2], 0.0, 1e-14);
    EXPECT_NEAR(k[3], 0.0, 1e-14);
  }
  {
    // W directions are projected out before differentiating.
    const NonholonomicSystem sys = builtin("nh_particle");
    const auto k = curvature_KW_Q(sys, std::vector<double>{0.3, -0.5, 2.0}, test::unit(3, 2), test::unit(3, 1));
    EXPECT_LT(test::max_abs(k), 1e-14);
  }
}

TEST(Curvature, ProjectsToBaseCurvature) {
  for (const auto& sys : nonholonomic_systems()) {
    SCOPED_TRACE(sys.name());
    Lcg rng(5);
    for (const PointM& p : sample_points(sys, 10)) {
      const PhaseSpaceModel model(sys, p, 1);
      const CurvatureAtPoint K = curvature_at(model);
      const auto x = random_vector(rng, sys.dim_M()), y = random_vector(rng, sys.dim_M());
      const auto up = base_projection(sys, K.apply(x, y));
      const auto down = curvature_KW_Q(sys, p.q, base_projection(sys, x), base_projection(sys, y));
      for (std::size_t i = 0; i < sys.n(); ++i) EXPECT_NEAR(up[i], down[i], 1e-10);
      const auto via_free = curvature_KW_M(sys, p, x, y);
      const auto direct = K.apply(x, y);
      for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_NEAR(via_free[i], direct[i], 1e-12);
    }
  }
}

TEST(Curvature, ComponentsOnCIndependentOfLift) {
  for (const auto& sys : nonholonomic_systems()) {
    SCOPED_TRACE(sys.name());
    LiftShift shift(sys.k(), 2 * sys.m());
    for (std::size_t a = 0; a < sys.k(); ++a)
      for (std::size_t j = 0; j < 2 * sys.m(); ++j) shift(a, j) = 0.25 * (j + 1) - 0.4 * a;
    for (const PointM& p : sample_points(sys, 5)) {
      const PhaseSpaceModel m0(sys, p, 1), m1(sys, p, 1, shift);
      const CurvatureAtPoint k0 = curvature_at(m0), k1 = curvature_at(m1);
      const Matrix<double> C = values(m0.basis_C());
      for (std::size_t i = 0; i < C.cols(); ++i)
        for (std::size_t j = 0; j < C.cols(); ++j) {
          const auto a = k0.components(test::column(C, i), test::column(C, j));
          const auto b = k1.components(test::column(C, i), test::column(C, j));
          for (std::size_t c = 0; c < a.size(); ++c) EXPECT_NEAR(a[c], b[c], 1e-10);
        }
    }
  }
}

TEST(Curvature, NeedsFirstOrderModel) {
  const NonholonomicSystem sys = builtin("nh_particle");
  EXPECT_THROW(curvature_at(PhaseSpaceModel(sys, default_point(sys), 0)), ContractViolation);
}

TEST(AdaptedData, NonholonomicParticle) {
  const NonholonomicSystem sys = builtin("nh_particle");
  for (const PointM& p : sample_points(sys, 10)) {
    const double y = p.q[1];
    const AdaptedData ad = adapted_data(sys, p.q);
    ASSERT_EQ(ad.k, 1u);
    ASSERT_EQ(ad.m, 2u);
    EXPECT_NEAR(ad.A(0, 0).value(), -y, 1e-15);
    EXPECT_NEAR(ad.A(0, 1).value(), 0.0, 1e-15);
    EXPECT_NEAR(ad.K(0, 0, 1), 1.0, 1e-14);
    EXPECT_NEAR(ad.K(0, 1, 0), -1.0, 1e-14);
    EXPECT_NEAR(ad.K(0, 0, 0), 0.0, 1e-14);
    EXPECT_NEAR(ad.c(0, 1, 0), -1.0, 1e-14);
    EXPECT_NEAR(ad.c(0, 0, 1), 0.0, 1e-14);
    EXPECT_NEAR(ad.J(0, 0).value(), y / (1 + y * y), 1e-14);
    EXPECT_NEAR(ad.J(0, 1).value(), 0.0, 1e-14);
  }
}

TEST(AdaptedData, RollingDisk) {
  const NonholonomicSystem sys = builtin("rolling_disk");
  for (const PointM& p : sample_points(sys, 10)) {
    const double th = p.q[3];
    const AdaptedData ad = adapted_data(sys, p.q);
    EXPECT_NEAR(ad.A(0, 0).value(), -std::cos(th), 1e-15);
    EXPECT_NEAR(ad.A(1, 0).value(), -std::sin(th), 1e-15);
    EXPECT_NEAR(ad.A(0, 1).value(), 0.0, 1e-15);
    EXPECT_NEAR(ad.K(0, 0, 1), -std::sin(th), 1e-14);
    EXPECT_NEAR(ad.K(1, 0, 1), std::cos(th), 1e-14);
    EXPECT_NEAR(ad.K(0, 1, 0), std::sin(th), 1e-14);
    EXPECT_NEAR(ad.K(1, 1, 1), 0.0, 1e-14);
  }
}

TEST(AdaptedData, AgreesWithBaseCurvature) {
  // K^a_{αβ} Z_a = K_W(X_α, X_β) for the adapted frame.
  for (const auto& sys : nonholonomic_systems()) {
    if (!sys.is_adapted()) continue;
    SCOPED_TRACE(sys.name());
    for (const PointM& p : sample_points(sys, 5)) {
      const AdaptedData ad = adapted_data(sys, p.q);
      const Matrix<double> X = values(frame_at(sys, p.q, 0).X);
      for (std::size_t al = 0; al < sys.m(); ++al)
        for (std::size_t be = 0; be < sys.m(); ++be) {
          const auto kq = curvature_KW_Q(sys, p.q, test::column(X, al), test::column(X, be));
          for (std::size_t a = 0; a < sys.k(); ++a)
            EXPECT_NEAR(kq[sys.s_indices()[a]], ad.K(a, al, be), 1e-11);
        }
    }
  }
}

TEST(AdaptedData, RequiresAdaptedSystem) {
  EXPECT_THROW(adapted_data(builtin("snakeboard"), std::vector<double>{0, 0, 0, 0, 0.1}), UnsupportedOperation);
}

}  // namespace
}  // namespace nhk
