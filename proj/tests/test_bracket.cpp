#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Dense>

#include "nhk/bracket.hpp"
#include "support.hpp"

namespace nhk {
namespace {

using test::sample_points;
using test::unit;

std::vector<NonholonomicSystem> systems_under_test() {
  std::vector<NonholonomicSystem> out;
  for (const auto& name : builtin_names()) out.push_back(builtin(name));
  out.push_back(load_system_file(test::data_file("adapted_m3.json")));
  auto doc = builtin_definition("nh_particle");
  doc["name"] = "nh_particle_potential";
  doc["potential"] = "z^2/2 + x*y + cos(y)";
  out.push_back(load_system(doc));
  return out;
}

// ---------------------------------------------------------------------------
// snakeboard

TEST(Bivector, SnakeboardSharpOnCoordinateCovectors) {
  const NonholonomicSystem sys = builtin("snakeboard");
  for (const PointM& p : sample_points(sys, 25)) {
    const BivectorAtPoint pi = nh_bivector(sys, p);
    const double f = snakeboard_expected("pi_coeff", p);
    const auto dpsi = pi.apply(unit(8, 3));
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(dpsi[i], i == 5 ? 1.0 : 0.0, 1e-12);
    const auto dpphi = pi.apply(unit(8, 6));
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(dpphi[i], i == 4 ? -1.0 : i == 7 ? f : 0.0, 1e-11);
    // π♯(dp̃_S) = −X̃_S − f ∂p̃_φ
    const auto dpS = pi.apply(unit(8, 7));
    const double th = p.q[2], phi = p.q[4], c = std::cos(phi);
    const double xs[5] = {-2 * c * c * std::cos(th), -2 * c * c * std::sin(th), std::sin(2 * phi), 0, 0};
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(dpS[i], -xs[i], 1e-12);
    EXPECT_NEAR(dpS[5], 0.0, 1e-12);
    EXPECT_NEAR(dpS[6], -f, 1e-11);
    EXPECT_NEAR(dpS[7], 0.0, 1e-12);
  }
}

TEST(Bivector, SnakeboardConstraintFormsAreCasimirDirections) {
  const NonholonomicSystem sys = builtin("snakeboard");
  for (const PointM& p : sample_points(sys, 25)) {
    const BivectorAtPoint pi = nh_bivector(sys, p);
    const auto eps = sys.constraints<double>(p.q);
    for (std::size_t a = 0; a < 2; ++a) {
      const auto alpha = pullback(sys, test::row(eps, a));
      EXPECT_LT(test::max_abs(pi.apply(alpha)), 1e-12);
    }
  }
}

TEST(Bivector, SnakeboardFrozenEntry) {
  const PointM p{{0.1, 0.2, 0.3, 0.5, 0.4}, {1.0, -0.3, 0.5}};
  const BivectorAtPoint pi = nh_bivector(builtin("snakeboard"), p);
  EXPECT_NEAR(pi.entry(6, 7), -1.52748864644124673654, 1e-13);
  EXPECT_NEAR(pi.entry(6, 7), snakeboard_expected("pi_coeff", p), 1e-13);
}

// ---------------------------------------------------------------------------
// frozen values from an independent symbolic computation

struct Entry {
  std::size_t a, b;
  double value;
};

void expect_entries(const NonholonomicSystem& sys, const PointM& p, const std::vector<Entry>& entries) {
  const BivectorAtPoint pi = nh_bivector(sys, p);
  const std::size_t N = sys.dim_M();
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) {
      double expect = 0.0;
      for (const Entry& e : entries) {
        if (e.a == a && e.b == b) expect = e.value;
        if (e.a == b && e.b == a) expect = -e.value;
      }
      EXPECT_NEAR(pi.entry(a, b), expect, 1e-13) << a << "," << b;
    }
}

TEST(Bivector, NonholonomicParticleFrozen) {
  expect_entries(builtin("nh_particle"), PointM{{0.3, -0.7, 1.1}, {0.8, -0.4}},
                 {{0, 3, 1.0}, {1, 4, 1.0}, {2, 3, -0.7}, {3, 4, -0.37583892617449665700}});
}

TEST(Bivector, RollingDiskFrozen) {
  expect_entries(builtin("rolling_disk"), PointM{{0.2, -0.1, 0.7, 0.4}, {1.2, -0.6}},
                 {{0, 4, 0.92106099400288507415}, {1, 4, 0.38941834230865051212}, {2, 4, 1.0}, {3, 5, 1.0}});
}

TEST(Bivector, AdaptedThreeFrozen) {
  expect_entries(load_system_file(test::data_file("adapted_m3.json")),
                 PointM{{0.4, -0.3, 0.6, 0.5}, {0.7, -1.1, 0.9}},
                 {{0, 4, 1.0},
                  {1, 5, 1.0},
                  {2, 6, 1.0},
                  {3, 4, -0.15},
                  {3, 5, -0.4},
                  {3, 6, -0.15},
                  {4, 5, 0.54663523088049524079},
                  {5, 6, -0.040491498583740388900}});
}

// In adapted coordinates π = Σ (∂r^α − A^a_α ∂s^a)∧∂p̃_α + ½ p̃_a K^a_αβ ∂p̃_α∧∂p̃_β.
TEST(Bivector, AdaptedCoordinateTable) {
  for (const std::string name : {"nh_particle", "rolling_disk"}) {
    SCOPED_TRACE(name);
    const NonholonomicSystem sys = builtin(name);
    const std::size_t m = sys.m(), k = sys.k(), n = sys.n();
    const auto& r = sys.r_indices();
    const auto& s = sys.s_indices();
    for (const PointM& p : sample_points(sys, 20)) {
      const BivectorAtPoint pi = nh_bivector(sys, p);
      const AdaptedData ad = adapted_data(sys, p.q);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(pi.entry(i, j), 0.0, 1e-13);
      for (std::size_t al = 0; al < m; ++al)
        for (std::size_t be = 0; be < m; ++be) {
          EXPECT_NEAR(pi.entry(r[al], n + be), al == be ? 1.0 : 0.0, 1e-13);
          double pk = 0.0;
          for (std::size_t a = 0; a < k; ++a) {
            if (al == 0) EXPECT_NEAR(pi.entry(s[a], n + be), -ad.A(a, be).value(), 1e-13);
            double pa = 0.0;
            for (std::size_t g = 0; g < m; ++g) pa += ad.J(a, g).value() * p.ptilde[g];
            pk += pa * ad.K(a, al, be);
          }
          EXPECT_NEAR(pi.entry(n + al, n + be), pk, 1e-12);
        }
    }
  }
}

// ---------------------------------------------------------------------------
// structure

TEST(Bivector, AntisymmetricWithImageInC) {
  for (const auto& sys : systems_under_test()) {
    SCOPED_TRACE(sys.name());
    const std::size_t N = sys.dim_M();
    for (const PointM& p : sample_points(sys, 15)) {
      const PhaseSpaceModel model(sys, p, 0);
      const BivectorAtPoint pi = nh_bivector(model);
      const TwoFormAtPoint om = omega_M(model);
      const auto eps = sys.constraints<double>(p.q);
      const Matrix<double> C = values(model.basis_C());
      for (std::size_t a = 0; a < N; ++a) {
        for (std::size_t b = 0; b < N; ++b) EXPECT_EQ(pi.entry(a, b), -pi.entry(b, a));
        const auto alpha = unit(N, a);
        const auto v = pi.apply(alpha);
        for (std::size_t c = 0; c < sys.k(); ++c) {
          double e = 0.0;
          for (std::size_t i = 0; i < sys.n(); ++i) e += eps(c, i) * v[i];
          EXPECT_NEAR(e, 0.0, 1e-11);
        }
        // i_{π♯α} Ω|_C = −α|_C
        for (std::size_t j = 0; j < C.cols(); ++j) {
          const auto cj = test::column(C, j);
          EXPECT_NEAR(om(v, cj), -test::dot(alpha, cj), 1e-10);
        }
      }
    }
  }
}

TEST(Bivector, CharacteristicDistributionHasRankTwoM) {
  for (const auto& sys : systems_under_test()) {
    SCOPED_TRACE(sys.name());
    for (const PointM& p : sample_points(sys, 15)) {
      const BivectorAtPoint pi = nh_bivector(sys, p);
      Eigen::MatrixXd S(pi.dim(), pi.dim());
      for (std::size_t a = 0; a < pi.dim(); ++a)
        for (std::size_t b = 0; b < pi.dim(); ++b) S(a, b) = pi.entry(a, b);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
      lu.setThreshold(1e-9);
      EXPECT_EQ(static_cast<std::size_t>(lu.rank()), 2 * sys.m());
    }
  }
}

TEST(Bivector, IndependentOfTheComplementLift) {
  for (const auto& sys : systems_under_test()) {
    SCOPED_TRACE(sys.name());
    LiftShift shift(sys.k(), 2 * sys.m());
    for (std::size_t a = 0; a < sys.k(); ++a)
      for (std::size_t j = 0; j < 2 * sys.m(); ++j) shift(a, j) = 0.3 * (a + 1) - 0.2 * j;
    for (const PointM& p : sample_points(sys, 5)) {
      const BivectorAtPoint a = nh_bivector(PhaseSpaceModel(sys, p, 1));
      const BivectorAtPoint b = nh_bivector(PhaseSpaceModel(sys, p, 1, shift));
      for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) {
          EXPECT_NEAR(a.entry(i, j), b.entry(i, j), 1e-11);
          for (std::size_t l = 0; l < a.dim(); ++l)
            EXPECT_NEAR(a.entry_jet(i, j).grad(l), b.entry_jet(i, j).grad(l), 1e-9);
        }
    }
  }
}

TEST(Bivector, JetsMatchFiniteDifferences) {
  for (const auto& sys : systems_under_test()) {
    SCOPED_TRACE(sys.name());
    const PointM p = sample_points(sys, 1, 3)[0];
    const BivectorAtPoint pi = nh_bivector(sys, p, 1);
    const std::size_t N = sys.dim_M(), n = sys.n();
    const double h = 1e-6;
    for (std::size_t l = 0; l < N; ++l) {
      PointM pp = p, pm = p;
      (l < n ? pp.q[l] : pp.ptilde[l - n]) += h;
      (l < n ? pm.q[l] : pm.ptilde[l - n]) -= h;
      const BivectorAtPoint a = nh_bivector(sys, pp), b = nh_bivector(sys, pm);
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
          EXPECT_NEAR(pi.entry_jet(i, j).grad(l), (a.entry(i, j) - b.entry(i, j)) / (2 * h), 1e-6);
    }
  }
}

TEST(Bracket, BilinearAntisymmetricLeibniz) {
  const NonholonomicSystem sys = builtin("snakeboard");
  const PointM p = sample_points(sys, 1, 11)[0];
  const BivectorAtPoint pi = nh_bivector(sys, p);
  Lcg rng(3);
  auto random_covector = [&] {
    std::vector<double> v(8);
    for (double& x : v) x = rng.uniform(-1, 1);
    return v;
  };
  for (int t = 0; t < 20; ++t) {
    const auto df = random_covector(), dg = random_covector(), dh = random_covector();
    EXPECT_NEAR(bracket(pi, df, dg), -bracket(pi, dg, df), 1e-13);
    // d(gh) = h dg + g dh at a point where g = 0.7, h = −1.3
    const double g = 0.7, h = -1.3;
    std::vector<double> dgh(8);
    for (std::size_t i = 0; i < 8; ++i) dgh[i] = h * dg[i] + g * dh[i];
    EXPECT_NEAR(bracket(pi, df, dgh), bracket(pi, df, dg) * h + g * bracket(pi, df, dh), 1e-12);
    EXPECT_NEAR(bracket(pi, df, dg), pi.pair(df, dg), 0.0);
  }
}

// ---------------------------------------------------------------------------
// Hamiltonian and dynamics

TEST(Hamiltonian, NonholonomicParticleClosedForm) {
  const NonholonomicSystem sys = builtin("nh_particle");
  for (const PointM& p : sample_points(sys, 20)) {
    const double y = p.q[1], a = p.ptilde[0], b = p.ptilde[1];
    const HamiltonianAtPoint H = hamiltonian_M(sys, p);
    EXPECT_NEAR(H.value, 0.5 * (a * a / (1 + y * y) + b * b), 1e-13);
    EXPECT_NEAR(H.differential[1], -a * a * y / ((1 + y * y) * (1 + y * y)), 1e-13);
    EXPECT_NEAR(H.differential[3], a / (1 + y * y), 1e-13);
    EXPECT_NEAR(H.differential[4], b, 1e-13);
    EXPECT_EQ(H.differential[0], 0.0);
    EXPECT_EQ(H.differential[2], 0.0);
  }
}

// Independent oracle: Lagrange-multiplier equations in (q, p) on T*Q,
// q̇ = κ⁻¹p, ṗ = −∂H/∂q + λ_a ε^a with λ keeping ε(q̇) = 0, mapped to the
// chart by p̃_α = p(X_α).
std::vector<double> multiplier_oracle(const NonholonomicSystem& sys, const PointM& p) {
  const std::size_t n = sys.n(), k = sys.k(), m = sys.m();
  std::vector<Jet2> qj;
  for (std::size_t i = 0; i < n; ++i) qj.push_back(jet_lift(p.q, i));
  const Matrix<Jet2> kap = sys.metric<Jet2>(qj);
  const Matrix<Jet2> eps = sys.constraints<Jet2>(qj);
  const Jet2 V = sys.potential<Jet2>(qj);
  const FrameAtPoint f = frame_at(sys, p.q, 1);
  const std::vector<double> mom = embed(sys, p);

  Eigen::MatrixXd K(n, n), E(k, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) K(i, j) = kap(i, j).value();
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t i = 0; i < n; ++i) E(a, i) = eps(a, i).value();
  Eigen::VectorXd P(n);
  for (std::size_t i = 0; i < n; ++i) P(i) = mom[i];
  const Eigen::MatrixXd Ki = K.inverse();
  const Eigen::VectorXd v = Ki * P;

  // ∂L/∂q_l = ½ vᵀ ∂_lκ v − ∂_lV, κ̇ = Σ_l ∂_lκ v_l, ε̇ likewise.
  Eigen::VectorXd F(n);
  Eigen::MatrixXd Kdot = Eigen::MatrixXd::Zero(n, n), Edot = Eigen::MatrixXd::Zero(k, n);
  for (std::size_t l = 0; l < n; ++l) {
    Eigen::MatrixXd dK(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) dK(i, j) = kap(i, j).grad(l);
    F(l) = 0.5 * v.dot(dK * v) - V.grad(l);
    Kdot += dK * v(l);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t i = 0; i < n; ++i) Edot(a, i) += eps(a, i).grad(l) * v(l);
  }
  // v̇ = κ⁻¹(F + Eᵀλ − κ̇v), E v̇ + Ė v = 0.
  const Eigen::MatrixXd lhs = E * Ki * E.transpose();
  const Eigen::VectorXd rhs = -Edot * v - E * Ki * (F - Kdot * v);
  const Eigen::VectorXd lambda = lhs.fullPivLu().solve(rhs);
  const Eigen::VectorXd pdot = F + E.transpose() * lambda;

  std::vector<double> out(n + m);
  for (std::size_t i = 0; i < n; ++i) out[i] = v(i);
  for (std::size_t al = 0; al < m; ++al) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += pdot(i) * f.X(i, al).value();
      for (std::size_t l = 0; l < n; ++l) s += P(i) * f.X(i, al).grad(l) * v(l);
    }
    out[n + al] = s;
  }
  return out;
}

TEST(VectorField, AgreesWithMultiplierEquations) {
  auto systems = systems_under_test();
  auto doc = builtin_definition("snakeboard");
  doc["name"] = "snakeboard_potential";
  doc["potential"] = "0.3*x^2 + sin(theta)*y + phi^2";
  systems.push_back(load_system(doc));
  for (const auto& sys : systems) {
    SCOPED_TRACE(sys.name());
    for (const PointM& p : sample_points(sys, 20)) {
      const auto X = nh_vector_field(sys, p);
      const auto ref = multiplier_oracle(sys, p);
      for (std::size_t i = 0; i < X.size(); ++i)
        EXPECT_NEAR(X[i], ref[i], 1e-9 * std::max(1.0, std::abs(ref[i]))) << i;
    }
  }
}

TEST(VectorField, ConservesEnergyAndRespectsConstraints) {
  for (const auto& sys : systems_under_test()) {
    SCOPED_TRACE(sys.name());
    for (const PointM& p : sample_points(sys, 30)) {
      const PhaseSpaceModel model(sys, p, 0);
      const auto X = nh_vector_field(model, nh_bivector(model));
      EXPECT_NEAR(test::dot(model.hamiltonian_differential(), X), 0.0, 1e-11);
      const auto eps = model.frame().eps;
      for (std::size_t a = 0; a < sys.k(); ++a) {
        double e = 0.0;
        for (std::size_t i = 0; i < sys.n(); ++i) e += eps(a, i) * X[i];
        EXPECT_NEAR(e, 0.0, 1e-11);
      }
    }
  }
}

TEST(VectorField, SnakeboardWithoutPotentialHasClosedFormMomentumRates) {
  const NonholonomicSystem sys = builtin("snakeboard");
  for (const PointM& p : sample_points(sys, 20)) {
    const auto X = nh_vector_field(sys, p);
    const HamiltonianAtPoint H = hamiltonian_M(sys, p);
    const double f = snakeboard_expected("pi_coeff", p);
    // X_H = −π♯ dH: ṗ̃_ψ = −∂ψH, ṗ̃_φ = −∂φH + f ∂p̃_S H, ṗ̃_S = −X_S(H) − f ∂p̃_φ H
    EXPECT_NEAR(X[5], -H.differential[3], 1e-11);
    EXPECT_NEAR(X[6], -H.differential[4] + f * H.differential[7], 1e-10);
    EXPECT_NEAR(X[3], H.differential[5], 1e-11);
    EXPECT_NEAR(X[4], H.differential[6], 1e-11);
  }
}

}  // namespace
}  // namespace nhk
