#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

namespace nhk {
namespace {

using test::sample_points;

const std::vector<ParamMap> kParamSets = {{}, {{"m", 1.5}, {"r", 0.8}, {"J0", 0.3}}, {{"m", 3.0}, {"J0", 2.0}, {"Jw", 1.0}}};

TEST(Builtins, NamesAndLookupErrors) {
  EXPECT_EQ(builtin_names(), (std::vector<std::string>{"snakeboard", "nh_particle", "rolling_disk"}));
  EXPECT_THROW(builtin("unicycle"), LookupError);
  EXPECT_THROW(builtin("snakeboard", {{"mass", 1.0}}), LookupError);
  EXPECT_THROW(builtin("nh_particle", {{"m", 1.0}}), LookupError);
}

TEST(Builtins, ParameterValidation) {
  EXPECT_THROW(builtin("snakeboard", {{"m", -1.0}}), DomainError);
  EXPECT_THROW(builtin("snakeboard", {{"Jw", 0.0}}), DomainError);
  EXPECT_THROW(builtin("snakeboard", {{"J0", 1.0}}), DomainError);
  EXPECT_THROW(builtin("snakeboard", {{"J0", 2.0}, {"r", 1.0}, {"m", 1.5}}), DomainError);
  EXPECT_NO_THROW(builtin("snakeboard", {{"J0", 0.99}}));
  EXPECT_THROW(builtin("rolling_disk", {{"R", 0.0}}), DomainError);
  EXPECT_THROW(SnakeboardParams::from({{"m", 0.1}}), DomainError);
}

TEST(Builtins, OverridesAreApplied) {
  const NonholonomicSystem sys = builtin("snakeboard", {{"m", 2.0}, {"r", 0.5}, {"J0", 0.1}});
  EXPECT_EQ(sys.params().at("m"), 2.0);
  EXPECT_EQ(sys.params().at("r"), 0.5);
  EXPECT_EQ(sys.params().at("Jw"), 0.25);
  const auto k = sys.metric<double>(std::vector<double>{0, 0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(k(2, 2), 0.5);
  EXPECT_DOUBLE_EQ(k(2, 3), 0.1);
  EXPECT_DOUBLE_EQ(k(4, 4), 0.5);
}

TEST(Builtins, ShippedDefinitionsHaveTheDocumentedShape) {
  EXPECT_EQ(builtin("nh_particle").s_indices(), (std::vector<std::size_t>{2}));
  EXPECT_EQ(builtin("rolling_disk").s_indices(), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(builtin("rolling_disk").r_indices(), (std::vector<std::size_t>{2, 3}));
  const NonholonomicSystem sb = builtin("snakeboard");
  EXPECT_TRUE(sb.has_d_frame());
  EXPECT_TRUE(sb.has_w_frame());
  EXPECT_EQ(sb.domain()[4].lo, -std::numbers::pi / 2);
  EXPECT_EQ(sb.domain()[4].hi, std::numbers::pi / 2);
}

TEST(SnakeboardExpected, ClosedFormValues) {
  const PointM p{{0, 0, 0, 0, 0.4}, {1.0, 0.0, 0.5}};
  const double c = std::cos(0.4), s = std::sin(0.4);
  const double den = 1.0 - 0.5 * s * s;
  EXPECT_NEAR(snakeboard_expected("J1", p), -0.5 * s / (4 * c * c * den), 1e-15);
  EXPECT_NEAR(snakeboard_expected("J2", p), -c / (2 * den), 1e-15);
  EXPECT_NEAR(snakeboard_expected("J1_alt", p), s / (c * c) / (4 * den), 1e-15);
  EXPECT_NEAR(snakeboard_expected("J2_alt", p), -std::sin(0.8) * s / (c * c) / (4 * den), 1e-15);
  EXPECT_NEAR(snakeboard_expected("jac_eps1", p), -2 * c, 1e-15);
  EXPECT_NEAR(snakeboard_expected("jac_eps2", p), 2 * c, 1e-15);
  EXPECT_NEAR(snakeboard_expected("KW_coeff", p), -2 * c, 1e-15);
  EXPECT_NEAR(snakeboard_expected("jac_ppsi", p), -1.83591162918824258319, 1e-14);
  EXPECT_THROW(snakeboard_expected("J3", p), LookupError);
}

TEST(SnakeboardExpected, DomainGuard) {
  const double edge = std::numbers::pi / 2;
  for (double phi : {edge, -edge, 1.6, -2.0}) {
    const PointM p{{0, 0, 0, 0, phi}, {0, 0, 0}};
    EXPECT_THROW(snakeboard_expected("J1", p), DomainError) << phi;
    EXPECT_THROW(snakeboard_expected("jac_eps1", p), DomainError) << phi;
  }
  EXPECT_THROW(snakeboard_expected("J1", PointM{{0, 0, 0}, {}}), ContractViolation);
}

TEST(SnakeboardExpected, MatchesFrameAndBivectorForParameterSets) {
  for (const ParamMap& params : kParamSets) {
    const NonholonomicSystem sys = builtin("snakeboard", params);
    for (const PointM& p : sample_points(sys, 15)) {
      const FrameAtPoint f = frame_at(sys, p.q, 0);
      EXPECT_NEAR(f.J(0, 2).value(), snakeboard_expected("J1", p, params), 1e-11);
      EXPECT_NEAR(f.J(0, 0).value(), snakeboard_expected("J2", p, params), 1e-11);
      EXPECT_NEAR(f.J(1, 2).value(), -f.J(0, 2).value(), 1e-11);
      EXPECT_NEAR(f.J(1, 0).value(), -f.J(0, 0).value(), 1e-11);
      const double f67 = nh_bivector(sys, p).entry(6, 7);
      EXPECT_NEAR(f67, snakeboard_expected("pi_coeff", p, params), 1e-10 * std::max(1.0, std::abs(f67)));
    }
  }
}

TEST(SnakeboardReduced, BivectorMatchesClosedForm) {
  Lcg rng(4);
  for (const ParamMap& params : kParamSets) {
    for (int t = 0; t < 15; ++t) {
      const ReducedPoint z = {rng.uniform(-2, 2), rng.uniform(-1.3, 1.3), rng.uniform(-2, 2), rng.uniform(-2, 2),
                              rng.uniform(-2, 2)};
      const Matrix<double> a = snakeboard_reduced_bivector(z, params);
      const Matrix<double> b = snakeboard_reduced_bivector_closed_form(z, params);
      const Matrix<double> c = snakeboard_reduced_bivector(z, params, {1.1, -3.0, 2.5});
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
          EXPECT_NEAR(a(i, j), b(i, j), 1e-10 * std::max(1.0, std::abs(b(i, j))));
          EXPECT_NEAR(a(i, j), c(i, j), 1e-12 * std::max(1.0, std::abs(b(i, j))));
        }
    }
  }
}

TEST(SnakeboardReduced, SharpIsRepresentativeIndependent) {
  const ReducedPoint z = {0.5, 0.4, 1.0, -0.3, 0.5};
  const ReducedVector dpphi = {0, 0, 0, 1, 0};
  const ReducedVector v = snakeboard_reduced_sharp(z, dpphi);
  const double f = snakeboard_expected("pi_coeff", snakeboard_lift(z, {0, 0, 0}));
  EXPECT_NEAR(v[1], -1.0, 1e-12);
  EXPECT_NEAR(v[4], f, 1e-12);
  EXPECT_NEAR(v[0], 0.0, 1e-12);
  EXPECT_NEAR(v[2], 0.0, 1e-12);
  EXPECT_NEAR(v[3], 0.0, 1e-12);
}

TEST(SnakeboardReduced, JacobiatorMatchesFullChartAndClosedForms) {
  const NonholonomicSystem sys = builtin("snakeboard");
  Lcg rng(12);
  for (int t = 0; t < 10; ++t) {
    const ReducedPoint z = {rng.uniform(-2, 2), rng.uniform(-1.3, 1.3), rng.uniform(-2, 2), rng.uniform(-2, 2),
                            rng.uniform(-2, 2)};
    const Representative rep = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3, 3)};
    const Trivector tr = snakeboard_reduced_jacobiator(z);
    const Trivector tr2 = snakeboard_reduced_jacobiator(z, {}, rep);
    const Trivector full = jacobiator_tensor_brute(nh_bivector(sys, snakeboard_lift(z, rep), 1));
    const std::size_t ix[5] = {3, 4, 5, 6, 7};
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t b = 0; b < 5; ++b)
        for (std::size_t c = 0; c < 5; ++c) {
          const double scale = std::max(1.0, std::abs(tr(a, b, c)));
          EXPECT_NEAR(tr(a, b, c), full(ix[a], ix[b], ix[c]), 1e-9 * scale);
          EXPECT_NEAR(tr(a, b, c), tr2(a, b, c), 1e-10 * scale);
        }
    const double e = snakeboard_expected("jac_ppsi", snakeboard_lift(z, rep));
    EXPECT_NEAR(tr(3, 4, 0), e, 1e-9 * std::max(1.0, std::abs(e)));
  }
}

}  // namespace
}  // namespace nhk
