#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "nhk/jet.hpp"

namespace nhk {
namespace {

using Fn = std::function<Jet2(const std::vector<Jet2>&)>;
using FnD = std::function<double(const std::vector<double>&)>;

// Central differences with step h for gradient and Hessian.
void expect_matches_fd(const Fn& f, const FnD& fd, const std::vector<double>& x, double tol = 1e-6) {
  const std::size_t n = x.size();
  std::vector<Jet2> seeds;
  for (std::size_t i = 0; i < n; ++i) seeds.push_back(jet_lift(x, i));
  const Jet2 j = f(seeds);
  EXPECT_DOUBLE_EQ(j.value(), fd(x));
  const double h = 1e-4;
  for (std::size_t i = 0; i < n; ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double g = (fd(xp) - fd(xm)) / (2 * h);
    EXPECT_NEAR(j.grad(i), g, tol * std::max(1.0, std::abs(g)));
    for (std::size_t k = 0; k < n; ++k) {
      auto pp = x, pm = x, mp = x, mm = x;
      pp[i] += h, pp[k] += h;
      pm[i] += h, pm[k] -= h;
      mp[i] -= h, mp[k] += h;
      mm[i] -= h, mm[k] -= h;
      const double hk = (fd(pp) - fd(pm) - fd(mp) + fd(mm)) / (4 * h * h);
      EXPECT_NEAR(j.hess(i, k), hk, tol * std::max(1.0, std::abs(hk)));
      EXPECT_EQ(j.hess(i, k), j.hess(k, i));
    }
  }
}

TEST(JetLift, SeedsCoordinateFunction) {
  const Jet2 a = jet_lift(std::vector<double>{3.0, 5.0}, 0);
  EXPECT_EQ(a.value(), 3.0);
  EXPECT_EQ(a.grad(0), 1.0);
  EXPECT_EQ(a.grad(1), 0.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(a.hess(i, k), 0.0);

  const Jet2 b = jet_lift(std::vector<double>{0.0}, 0);
  EXPECT_EQ(b.value(), 0.0);
  EXPECT_EQ(b.grad(0), 1.0);
  EXPECT_EQ(b.hess(0, 0), 0.0);

  const Jet2 c = jet_lift(std::vector<double>{1, 2, 3}, 2);
  EXPECT_EQ(c.value(), 3.0);
  EXPECT_EQ(c.grad(0), 0.0);
  EXPECT_EQ(c.grad(1), 0.0);
  EXPECT_EQ(c.grad(2), 1.0);
}

TEST(JetLift, IndexOutOfRangeIsContractViolation) {
  EXPECT_THROW(jet_lift(std::vector<double>{1.0, 2.0}, 2), ContractViolation);
}

TEST(JetBinary, Examples) {
  const Jet2 x = jet_lift(std::vector<double>{3.0}, 0);
  const Jet2 sq = jet_binary(BinaryOp::mul, x, x);
  EXPECT_EQ(sq.value(), 9.0);
  EXPECT_EQ(sq.grad(0), 6.0);
  EXPECT_EQ(sq.hess(0, 0), 2.0);

  const Jet2 s = jet_binary(BinaryOp::add, Jet2::constant(2.0, 1), Jet2::constant(5.0, 1));
  EXPECT_EQ(s.value(), 7.0);
  EXPECT_EQ(s.grad(0), 0.0);
  EXPECT_EQ(s.hess(0, 0), 0.0);
}

TEST(JetBinary, SinTimesCosMatchesFiniteDifferences) {
  expect_matches_fd([](const auto& v) { return jet_binary(BinaryOp::mul, sin(v[0]), cos(v[0])); },
                    [](const auto& v) { return std::sin(v[0]) * std::cos(v[0]); }, {0.7});
}

TEST(JetBinary, DivisionByNearZeroIsSingular) {
  const Jet2 x = jet_lift(std::vector<double>{1.0}, 0);
  EXPECT_THROW(jet_binary(BinaryOp::div, x, Jet2::constant(1e-15, 1)), SingularEvaluation);
  EXPECT_NO_THROW(jet_binary(BinaryOp::div, x, Jet2::constant(1e-13, 1)));
}

TEST(JetBinary, PowRequiresConstantIntegerExponent) {
  const Jet2 x = jet_lift(std::vector<double>{2.0}, 0);
  const Jet2 p = jet_binary(BinaryOp::pow, x, Jet2::constant(3.0, 1));
  EXPECT_EQ(p.value(), 8.0);
  EXPECT_EQ(p.grad(0), 12.0);
  EXPECT_EQ(p.hess(0, 0), 12.0);
  EXPECT_THROW(jet_binary(BinaryOp::pow, x, x), ContractViolation);
  EXPECT_THROW(jet_binary(BinaryOp::pow, x, Jet2::constant(0.5, 1)), ContractViolation);
}

TEST(JetUnary, Examples) {
  const Jet2 z = jet_lift(std::vector<double>{0.0}, 0);
  const Jet2 s = jet_unary(UnaryFn::sin, z);
  EXPECT_EQ(s.value(), 0.0);
  EXPECT_EQ(s.grad(0), 1.0);
  EXPECT_EQ(s.hess(0, 0), 0.0);

  const Jet2 sc = jet_unary(UnaryFn::sec, z);
  EXPECT_EQ(sc.value(), 1.0);
  EXPECT_EQ(sc.grad(0), 0.0);
  EXPECT_DOUBLE_EQ(sc.hess(0, 0), 1.0);
}

TEST(JetUnary, ExpOfSquareMatchesFiniteDifferences) {
  expect_matches_fd([](const auto& v) { return exp(v[0] * v[0]); },
                    [](const auto& v) { return std::exp(v[0] * v[0]); }, {0.5});
}

TEST(JetUnary, DomainViolationsAreSingular) {
  const Jet2 neg = jet_lift(std::vector<double>{-1.0}, 0);
  EXPECT_THROW(jet_unary(UnaryFn::sqrt, neg), SingularEvaluation);
  EXPECT_THROW(jet_unary(UnaryFn::ln, neg), SingularEvaluation);
  EXPECT_THROW(jet_unary(UnaryFn::sqrt, Jet2::constant(0.0, 1)), SingularEvaluation);
  const Jet2 pole = jet_lift(std::vector<double>{M_PI / 2}, 0);
  EXPECT_THROW(jet_unary(UnaryFn::tan, pole), SingularEvaluation);
  EXPECT_THROW(jet_unary(UnaryFn::sec, pole), SingularEvaluation);
}

TEST(JetUnary, EveryFunctionMatchesFiniteDifferencesInTwoVariables) {
  const std::vector<double> x = {0.4, 1.3};
  const std::vector<std::pair<UnaryFn, double (*)(double)>> fns = {
      {UnaryFn::sin, [](double u) { return std::sin(u); }},
      {UnaryFn::cos, [](double u) { return std::cos(u); }},
      {UnaryFn::tan, [](double u) { return std::tan(u); }},
      {UnaryFn::sec, [](double u) { return 1.0 / std::cos(u); }},
      {UnaryFn::sqrt, [](double u) { return std::sqrt(u); }},
      {UnaryFn::exp, [](double u) { return std::exp(u); }},
      {UnaryFn::ln, [](double u) { return std::log(u); }},
      {UnaryFn::neg, [](double u) { return -u; }},
  };
  for (const auto& [fn, ref] : fns) {
    SCOPED_TRACE(to_string(fn));
    auto f = fn;
    auto r = ref;
    // u = x·y/2 + x keeps every function on its domain at x.
    expect_matches_fd(
        [f](const auto& v) { return jet_unary(f, v[0] * v[1] * 0.5 + v[0]); },
        [r](const auto& v) { return r(v[0] * v[1] * 0.5 + v[0]); }, x);
  }
}

TEST(JetArithmetic, HessianStaysExactlySymmetric) {
  const std::vector<double> x = {0.3, -1.1, 0.8};
  std::vector<Jet2> v;
  for (std::size_t i = 0; i < 3; ++i) v.push_back(jet_lift(x, i));
  const Jet2 e = sin(v[0] * v[1]) / (2.0 + cos(v[2])) + exp(v[1]) * v[2] * v[0] - sec(v[0] - v[2]);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(e.hess(i, k), e.hess(k, i));
}

TEST(JetArithmetic, NoActiveVariablesIsPlainArithmetic) {
  const Jet2 a(0.7), b(1.9);
  EXPECT_EQ(a.num_vars(), 0u);
  const Jet2 e = sin(a) * cos(b) / (a + b) - exp(a) * tan(b);
  EXPECT_EQ(e.value(), std::sin(0.7) * std::cos(1.9) / (0.7 + 1.9) - std::exp(0.7) * std::tan(1.9));
  EXPECT_TRUE(e.is_constant());
}

TEST(JetArithmetic, MismatchedWidthsAreRejected) {
  const Jet2 a = Jet2::variable(1.0, 0, 2);
  const Jet2 b = Jet2::variable(1.0, 0, 3);
  EXPECT_THROW(a + b, ContractViolation);
}

TEST(JetArithmetic, FirstOrderJetAgreesWithSecondOrderJet) {
  const std::vector<double> x = {0.2, 0.9};
  const Jet2 a2 = jet_lift(x, 0), b2 = jet_lift(x, 1);
  const Jet1 a1 = Jet1::variable(x[0], 0, 2), b1 = Jet1::variable(x[1], 1, 2);
  const Jet2 e2 = sqrt(a2 * a2 + b2) * ln(b2 + 1.0);
  const Jet1 e1 = sqrt(a1 * a1 + b1) * ln(b1 + 1.0);
  EXPECT_EQ(e1.value(), e2.value());
  EXPECT_DOUBLE_EQ(e1.grad(0), e2.grad(0));
  EXPECT_DOUBLE_EQ(e1.grad(1), e2.grad(1));
  const Jet1 d = derivative(e2, 1);
  EXPECT_DOUBLE_EQ(d.value(), e2.grad(1));
  EXPECT_DOUBLE_EQ(d.grad(0), e2.hess(1, 0));
}

}  // namespace
}  // namespace nhk
