#pragma once

// Forward-mode jets: a value together with its gradient (and, at order two,
// its Hessian) with respect to a fixed list of active variables.
//
// Jets with zero active variables act as constants and broadcast against jets
// of any width, so literals never have to know how many variables are live.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nhk/errors.hpp"

namespace nhk {

/// Absolute threshold below which a denominator counts as zero.
inline constexpr double kSingularDenominator = 1e-14;
/// |cos x| below this makes tan/sec singular.
inline constexpr double kSingularCosine = 1e-12;

template <int Order>
class Jet {
  static_assert(Order == 1 || Order == 2, "only first- and second-order jets exist");

 public:
  static constexpr int order = Order;

  Jet() = default;
  // NOLINTNEXTLINE(google-explicit-constructor): literals promote to constants.
  Jet(double value) : value_(value) {}

  static Jet constant(double value, std::size_t num_vars) {
    Jet j;
    j.value_ = value;
    j.resize(num_vars);
    return j;
  }

  /// The coordinate function x_index seeded at `value`.
  static Jet variable(double value, std::size_t index, std::size_t num_vars) {
    if (index >= num_vars) {
      throw ContractViolation("jet variable index " + std::to_string(index) +
                              " out of range for " + std::to_string(num_vars) +
                              " active variables");
    }
    Jet j = constant(value, num_vars);
    j.grad_[index] = 1.0;
    return j;
  }

  [[nodiscard]] double value() const noexcept { return value_; }
  [[nodiscard]] std::size_t num_vars() const noexcept { return grad_.size(); }
  [[nodiscard]] std::span<const double> grad() const noexcept { return grad_; }
  [[nodiscard]] double grad(std::size_t i) const { return grad_.empty() ? 0.0 : grad_[i]; }

  [[nodiscard]] double hess(std::size_t i, std::size_t j) const
    requires(Order == 2)
  {
    return hess_.empty() ? 0.0 : hess_[i * grad_.size() + j];
  }

  /// Row-major V×V Hessian.
  [[nodiscard]] std::span<const double> hess() const noexcept
    requires(Order == 2)
  {
    return hess_;
  }

  [[nodiscard]] bool is_constant() const noexcept { return grad_.empty(); }

  Jet& operator+=(const Jet& o) {
    adopt_width(o);
    value_ += o.value_;
    if (!o.grad_.empty()) {
      for (std::size_t i = 0; i < grad_.size(); ++i) grad_[i] += o.grad_[i];
      if constexpr (Order == 2) {
        for (std::size_t i = 0; i < hess_.size(); ++i) hess_[i] += o.hess_[i];
      }
    }
    return *this;
  }

  Jet& operator-=(const Jet& o) {
    adopt_width(o);
    value_ -= o.value_;
    if (!o.grad_.empty()) {
      for (std::size_t i = 0; i < grad_.size(); ++i) grad_[i] -= o.grad_[i];
      if constexpr (Order == 2) {
        for (std::size_t i = 0; i < hess_.size(); ++i) hess_[i] -= o.hess_[i];
      }
    }
    return *this;
  }

  Jet& operator*=(double s) {
    value_ *= s;
    for (auto& g : grad_) g *= s;
    if constexpr (Order == 2) {
      for (auto& h : hess_) h *= s;
    }
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    if (a.grad_.empty()) return b * a.value_;
    if (b.grad_.empty()) return a * b.value_;
    check_width(a, b);
    const std::size_t n = a.grad_.size();
    Jet r = constant(a.value_ * b.value_, n);
    for (std::size_t i = 0; i < n; ++i) r.grad_[i] = a.grad_[i] * b.value_ + a.value_ * b.grad_[i];
    if constexpr (Order == 2) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
          const double h = a.hess_[i * n + j] * b.value_ + a.value_ * b.hess_[i * n + j] +
                           a.grad_[i] * b.grad_[j] + a.grad_[j] * b.grad_[i];
          r.hess_[i * n + j] = h;
          r.hess_[j * n + i] = h;
        }
      }
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r = a * reciprocal(b);
    r.value_ = a.value_ / b.value_;  // same rounding as plain division
    return r;
  }
  friend Jet operator/(const Jet& a, double s) {
    if (std::abs(s) <= kSingularDenominator) {
      throw SingularEvaluation("division by near-zero constant");
    }
    return a * (1.0 / s);
  }

  /// Composition g∘a given g(v), g'(v), g''(v) at v = a.value().
  [[nodiscard]] Jet compose(double g0, double g1, double g2) const {
    const std::size_t n = grad_.size();
    Jet r = constant(g0, n);
    for (std::size_t i = 0; i < n; ++i) r.grad_[i] = g1 * grad_[i];
    if constexpr (Order == 2) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
          const double h = g2 * grad_[i] * grad_[j] + g1 * hess_[i * n + j];
          r.hess_[i * n + j] = h;
          r.hess_[j * n + i] = h;
        }
      }
    } else {
      (void)g2;
    }
    return r;
  }

  friend Jet reciprocal(const Jet& a) {
    const double v = a.value_;
    if (std::abs(v) <= kSingularDenominator) {
      throw SingularEvaluation("division by near-zero value " + std::to_string(v));
    }
    return a.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
  }

  /// Exact when the Hessian is assembled through this class; kept for tests.
  [[nodiscard]] bool hessian_symmetric() const {
    if constexpr (Order == 2) {
      const std::size_t n = grad_.size();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (hess_[i * n + j] != hess_[j * n + i]) return false;
        }
      }
    }
    return true;
  }

  // Raw construction for derivative extraction.
  static Jet from_parts(double value, std::vector<double> grad, std::vector<double> hess = {}) {
    Jet j;
    j.value_ = value;
    j.grad_ = std::move(grad);
    if constexpr (Order == 2) {
      j.hess_ = hess.empty() ? std::vector<double>(j.grad_.size() * j.grad_.size(), 0.0)
                             : std::move(hess);
    }
    return j;
  }

 private:
  void resize(std::size_t n) {
    grad_.assign(n, 0.0);
    if constexpr (Order == 2) hess_.assign(n * n, 0.0);
  }

  void adopt_width(const Jet& o) {
    if (o.grad_.empty()) return;
    if (grad_.empty()) {
      resize(o.grad_.size());
      return;
    }
    check_width(*this, o);
  }

  static void check_width(const Jet& a, const Jet& b) {
    if (a.grad_.size() != b.grad_.size()) {
      throw ContractViolation("jet width mismatch: " + std::to_string(a.grad_.size()) + " vs " +
                              std::to_string(b.grad_.size()));
    }
  }

  double value_ = 0.0;
  std::vector<double> grad_;
  std::vector<double> hess_;
};

using Jet1 = Jet<1>;
using Jet2 = Jet<2>;

// ---------------------------------------------------------------------------
// Scalar helpers shared by double and jets, so templated numerics can be
// written once.

inline double value_of(double x) noexcept { return x; }
template <int O>
double value_of(const Jet<O>& x) noexcept {
  return x.value();
}

/// One derivative order less: Jet2 → Jet1 → double.
template <class S>
struct lower;
template <>
struct lower<Jet2> {
  using type = Jet1;
};
template <>
struct lower<Jet1> {
  using type = double;
};
template <class S>
using lower_t = typename lower<S>::type;

/// ∂x/∂y_l, one order lower than x.
inline Jet1 derivative(const Jet2& x, std::size_t l) {
  const std::size_t n = x.num_vars();
  if (n == 0) return Jet1(0.0);
  std::vector<double> g(n);
  for (std::size_t j = 0; j < n; ++j) g[j] = x.hess(l, j);
  return Jet1::from_parts(x.grad(l), std::move(g));
}
inline double derivative(const Jet1& x, std::size_t l) { return x.grad(l); }

/// Drops the highest derivative order.
inline Jet1 truncate(const Jet2& x) {
  const auto g = x.grad();
  return Jet1::from_parts(x.value(), std::vector<double>(g.begin(), g.end()));
}
inline double truncate(const Jet1& x) { return x.value(); }

// ---------------------------------------------------------------------------
// Elementary functions.

inline double sec(double x) { return 1.0 / std::cos(x); }

template <int O>
Jet<O> sin(const Jet<O>& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  return a.compose(s, c, -s);
}

template <int O>
Jet<O> cos(const Jet<O>& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  return a.compose(c, -s, -c);
}

template <int O>
Jet<O> tan(const Jet<O>& a) {
  const double c = std::cos(a.value());
  if (std::abs(c) <= kSingularCosine) throw SingularEvaluation("tan evaluated at a pole");
  const double t = std::tan(a.value());
  const double s2 = 1.0 + t * t;  // sec²
  return a.compose(t, s2, 2.0 * s2 * t);
}

template <int O>
Jet<O> sec(const Jet<O>& a) {
  const double c = std::cos(a.value());
  if (std::abs(c) <= kSingularCosine) throw SingularEvaluation("sec evaluated at a pole");
  const double s = 1.0 / c;
  const double t = std::tan(a.value());
  return a.compose(s, s * t, s * (t * t + s * s));
}

template <int O>
Jet<O> sqrt(const Jet<O>& a) {
  const double v = a.value();
  if (!(v > 0.0)) throw SingularEvaluation("sqrt of non-positive value " + std::to_string(v));
  const double r = std::sqrt(v);
  return a.compose(r, 0.5 / r, -0.25 / (r * v));
}

template <int O>
Jet<O> exp(const Jet<O>& a) {
  const double e = std::exp(a.value());
  return a.compose(e, e, e);
}

template <int O>
Jet<O> ln(const Jet<O>& a) {
  const double v = a.value();
  if (!(v > 0.0)) throw SingularEvaluation("ln of non-positive value " + std::to_string(v));
  return a.compose(std::log(v), 1.0 / v, -1.0 / (v * v));
}

/// Integer power; negative exponents require a nonzero base.
template <int O>
Jet<O> pow(const Jet<O>& a, int n) {
  const double v = a.value();
  if (n == 0) return Jet<O>(1.0);
  if (n < 0 && std::abs(v) <= kSingularDenominator) {
    throw SingularEvaluation("negative power of near-zero value");
  }
  const double g0 = std::pow(v, n);
  const double g1 = n * std::pow(v, n - 1);
  const double g2 = n == 1 ? 0.0 : n * (n - 1) * std::pow(v, n - 2);
  return a.compose(g0, g1, g2);
}

inline double ln(double v) {
  if (!(v > 0.0)) throw SingularEvaluation("ln of non-positive value " + std::to_string(v));
  return std::log(v);
}

// ---------------------------------------------------------------------------
// Operation-table entry points.

enum class BinaryOp { add, sub, mul, div, pow };
enum class UnaryFn { neg, sin, cos, tan, sec, sqrt, exp, ln };

/// Coordinate function x_index seeded at `values`.
Jet2 jet_lift(std::span<const double> values, std::size_t index);

/// For pow, b must be a constant integer in [-6, 6].
Jet2 jet_binary(BinaryOp op, const Jet2& a, const Jet2& b);

Jet2 jet_unary(UnaryFn fn, const Jet2& a);

const char* to_string(UnaryFn fn);
const char* to_string(BinaryOp op);

}  // namespace nhk
