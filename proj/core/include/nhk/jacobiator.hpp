#pragma once

// The Jacobiator {f,{g,h}} + {g,{h,f}} + {h,{f,g}} of the nonholonomic
// bracket, which is ½[π,π](df, dg, dh), computed three ways:
//
//   brute   cyclic sum with inner brackets differentiated as jets;
//   global  Σ_cyc Ω_M(K_𝒲(π♯α, π♯β), π♯γ) − γ(K_𝒲(π♯α, π♯β));
//   km      closed-form expressions in adapted coordinates (r, s; p̃).
//
// Every function here returns the cyclic sum. [π,π] is twice that.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nhk/bracket.hpp"
#include "nhk/curvature.hpp"
#include "nhk/manifold.hpp"

namespace nhk {

enum class Method { brute, global, km };

const char* to_string(Method m);
std::optional<Method> method_from_string(const std::string& s);

using Triple = std::array<std::size_t, 3>;

/// Trivector on M as its components T(dy^a, dy^b, dy^c) in the chart coframe.
class Trivector {
 public:
  explicit Trivector(std::size_t dim = 0) : dim_(dim), data_(dim * dim * dim, 0.0) {}

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  double& operator()(std::size_t a, std::size_t b, std::size_t c) {
    return data_[(a * dim_ + b) * dim_ + c];
  }
  double operator()(std::size_t a, std::size_t b, std::size_t c) const {
    return data_[(a * dim_ + b) * dim_ + c];
  }

  /// T(α, β, γ) for arbitrary covectors.
  [[nodiscard]] double contract(std::span<const double> alpha, std::span<const double> beta,
                                std::span<const double> gamma) const;

  /// Largest |T(a,b,c) + T(b,a,c)| or |T(a,b,c) + T(a,c,b)|.
  [[nodiscard]] double antisymmetry_defect() const;

 private:
  std::size_t dim_;
  std::vector<double> data_;
};

/// Needs a bivector computed from an order-1 model.
Trivector jacobiator_tensor_brute(const BivectorAtPoint& pi);
Trivector jacobiator_tensor_global(const PhaseSpaceModel& model, const BivectorAtPoint& pi,
                                   const CurvatureAtPoint& k);
/// Throws UnsupportedOperation for systems without adapted coordinates.
Trivector jacobiator_tensor_km(const NonholonomicSystem& sys, const PointM& p);

/// Global formula for arbitrary covectors.
double jacobiator_global(const PhaseSpaceModel& model, const BivectorAtPoint& pi,
                         const CurvatureAtPoint& k, std::span<const double> alpha,
                         std::span<const double> beta, std::span<const double> gamma);

double jacobiator_bruteforce(const NonholonomicSystem& sys, const PointM& p, const Triple& triple);
double jacobiator_global(const NonholonomicSystem& sys, const PointM& p, std::span<const double> alpha,
                         std::span<const double> beta, std::span<const double> gamma,
                         const std::optional<LiftShift>& lift = std::nullopt);
double jacobiator_km(const NonholonomicSystem& sys, const PointM& p, const Triple& triple);

struct DiscrepancyRow {
  std::size_t point = 0;
  Triple triple{};
  Method method_a = Method::brute;
  Method method_b = Method::global;
  double delta = 0.0;
};

struct SkippedPoint {
  std::size_t point = 0;
  std::string reason;
};

struct JacobiatorReport {
  std::string system;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  double tol = 0.0;
  std::vector<Method> methods;
  std::vector<std::string> chart_names;
  std::vector<PointM> points;
  std::vector<Triple> triples;  // a < b < c over the chart coframe
  /// values[point][triple][method], NaN for skipped points.
  std::vector<std::vector<std::vector<double>>> values;
  double max_abs_discrepancy = 0.0;
  double max_antisymmetry_defect = 0.0;
  std::size_t failure_count = 0;
  std::vector<DiscrepancyRow> failures;  // at most kMaxFailureRows
  std::vector<SkippedPoint> skipped;
  bool pass = false;

  static constexpr std::size_t kMaxFailureRows = 200;
};

/// Tolerance for the antisymmetry invariant of each method's output.
inline constexpr double kAntisymmetryTol = 1e-9;

/// Worker count from NHK_THREADS (0 means sequential); hardware
/// concurrency when unset.
unsigned default_threads();

/// Points are drawn with Lcg(seed) by sample_point, sequentially, before any
/// evaluation, so the report does not depend on the thread count.
JacobiatorReport cross_validate(const NonholonomicSystem& sys, std::size_t samples, std::uint64_t seed,
                                double tol, unsigned threads = default_threads());

/// Serialisation: system, seed, samples, tol, methods, max_abs_discrepancy,
/// pass, failures and skipped points; per-point values on request.
nlohmann::json to_json(const JacobiatorReport& report, bool include_values = false);

}  // namespace nhk
