#pragma once

// Geometric substrate of a nonholonomic system: the system definition, the
// D/W frames on Q, the constraint phase space M = κ♭(D) with chart (q, p̃),
// its embedding in T*Q, the 2-form Ω_M and the splitting TM = C ⊕ 𝒲.
//
// Chart basis of TM everywhere: {∂/∂q^1..∂/∂q^n, ∂/∂p̃_1..∂/∂p̃_{n-k}} with
// coframe {dq^i, dp̃_α}. Momenta are p̃_α = p(X_α).

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nhk/errors.hpp"
#include "nhk/expr.hpp"
#include "nhk/jet.hpp"
#include "nhk/linalg.hpp"
#include "nhk/random.hpp"

namespace nhk {

/// Open interval; infinite bounds mean unbounded.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  [[nodiscard]] bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  [[nodiscard]] bool contains(double x) const { return x > lo && x < hi; }
  /// Midpoint, or 0 for unbounded intervals.
  [[nodiscard]] double midpoint() const { return bounded() ? 0.5 * (lo + hi) : 0.0; }
};

struct LoadOptions;

class NonholonomicSystem {
 public:
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  /// Configuration dimension.
  [[nodiscard]] std::size_t n() const noexcept { return coords_.size(); }
  /// Number of constraint one-forms.
  [[nodiscard]] std::size_t k() const noexcept { return constraints_.size(); }
  /// Rank of D.
  [[nodiscard]] std::size_t m() const noexcept { return n() - k(); }
  [[nodiscard]] std::size_t dim_M() const noexcept { return 2 * n() - k(); }

  [[nodiscard]] const std::vector<std::string>& coord_names() const noexcept { return coords_; }
  /// Labels of the D-frame vectors X_α.
  [[nodiscard]] const std::vector<std::string>& frame_names() const noexcept { return frame_names_; }
  /// "ptilde_<frame name>".
  [[nodiscard]] const std::vector<std::string>& momentum_names() const noexcept {
    return momentum_names_;
  }
  /// Labels of the coframe χ^α: the frame name when it is a coordinate
  /// name, "alpha_<frame name>" otherwise.
  [[nodiscard]] const std::vector<std::string>& coframe_names() const noexcept {
    return coframe_names_;
  }
  /// Coordinates followed by momenta: names of the M chart variables.
  [[nodiscard]] std::vector<std::string> chart_names() const;

  [[nodiscard]] const std::map<std::string, double>& params() const noexcept { return params_; }
  [[nodiscard]] const std::vector<Interval>& domain() const noexcept { return domain_; }
  [[nodiscard]] bool in_domain(std::span<const double> q) const;

  [[nodiscard]] bool has_d_frame() const noexcept { return !d_frame_.empty(); }
  [[nodiscard]] bool has_w_frame() const noexcept { return !w_frame_.empty(); }
  [[nodiscard]] bool is_adapted() const noexcept { return adapted_; }
  [[nodiscard]] const std::vector<std::size_t>& s_indices() const noexcept { return s_indices_; }
  [[nodiscard]] const std::vector<std::size_t>& r_indices() const noexcept { return r_indices_; }

  /// Normalised definition document (what `nhk export` prints).
  [[nodiscard]] const nlohmann::json& definition() const noexcept { return definition_; }

  // Field evaluation over double, Jet1 or Jet2 coordinate values.
  template <class S>
  Matrix<S> metric(std::span<const S> q) const {
    Matrix<S> g(n(), n());
    for (std::size_t i = 0; i < n(); ++i)
      for (std::size_t j = 0; j < n(); ++j) g(i, j) = metric_[i * n() + j].evaluate(q);
    return g;
  }

  template <class S>
  S potential(std::span<const S> q) const {
    return potential_.evaluate(q);
  }

  /// k×n; row a is ε^a in the coframe dq^i.
  template <class S>
  Matrix<S> constraints(std::span<const S> q) const {
    Matrix<S> e(k(), n());
    for (std::size_t a = 0; a < k(); ++a)
      for (std::size_t i = 0; i < n(); ++i) e(a, i) = constraints_[a][i].evaluate(q);
    return e;
  }

  /// n×m; columns are the user D-frame vectors. Requires has_d_frame().
  template <class S>
  Matrix<S> user_d_frame(std::span<const S> q) const {
    return columns(d_frame_, q);
  }

  /// n×k; columns are the user complement vectors Z_a. Requires has_w_frame().
  template <class S>
  Matrix<S> user_w_frame(std::span<const S> q) const {
    return columns(w_frame_, q);
  }

  /// Same system with the user complement discarded, so the default
  /// complement (coordinate or κ-orthogonal) takes over.
  [[nodiscard]] NonholonomicSystem without_w_frame() const;

 private:
  friend NonholonomicSystem load_system(const nlohmann::json& doc, const LoadOptions& opts);

  template <class S>
  Matrix<S> columns(const std::vector<std::vector<CompiledExpr>>& rows, std::span<const S> q) const {
    Matrix<S> out(n(), rows.size());
    for (std::size_t c = 0; c < rows.size(); ++c)
      for (std::size_t i = 0; i < n(); ++i) out(i, c) = rows[c][i].evaluate(q);
    return out;
  }

  std::string name_;
  std::vector<std::string> coords_;
  std::vector<std::string> frame_names_;
  std::vector<std::string> momentum_names_;
  std::vector<std::string> coframe_names_;
  std::map<std::string, double> params_;
  std::vector<Interval> domain_;
  std::vector<CompiledExpr> metric_;  // row-major n×n
  CompiledExpr potential_;
  std::vector<std::vector<CompiledExpr>> constraints_;  // k rows × n
  std::vector<std::vector<CompiledExpr>> d_frame_;      // m rows × n (vectors)
  std::vector<std::vector<CompiledExpr>> w_frame_;      // k rows × n (vectors)
  bool adapted_ = false;
  std::vector<std::size_t> s_indices_;
  std::vector<std::size_t> r_indices_;
  nlohmann::json definition_;
};

struct LoadOptions {
  /// Evaluate metric symmetry and the adapted identity block at sample
  /// points while loading. Pointwise checks during later queries run
  /// regardless.
  bool sample_checks = true;
  std::size_t sample_count = 16;
};

/// Parses and validates a system-definition document. Collects every
/// violation (schema, unknown names, asymmetric metric, adapted identity
/// block) into one LoadError.
NonholonomicSystem load_system(const nlohmann::json& doc, const LoadOptions& opts = {});
NonholonomicSystem load_system_text(const std::string& json_text, const LoadOptions& opts = {});
NonholonomicSystem load_system_file(const std::string& path, const LoadOptions& opts = {});

/// A point of M: base coordinates and momenta p̃_α = p(X_α).
struct PointM {
  std::vector<double> q;
  std::vector<double> ptilde;

  /// (q, p̃) as one chart vector.
  [[nodiscard]] std::vector<double> chart() const;
};

/// Domain midpoints (0 where unbounded) and zero momenta.
PointM default_point(const NonholonomicSystem& sys);

/// Uniform configuration sample: bounded coordinates in the inner 90% of
/// their interval, unbounded ones in [-2, 2].
std::vector<double> sample_configuration(const NonholonomicSystem& sys, Lcg& rng);

/// sample_configuration followed by momenta uniform in [-2, 2].
PointM sample_point(const NonholonomicSystem& sys, Lcg& rng);

/// Frame data at a point of Q.
struct FrameAtPoint {
  Matrix<Jet2> kappa;  // n×n metric
  Matrix<Jet2> eps;    // k×n constraint forms
  Matrix<Jet2> X;      // n×m, columns span D
  Matrix<Jet2> Z;      // n×k, columns span W, ε(Z) = I
  Matrix<Jet2> chi;    // m×n, coframe dual to X inside {χ, ε}
  Matrix<Jet2> J;      // k×m, p̃_a = J_a^β p̃_β
};

/// Tolerances for pointwise checks.
inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kDefinitenessTol = 1e-10;
inline constexpr double kRankTol = 1e-10;
inline constexpr double kDualityTol = 1e-10;
inline constexpr double kIdentityBlockTol = 1e-12;
inline constexpr double kPivotTol = 1e-12;

namespace detail {

template <class S>
struct FrameData {
  Matrix<S> kappa, eps, X, Z, chi, J;
};

/// Frames and J at q for any scalar type; every pointwise invariant is
/// checked on the value parts.
template <class S>
FrameData<S> build_frame(const NonholonomicSystem& sys, std::span<const S> q);

extern template FrameData<double> build_frame(const NonholonomicSystem&, std::span<const double>);
extern template FrameData<Jet1> build_frame(const NonholonomicSystem&, std::span<const Jet1>);
extern template FrameData<Jet2> build_frame(const NonholonomicSystem&, std::span<const Jet2>);

/// Complement columns per the default rule (coordinate complement when
/// adapted, otherwise κ-orthogonal) or the user frame when present.
template <class S>
Matrix<S> complement_frame(const NonholonomicSystem& sys, const Matrix<S>& kappa,
                           const Matrix<S>& eps, std::span<const S> q);

void check_in_domain(const NonholonomicSystem& sys, std::span<const double> q);

}  // namespace detail

/// The k complement fields Z_a at q (n×k, ε^a(Z_b) = δ^a_b).
Matrix<double> pick_default_W(const NonholonomicSystem& sys, std::span<const double> q);

/// order 0: plain values (jets with no variables); order 1 or 2: jets with
/// respect to q.
FrameAtPoint frame_at(const NonholonomicSystem& sys, std::span<const double> q, int order = 2);

/// Canonical momenta p_i of the point in T*Q.
std::vector<double> embed(const NonholonomicSystem& sys, const PointM& p);

/// Constant-coefficient shift of the 𝒲-lift: Z̃_a ↦ Z̃_a + Σ_j shift(a, j)·C_j,
/// where C_j are the columns of the C basis. Any shift leaves the lift a
/// complement of C.
using LiftShift = Matrix<double>;

/// Everything pointwise on M, computed once: frames, embedding, H_M, Ω_M
/// and the splitting. At order 1 the matrix entries carry first derivatives
/// with respect to the chart variables (q, p̃); at order 0 they are plain values.
class PhaseSpaceModel {
 public:
  PhaseSpaceModel(const NonholonomicSystem& sys, const PointM& p, int order = 1,
                  const std::optional<LiftShift>& lift = std::nullopt);

  [[nodiscard]] const NonholonomicSystem& system() const noexcept { return *sys_; }
  [[nodiscard]] const PointM& point() const noexcept { return point_; }
  [[nodiscard]] int order() const noexcept { return order_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

  /// Ω_M in the chart basis: Ω(u, v) = uᵀ·Ω·v.
  [[nodiscard]] const Matrix<Jet1>& omega() const noexcept { return omega_; }
  /// N×2m; columns (X_α, 0) then ∂/∂p̃_α.
  [[nodiscard]] const Matrix<Jet1>& basis_C() const noexcept { return basis_c_; }
  /// N×k; columns Z̃_a.
  [[nodiscard]] const Matrix<Jet1>& basis_W() const noexcept { return basis_w_; }
  /// Inverse of [basis_C | basis_W] (values).
  [[nodiscard]] const Matrix<double>& basis_inverse() const noexcept { return basis_inv_; }

  [[nodiscard]] const detail::FrameData<double>& frame() const noexcept { return frame_; }
  [[nodiscard]] const std::vector<double>& momenta() const noexcept { return momenta_; }
  [[nodiscard]] double hamiltonian() const noexcept { return hamiltonian_; }
  [[nodiscard]] const std::vector<double>& hamiltonian_differential() const noexcept {
    return dhamiltonian_;
  }

 private:
  template <class J>
  void assemble(const std::optional<LiftShift>& lift);

  const NonholonomicSystem* sys_;
  PointM point_;
  int order_;
  std::size_t dim_;
  Matrix<Jet1> omega_;
  Matrix<Jet1> basis_c_;
  Matrix<Jet1> basis_w_;
  Matrix<double> basis_inv_;
  detail::FrameData<double> frame_;
  std::vector<double> momenta_;
  double hamiltonian_ = 0.0;
  std::vector<double> dhamiltonian_;
};

struct TwoFormAtPoint {
  Matrix<Jet1> mat;  // antisymmetric, chart basis

  [[nodiscard]] double operator()(std::span<const double> u, std::span<const double> v) const;
  /// Ω restricted to C in the C basis, values.
  Matrix<double> restricted;
};

struct SplittingAtPoint {
  std::size_t dimM = 0;
  Matrix<double> C_basis;  // dimM × 2(n-k)
  Matrix<double> W_basis;  // dimM × k
  Matrix<double> P_C;
  Matrix<double> P_W;
};

TwoFormAtPoint omega_M(const NonholonomicSystem& sys, const PointM& p, int order = 0);
TwoFormAtPoint omega_M(const PhaseSpaceModel& model);

SplittingAtPoint splitting_at(const NonholonomicSystem& sys, const PointM& p,
                              const std::optional<LiftShift>& lift = std::nullopt);
SplittingAtPoint splitting_at(const PhaseSpaceModel& model);

/// True when the system has a distinguished coframe beyond the chart one:
/// a user D-frame or adapted coordinates.
bool has_adapted_coframe(const NonholonomicSystem& sys);

/// Rows are covectors on M in the chart coframe: χ^α (dr^α for adapted
/// systems), then ε^a, then dp̃_α. Labels from adapted_coframe_names.
Matrix<double> adapted_coframe(const NonholonomicSystem& sys, std::span<const double> q);
std::vector<std::string> adapted_coframe_names(const NonholonomicSystem& sys);

/// Tτ of a chart vector: its first n components.
std::vector<double> base_projection(const NonholonomicSystem& sys, std::span<const double> v);

/// Pullback of a base covector (length n) to M (length dim_M).
std::vector<double> pullback(const NonholonomicSystem& sys, std::span<const double> base_covector);

}  // namespace nhk
