#include "nhk/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Dense>

namespace nhk {

namespace {

using nlohmann::json;

const std::set<std::string> kFunctionNames = {"sin", "cos", "tan", "sec", "sqrt", "exp", "ln"};

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s[0])) return false;
  return std::all_of(s.begin(), s.end(), [&](char c) { return alpha(c) || digit(c); });
}

std::string format_point(std::span<const double> q) {
  std::string out = "(";
  char buf[32];
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", q[i]);
    if (i) out += ", ";
    out += buf;
  }
  return out + ")";
}

Eigen::MatrixXd to_eigen(const Matrix<double>& a) {
  Eigen::MatrixXd e(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) e(i, j) = a(i, j);
  return e;
}

double min_eigenvalue(const Matrix<double>& sym) {
  if (sym.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(sym), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double min_singular_value(const Matrix<double>& a) {
  if (a.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(a));
  return svd.singularValues().minCoeff();
}

template <class S>
Matrix<S> submatrix_columns(const Matrix<S>& a, std::span<const std::size_t> cols) {
  Matrix<S> out(a.rows(), cols.size());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(i, cols[j]);
  return out;
}

template <class S>
double max_grad_abs(const S& x) {
  if constexpr (std::is_same_v<S, double>) {
    (void)x;
    return 0.0;
  } else {
    double g = 0.0;
    for (double v : x.grad()) g = std::max(g, std::abs(v));
    return g;
  }
}

// Kernel of the k×n matrix eps by reduced row echelon form. Columns are
// visited in ascending order and a column becomes a pivot when some
// remaining row has |value| > kPivotTol there; the row with the largest
// |value| is used. The kernel vectors are then orthonormalised.
template <class S>
Matrix<S> kernel_frame(const Matrix<S>& eps) {
  const std::size_t k = eps.rows(), n = eps.cols();
  Matrix<S> r = eps;
  std::vector<std::size_t> pivots;
  std::vector<bool> is_pivot(n, false);
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < k; ++col) {
    std::size_t best_row = row;
    double best = -1.0;
    for (std::size_t i = row; i < k; ++i) {
      const double v = std::abs(value_of(r(i, col)));
      if (v > best + kPivotTol) {
        best = v;
        best_row = i;
      }
    }
    if (best <= kPivotTol) {
      for (std::size_t i = row; i < k; ++i) {
        if (max_grad_abs(r(i, col)) > kPivotTol) {
          throw FrameSingularity(
              "constraint elimination is degenerate at this point (column " +
              std::to_string(col) + " vanishes with nonzero derivative); supply a d_frame");
        }
      }
      continue;
    }
    if (best_row != row)
      for (std::size_t j = 0; j < n; ++j) std::swap(r(row, j), r(best_row, j));
    const S inv = S(1.0) / r(row, col);
    for (std::size_t j = 0; j < n; ++j) r(row, j) = r(row, j) * inv;
    for (std::size_t i = 0; i < k; ++i) {
      if (i == row) continue;
      const S f = r(i, col);
      for (std::size_t j = 0; j < n; ++j) r(i, j) -= f * r(row, j);
    }
    pivots.push_back(col);
    is_pivot[col] = true;
    ++row;
  }
  if (row < k) throw DegenerateConstraint("constraint forms are linearly dependent at this point");

  std::vector<std::vector<S>> basis;
  for (std::size_t f = 0; f < n; ++f) {
    if (is_pivot[f]) continue;
    std::vector<S> v(n, S(0.0));
    v[f] = S(1.0);
    for (std::size_t i = 0; i < k; ++i) v[pivots[i]] = -r(i, f);
    basis.push_back(std::move(v));
  }
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      S dot(0.0);
      for (std::size_t i = 0; i < n; ++i) dot += basis[a][i] * basis[b][i];
      for (std::size_t i = 0; i < n; ++i) basis[a][i] -= dot * basis[b][i];
    }
    S norm2(0.0);
    for (std::size_t i = 0; i < n; ++i) norm2 += basis[a][i] * basis[a][i];
    const S inv_norm = S(1.0) / detail::apply_unary(UnaryFn::sqrt, norm2);
    for (std::size_t i = 0; i < n; ++i) basis[a][i] = basis[a][i] * inv_norm;
  }
  Matrix<S> x(n, basis.size());
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (std::size_t i = 0; i < n; ++i) x(i, a) = basis[a][i];
  return x;
}

template <class S>
double max_deviation_from_identity(const Matrix<S>& a) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      d = std::max(d, std::abs(value_of(a(i, j)) - (i == j ? 1.0 : 0.0)));
  return d;
}

inline Jet1 as_jet1(double x) { return Jet1(x); }
inline Jet1 as_jet1(const Jet1& x) { return x; }

}  // namespace

// ---------------------------------------------------------------------------
// NonholonomicSystem

std::vector<std::string> NonholonomicSystem::chart_names() const {
  std::vector<std::string> out = coords_;
  out.insert(out.end(), momentum_names_.begin(), momentum_names_.end());
  return out;
}

bool NonholonomicSystem::in_domain(std::span<const double> q) const {
  if (q.size() != n()) return false;
  for (std::size_t i = 0; i < n(); ++i)
    if (!domain_[i].contains(q[i])) return false;
  return true;
}

NonholonomicSystem NonholonomicSystem::without_w_frame() const {
  NonholonomicSystem s = *this;
  s.w_frame_.clear();
  s.definition_["w_frame"] = nullptr;
  return s;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

class Loader {
 public:
  explicit Loader(const json& doc) : doc_(doc) {}

  std::vector<std::string> errors;

  void fail(const std::string& msg) { errors.push_back(msg); }

  const json* field(const char* key, bool required) {
    auto it = doc_.find(key);
    if (it == doc_.end() || it->is_null()) {
      if (required) fail(std::string("missing field '") + key + "'");
      return nullptr;
    }
    return &*it;
  }

  // Expression text from a string or number entry.
  std::optional<std::string> expr_text(const json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
      return std::string(buf);
    }
    fail(where + ": expected an expression string");
    return std::nullopt;
  }

  std::optional<CompiledExpr> compile(const json& v, const std::string& where,
                                      std::string* source_out) {
    auto text = expr_text(v, where);
    if (!text) return std::nullopt;
    if (source_out) *source_out = *text;
    try {
      Expr e = bind_parameters(parse(*text), param_names);
      bool ok = true;
      for (const auto& id : identifiers(e)) {
        if (!coord_set.contains(id) && !param_names.contains(id)) {
          fail(where + ": unknown name '" + id + "' in '" + *text + "'");
          ok = false;
        }
      }
      if (!ok) return std::nullopt;
      return CompiledExpr::compile(e, coords, params);
    } catch (const ParseError& err) {
      fail(where + ": " + err.what() + " in '" + *text + "'");
    } catch (const Error& err) {
      fail(where + ": " + err.what());
    }
    return std::nullopt;
  }

  // rows × cols grid of expressions; `normalized` receives the source strings.
  std::vector<std::vector<CompiledExpr>> grid(const json& v, const std::string& key,
                                              std::size_t rows, std::size_t cols, json& normalized) {
    std::vector<std::vector<CompiledExpr>> out;
    normalized = json::array();
    if (!v.is_array() || v.size() != rows) {
      fail(key + ": expected " + std::to_string(rows) + " rows");
      return out;
    }
    bool ok = true;
    for (std::size_t i = 0; i < rows; ++i) {
      const json& row = v[i];
      json nrow = json::array();
      if (!row.is_array() || row.size() != cols) {
        fail(key + "[" + std::to_string(i) + "]: expected " + std::to_string(cols) + " entries");
        ok = false;
        continue;
      }
      std::vector<CompiledExpr> r;
      for (std::size_t j = 0; j < cols; ++j) {
        std::string src;
        auto c = compile(row[j], key + "[" + std::to_string(i) + "][" + std::to_string(j) + "]", &src);
        nrow.push_back(src);
        if (c) {
          r.push_back(std::move(*c));
        } else {
          ok = false;
        }
      }
      normalized.push_back(std::move(nrow));
      out.push_back(std::move(r));
    }
    if (!ok) out.clear();
    return out;
  }

  const json& doc_;
  std::vector<std::string> coords;
  std::set<std::string> coord_set;
  std::map<std::string, double> params;
  std::set<std::string> param_names;
};

}  // namespace

NonholonomicSystem load_system(const json& doc, const LoadOptions& opts) {
  if (!doc.is_object()) throw LoadError({"system definition must be a JSON object"});
  Loader ld(doc);
  NonholonomicSystem sys;
  json def = json::object();

  if (const json* v = ld.field("name", true)) {
    if (v->is_string()) {
      sys.name_ = v->get<std::string>();
    } else {
      ld.fail("name: expected a string");
    }
  }
  def["name"] = sys.name_;

  static const std::set<std::string> known = {"name",   "coords",          "constraints_rank",
                                              "params", "metric",          "potential",
                                              "constraint_forms", "w_frame", "adapted",
                                              "domain", "d_frame",         "schema"};
  for (const auto& [key, _] : doc.items())
    if (!known.contains(key)) ld.fail("unknown field '" + key + "'");
  // Exported documents carry the output schema tag.
  if (const json* v = ld.field("schema", false)) {
    if (*v != "nhk/1") ld.fail("schema: expected \"nhk/1\"");
  }

  if (const json* v = ld.field("coords", true)) {
    if (!v->is_array() || v->empty()) {
      ld.fail("coords: expected a nonempty array of names");
    } else {
      for (const auto& c : *v) {
        if (!c.is_string() || !is_identifier(c.get<std::string>())) {
          ld.fail("coords: invalid coordinate name " + c.dump());
          continue;
        }
        const std::string name = c.get<std::string>();
        if (kFunctionNames.contains(name)) ld.fail("coords: '" + name + "' is a function name");
        if (!ld.coord_set.insert(name).second) ld.fail("coords: duplicate name '" + name + "'");
        ld.coords.push_back(name);
      }
    }
  }
  sys.coords_ = ld.coords;
  def["coords"] = ld.coords;
  const std::size_t n = ld.coords.size();

  if (const json* v = ld.field("params", false)) {
    if (!v->is_object()) {
      ld.fail("params: expected an object of numbers");
    } else {
      for (const auto& [key, val] : v->items()) {
        if (!is_identifier(key)) ld.fail("params: invalid name '" + key + "'");
        if (kFunctionNames.contains(key)) ld.fail("params: '" + key + "' is a function name");
        if (ld.coord_set.contains(key)) ld.fail("params: '" + key + "' is also a coordinate");
        if (!val.is_number()) {
          ld.fail("params." + key + ": expected a number");
          continue;
        }
        ld.params[key] = val.get<double>();
        ld.param_names.insert(key);
      }
    }
  }
  sys.params_ = ld.params;
  def["params"] = ld.params;

  std::size_t k = 0;
  bool k_ok = false;
  if (const json* v = ld.field("constraints_rank", true)) {
    if (!v->is_number_integer() || v->get<long long>() < 0) {
      ld.fail("constraints_rank: expected a non-negative integer");
    } else {
      k = static_cast<std::size_t>(v->get<long long>());
      if (n > 0 && k >= n) {
        ld.fail("constraints_rank: must be smaller than the number of coordinates");
      } else {
        k_ok = true;
      }
    }
  }
  def["constraints_rank"] = k;
  const bool dims_ok = k_ok && n > 0;
  const std::size_t m = dims_ok ? n - k : 0;

  if (dims_ok) {
    json norm;
    if (const json* v = ld.field("metric", true)) {
      auto g = ld.grid(*v, "metric", n, n, norm);
      for (auto& row : g)
        for (auto& e : row) sys.metric_.push_back(std::move(e));
      def["metric"] = norm;
    }
    if (const json* v = ld.field("potential", false)) {
      std::string src;
      if (auto c = ld.compile(*v, "potential", &src)) sys.potential_ = std::move(*c);
      def["potential"] = src;
    } else {
      sys.potential_ = CompiledExpr::compile(parse("0"), ld.coords, ld.params);
      def["potential"] = "0";
    }
    if (const json* v = ld.field("constraint_forms", k > 0)) {
      sys.constraints_ = ld.grid(*v, "constraint_forms", k, n, norm);
      def["constraint_forms"] = norm;
    } else {
      def["constraint_forms"] = json::array();
    }
    def["w_frame"] = nullptr;
    if (const json* v = ld.field("w_frame", false)) {
      sys.w_frame_ = ld.grid(*v, "w_frame", k, n, norm);
      def["w_frame"] = norm;
    }
    def["d_frame"] = nullptr;
    if (const json* v = ld.field("d_frame", false)) {
      if (!v->is_object() || !v->contains("names") || !v->contains("vectors")) {
        ld.fail("d_frame: expected {\"names\": [...], \"vectors\": [[...]]}");
      } else {
        const json& names = (*v)["names"];
        if (!names.is_array() || names.size() != m) {
          ld.fail("d_frame.names: expected " + std::to_string(m) + " names");
        } else {
          for (const auto& nm : names) {
            if (!nm.is_string() || !is_identifier(nm.get<std::string>())) {
              ld.fail("d_frame.names: invalid name " + nm.dump());
            } else {
              sys.frame_names_.push_back(nm.get<std::string>());
            }
          }
        }
        sys.d_frame_ = ld.grid((*v)["vectors"], "d_frame.vectors", m, n, norm);
        def["d_frame"] = {{"names", sys.frame_names_}, {"vectors", norm}};
      }
    }
    def["adapted"] = nullptr;
    if (const json* v = ld.field("adapted", false)) {
      const json* s = v->is_object() && v->contains("s_indices") ? &(*v)["s_indices"] : nullptr;
      if (!s || !s->is_array() || s->size() != k) {
        ld.fail("adapted.s_indices: expected " + std::to_string(k) + " coordinate indices");
      } else {
        std::set<std::size_t> seen;
        bool ok = true;
        for (const auto& idx : *s) {
          if (!idx.is_number_integer() || idx.get<long long>() < 0 ||
              static_cast<std::size_t>(idx.get<long long>()) >= n) {
            ld.fail("adapted.s_indices: index " + idx.dump() + " out of range");
            ok = false;
            continue;
          }
          const auto i = static_cast<std::size_t>(idx.get<long long>());
          if (!seen.insert(i).second) {
            ld.fail("adapted.s_indices: duplicate index " + std::to_string(i));
            ok = false;
          }
          sys.s_indices_.push_back(i);
        }
        if (ok) {
          sys.adapted_ = true;
          for (std::size_t i = 0; i < n; ++i)
            if (!seen.contains(i)) sys.r_indices_.push_back(i);
          def["adapted"] = {{"s_indices", sys.s_indices_}};
        }
      }
      if (sys.adapted_ && doc.contains("d_frame") && !doc["d_frame"].is_null()) {
        ld.fail("d_frame: not allowed for adapted systems, whose frame is fixed by the adapted coordinates");
      }
    }

    sys.domain_.assign(n, Interval{});
    json dom = json::object();
    if (const json* v = ld.field("domain", false)) {
      if (!v->is_object()) {
        ld.fail("domain: expected an object mapping coordinate names to [lo, hi]");
      } else {
        for (const auto& [key, val] : v->items()) {
          auto it = std::find(ld.coords.begin(), ld.coords.end(), key);
          if (it == ld.coords.end()) {
            ld.fail("domain: unknown coordinate '" + key + "'");
            continue;
          }
          auto bound = [&](const json& b, double inf) -> std::optional<double> {
            if (b.is_null()) return inf;
            if (b.is_number()) return b.get<double>();
            return std::nullopt;
          };
          if (!val.is_array() || val.size() != 2) {
            ld.fail("domain." + key + ": expected [lo, hi]");
            continue;
          }
          auto lo = bound(val[0], -std::numeric_limits<double>::infinity());
          auto hi = bound(val[1], std::numeric_limits<double>::infinity());
          if (!lo || !hi || !(*lo < *hi)) {
            ld.fail("domain." + key + ": expected numbers lo < hi");
            continue;
          }
          sys.domain_[static_cast<std::size_t>(it - ld.coords.begin())] = Interval{*lo, *hi};
          dom[key] = val;
        }
      }
    }
    def["domain"] = dom;
  }

  // Names of the frame, momenta and coframe.
  if (dims_ok) {
    if (sys.frame_names_.empty()) {
      if (sys.adapted_) {
        for (std::size_t r : sys.r_indices_) sys.frame_names_.push_back(ld.coords[r]);
      } else {
        for (std::size_t a = 0; a < m; ++a) sys.frame_names_.push_back("X" + std::to_string(a + 1));
      }
    }
    if (sys.frame_names_.size() == m) {
      for (const auto& f : sys.frame_names_) {
        sys.momentum_names_.push_back("ptilde_" + f);
        sys.coframe_names_.push_back(ld.coord_set.contains(f) ? f : "alpha_" + f);
      }
      std::set<std::string> all(ld.coords.begin(), ld.coords.end());
      for (const auto& p : sys.momentum_names_)
        if (!all.insert(p).second) ld.fail("momentum name '" + p + "' collides with a coordinate");
      std::set<std::string> fn(sys.frame_names_.begin(), sys.frame_names_.end());
      if (fn.size() != m) ld.fail("d_frame.names: duplicate names");
    }
  }

  if (ld.errors.empty() && opts.sample_checks) {
    Lcg rng(0x6e686b);
    for (std::size_t s = 0; s < opts.sample_count; ++s) {
      std::vector<double> q =
          s == 0 ? default_point(sys).q : sample_configuration(sys, rng);
      std::span<const double> qs(q);
      try {
        const Matrix<double> g = sys.metric(qs);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i + 1; j < n; ++j) {
            const double scale = std::max(1.0, std::abs(g(i, j)));
            if (std::abs(g(i, j) - g(j, i)) > kSymmetryTol * scale) {
              ld.fail("metric[" + std::to_string(i) + "][" + std::to_string(j) + "] and metric[" +
                      std::to_string(j) + "][" + std::to_string(i) + "] differ at q = " +
                      format_point(qs));
            }
          }
        }
      } catch (const SingularEvaluation&) {
      }
      if (sys.adapted_) {
        try {
          const Matrix<double> e = sys.constraints(qs);
          const double dev = max_deviation_from_identity(
              submatrix_columns(e, std::span<const std::size_t>(sys.s_indices_)));
          if (dev > kIdentityBlockTol) {
            ld.fail("adapted: constraint_forms restricted to s_indices is not the identity at q = " +
                    format_point(qs) + " (deviation " + std::to_string(dev) + ")");
          }
        } catch (const SingularEvaluation&) {
        }
      }
      if (!ld.errors.empty()) break;
    }
  }

  if (!ld.errors.empty()) throw LoadError(ld.errors);
  sys.definition_ = std::move(def);
  return sys;
}

NonholonomicSystem load_system_text(const std::string& json_text, const LoadOptions& opts) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw LoadError({std::string("invalid JSON: ") + err.what()});
  }
  return load_system(doc, opts);
}

NonholonomicSystem load_system_file(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError({"cannot open '" + path + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_system_text(ss.str(), opts);
}

// ---------------------------------------------------------------------------
// Points

std::vector<double> PointM::chart() const {
  std::vector<double> y = q;
  y.insert(y.end(), ptilde.begin(), ptilde.end());
  return y;
}

PointM default_point(const NonholonomicSystem& sys) {
  PointM p;
  for (const auto& iv : sys.domain()) p.q.push_back(iv.midpoint());
  p.ptilde.assign(sys.m(), 0.0);
  return p;
}

std::vector<double> sample_configuration(const NonholonomicSystem& sys, Lcg& rng) {
  std::vector<double> q(sys.n());
  for (std::size_t i = 0; i < sys.n(); ++i) {
    const Interval& iv = sys.domain()[i];
    if (iv.bounded()) {
      const double w = iv.hi - iv.lo;
      q[i] = rng.uniform(iv.lo + 0.05 * w, iv.hi - 0.05 * w);
    } else {
      q[i] = rng.uniform(-2.0, 2.0);
    }
  }
  return q;
}

PointM sample_point(const NonholonomicSystem& sys, Lcg& rng) {
  PointM p;
  p.q = sample_configuration(sys, rng);
  p.ptilde.resize(sys.m());
  for (double& v : p.ptilde) v = rng.uniform(-2.0, 2.0);
  return p;
}

// ---------------------------------------------------------------------------
// Frames

namespace detail {

void check_in_domain(const NonholonomicSystem& sys, std::span<const double> q) {
  if (q.size() != sys.n()) {
    throw ContractViolation("expected " + std::to_string(sys.n()) + " coordinates, got " +
                            std::to_string(q.size()));
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!sys.domain()[i].contains(q[i])) {
      throw DomainError("coordinate " + sys.coord_names()[i] + " = " + std::to_string(q[i]) +
                        " outside its domain");
    }
  }
}

template <class S>
Matrix<S> complement_frame(const NonholonomicSystem& sys, const Matrix<S>& kappa,
                           const Matrix<S>& eps, std::span<const S> q) {
  const std::size_t n = sys.n(), k = sys.k();
  if (sys.has_w_frame()) return sys.user_w_frame(q);
  Matrix<S> z(n, k);
  if (sys.is_adapted()) {
    for (std::size_t a = 0; a < k; ++a) z(sys.s_indices()[a], a) = S(1.0);
    return z;
  }
  const Matrix<S> kinv_et = solve(kappa, eps.transpose());
  const Matrix<S> gram = eps * kinv_et;
  return kinv_et * inverse(gram);
}

template <class S>
FrameData<S> build_frame(const NonholonomicSystem& sys, std::span<const S> q) {
  const std::size_t n = sys.n(), k = sys.k(), m = sys.m();
  std::vector<double> qv(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) qv[i] = value_of(q[i]);
  check_in_domain(sys, qv);

  FrameData<S> f;
  f.kappa = sys.metric(q);
  const Matrix<double> kv = values(f.kappa);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(kv(i, j) - kv(j, i)) > kSymmetryTol * std::max(1.0, std::abs(kv(i, j)))) {
        throw InvariantViolation("metric is not symmetric at q = " + format_point(qv));
      }
    }
  }
  const double lmin = min_eigenvalue(kv);
  if (!(lmin > kDefinitenessTol)) {
    throw InvariantViolation("metric is not positive definite at q = " + format_point(qv) +
                             " (smallest eigenvalue " + std::to_string(lmin) + ")");
  }

  f.eps = sys.constraints(q);
  const Matrix<double> ev = values(f.eps);
  if (k > 0) {
    const double smin = min_singular_value(ev);
    if (!(smin > kRankTol)) {
      throw DegenerateConstraint("constraint forms lose rank at q = " + format_point(qv) +
                                 " (smallest singular value " + std::to_string(smin) + ")");
    }
  }
  if (sys.is_adapted()) {
    const double dev =
        max_deviation_from_identity(submatrix_columns(ev, std::span<const std::size_t>(sys.s_indices())));
    if (dev > kIdentityBlockTol) {
      throw AdaptedMismatch("constraint forms are not of the form ds + A dr at q = " +
                            format_point(qv));
    }
  }

  if (sys.has_d_frame()) {
    f.X = sys.user_d_frame(q);
    if (max_abs(values(f.eps * f.X)) > kDualityTol) {
      throw InvariantViolation("d_frame vectors are not annihilated by the constraint forms at q = " +
                               format_point(qv));
    }
  } else if (sys.is_adapted()) {
    f.X = Matrix<S>(n, m);
    for (std::size_t al = 0; al < m; ++al) {
      const std::size_t r = sys.r_indices()[al];
      f.X(r, al) = S(1.0);
      for (std::size_t a = 0; a < k; ++a) f.X(sys.s_indices()[a], al) = -f.eps(a, r);
    }
  } else if (k == 0) {
    f.X = Matrix<S>::identity(n);
  } else {
    f.X = kernel_frame(f.eps);
  }

  f.Z = complement_frame(sys, f.kappa, f.eps, q);
  // Pairing errors scale with the size of the entries being paired.
  const double ez_scale = std::max(1.0, static_cast<double>(n) * max_abs(f.eps) * max_abs(f.Z));
  if (max_deviation_from_identity(values(f.eps * f.Z)) > kDualityTol * ez_scale) {
    throw InvariantViolation("complement frame does not satisfy eps(Z) = I at q = " + format_point(qv));
  }

  Matrix<S> xz(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t al = 0; al < m; ++al) xz(i, al) = f.X(i, al);
    for (std::size_t a = 0; a < k; ++a) xz(i, m + a) = f.Z(i, a);
  }
  Matrix<S> xz_inv;
  try {
    xz_inv = inverse(xz, 1e-12);
  } catch (const InternalInvariant&) {
    throw FrameSingularity("D-frame and complement do not span the tangent space at q = " +
                           format_point(qv) + "; supply frames explicitly");
  }
  f.chi = xz_inv.block(0, 0, m, n);
  const double chi_scale = std::max(1.0, static_cast<double>(n) * max_abs(f.chi) * max_abs(xz));
  if (max_deviation_from_identity(values(f.chi * f.X)) > kDualityTol * chi_scale ||
      max_abs(values(f.chi * f.Z)) > kDualityTol * chi_scale) {
    throw InternalInvariant("coframe duality failed at q = " + format_point(qv));
  }

  const Matrix<S> kx = f.kappa * f.X;
  const Matrix<S> kd = f.X.transpose() * kx;
  f.J = solve(kd, (f.Z.transpose() * kx).transpose()).transpose();
  return f;
}

template FrameData<double> build_frame(const NonholonomicSystem&, std::span<const double>);
template FrameData<Jet1> build_frame(const NonholonomicSystem&, std::span<const Jet1>);
template FrameData<Jet2> build_frame(const NonholonomicSystem&, std::span<const Jet2>);

}  // namespace detail

Matrix<double> pick_default_W(const NonholonomicSystem& sys, std::span<const double> q) {
  return detail::build_frame<double>(sys, q).Z;
}

FrameAtPoint frame_at(const NonholonomicSystem& sys, std::span<const double> q, int order) {
  if (order < 0 || order > 2) throw ContractViolation("frame_at: order must be 0, 1 or 2");
  detail::check_in_domain(sys, q);
  std::vector<Jet2> qj(q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    qj[i] = order == 0 ? Jet2(q[i]) : Jet2::variable(q[i], i, q.size());
  auto f = detail::build_frame<Jet2>(sys, std::span<const Jet2>(qj));
  if (order == 1) {
    // Second derivatives are not part of an order-1 request.
    auto drop = [](const Jet2& x) {
      return Jet2::from_parts(x.value(), std::vector<double>(x.grad().begin(), x.grad().end()));
    };
    for (auto* mat : {&f.kappa, &f.eps, &f.X, &f.Z, &f.chi, &f.J})
      *mat = map_entries<Jet2>(*mat, drop);
  }
  return FrameAtPoint{f.kappa, f.eps, f.X, f.Z, f.chi, f.J};
}

std::vector<double> embed(const NonholonomicSystem& sys, const PointM& p) {
  if (p.ptilde.size() != sys.m()) throw ContractViolation("embed: wrong number of momenta");
  const auto f = detail::build_frame<double>(sys, std::span<const double>(p.q));
  const std::vector<double> jp = f.J * p.ptilde;
  std::vector<double> out(sys.n(), 0.0);
  for (std::size_t i = 0; i < sys.n(); ++i) {
    for (std::size_t al = 0; al < sys.m(); ++al) out[i] += p.ptilde[al] * f.chi(al, i);
    for (std::size_t a = 0; a < sys.k(); ++a) out[i] += jp[a] * f.eps(a, i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase-space model

PhaseSpaceModel::PhaseSpaceModel(const NonholonomicSystem& sys, const PointM& p, int order,
                                 const std::optional<LiftShift>& lift)
    : sys_(&sys), point_(p), order_(order), dim_(sys.dim_M()) {
  if (order != 0 && order != 1) throw ContractViolation("PhaseSpaceModel: order must be 0 or 1");
  if (p.q.size() != sys.n() || p.ptilde.size() != sys.m()) {
    throw ContractViolation("point has " + std::to_string(p.q.size()) + "+" +
                            std::to_string(p.ptilde.size()) + " components, system expects " +
                            std::to_string(sys.n()) + "+" + std::to_string(sys.m()));
  }
  if (lift && (lift->rows() != sys.k() || lift->cols() != 2 * sys.m())) {
    throw ContractViolation("lift shift must be k x 2(n-k)");
  }
  if (order == 0) {
    assemble<Jet1>(lift);
  } else {
    assemble<Jet2>(lift);
  }
}

template <class S>
void PhaseSpaceModel::assemble(const std::optional<LiftShift>& lift) {
  const std::size_t n = sys_->n(), k = sys_->k(), m = sys_->m(), N = dim_;
  std::vector<S> y(N);
  for (std::size_t i = 0; i < n; ++i) y[i] = S::variable(point_.q[i], i, N);
  for (std::size_t a = 0; a < m; ++a) y[n + a] = S::variable(point_.ptilde[a], n + a, N);
  const std::span<const S> q(y.data(), n);
  const std::vector<S> pt(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());

  const detail::FrameData<S> f = detail::build_frame<S>(*sys_, q);
  frame_ = {values(f.kappa), values(f.eps), values(f.X), values(f.Z), values(f.chi), values(f.J)};

  const std::vector<S> jp = f.J * pt;
  std::vector<S> p(n, S(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t al = 0; al < m; ++al) p[i] += pt[al] * f.chi(al, i);
    for (std::size_t a = 0; a < k; ++a) p[i] += jp[a] * f.eps(a, i);
  }
  momenta_.resize(n);
  for (std::size_t i = 0; i < n; ++i) momenta_[i] = value_of(p[i]);

  // Second construction of the same covector: κ♭ of the D-vector whose
  // pairing with the frame is p̃.
  {
    const Matrix<double>& X = frame_.X;
    const Matrix<double> kd = X.transpose() * frame_.kappa * X;
    Matrix<double> rhs(m, 1);
    for (std::size_t a = 0; a < m; ++a) rhs(a, 0) = point_.ptilde[a];
    const Matrix<double> alt = frame_.kappa * X * solve(kd, rhs);
    double scale = 1.0, dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      scale = std::max(scale, std::abs(momenta_[i]));
      dev = std::max(dev, std::abs(alt(i, 0) - momenta_[i]));
    }
    // Both routes lose accuracy with the conditioning of the frame.
    scale *= std::max(1.0, static_cast<double>(n) * max_abs(frame_.chi) * max_abs(X));
    if (dev > kDualityTol * scale) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3g", dev);
      throw InternalInvariant(std::string("embedding constructions disagree by ") + buf);
    }
  }

  const std::vector<S> v = solve(f.kappa, [&] {
    Matrix<S> col(n, 1);
    for (std::size_t i = 0; i < n; ++i) col(i, 0) = p[i];
    return col;
  }()).column(0);
  S h = sys_->potential(q);
  for (std::size_t i = 0; i < n; ++i) h += 0.5 * (p[i] * v[i]);
  hamiltonian_ = value_of(h);
  dhamiltonian_.assign(N, 0.0);
  if (!h.is_constant())
    for (std::size_t l = 0; l < N; ++l) dhamiltonian_[l] = h.grad(l);

  // Ω_jl = [j<n] ∂_l p_j − [l<n] ∂_j p_l
  omega_ = Matrix<Jet1>(N, N);
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t l = j + 1; l < N; ++l) {
      lower_t<S> w(0.0);
      if (j < n) w += derivative(p[j], l);
      if (l < n) w -= derivative(p[l], j);
      omega_(j, l) = as_jet1(w);
      omega_(l, j) = -omega_(j, l);
    }
  }

  basis_c_ = Matrix<Jet1>(N, 2 * m);
  for (std::size_t al = 0; al < m; ++al) {
    for (std::size_t i = 0; i < n; ++i) basis_c_(i, al) = as_jet1(truncate(f.X(i, al)));
    basis_c_(n + al, m + al) = Jet1(1.0);
  }
  basis_w_ = Matrix<Jet1>(N, k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t i = 0; i < n; ++i) basis_w_(i, a) = as_jet1(truncate(f.Z(i, a)));
    if (lift) {
      for (std::size_t j = 0; j < 2 * m; ++j) {
        const double c = (*lift)(a, j);
        if (c == 0.0) continue;
        for (std::size_t r = 0; r < N; ++r) basis_w_(r, a) += c * basis_c_(r, j);
      }
    }
  }
  Matrix<double> b(N, N);
  for (std::size_t r = 0; r < N; ++r) {
    for (std::size_t j = 0; j < 2 * m; ++j) b(r, j) = basis_c_(r, j).value();
    for (std::size_t a = 0; a < k; ++a) b(r, 2 * m + a) = basis_w_(r, a).value();
  }
  basis_inv_ = inverse(b, 1e-12);
}

// ---------------------------------------------------------------------------
// Ω_M and the splitting

double TwoFormAtPoint::operator()(std::span<const double> u, std::span<const double> v) const {
  if (u.size() != mat.rows() || v.size() != mat.cols()) throw ContractViolation("two-form: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) s += u[i] * mat(i, j).value() * v[j];
  return s;
}

TwoFormAtPoint omega_M(const PhaseSpaceModel& model) {
  TwoFormAtPoint out;
  out.mat = model.omega();
  const Matrix<double> bc = values(model.basis_C());
  out.restricted = bc.transpose() * values(model.omega()) * bc;
  const double det = to_eigen(out.restricted).determinant();
  if (!(std::abs(det) > 1e-12)) {
    throw InvariantViolation("restriction of the 2-form to C is degenerate (det " +
                             std::to_string(det) + ")");
  }
  return out;
}

TwoFormAtPoint omega_M(const NonholonomicSystem& sys, const PointM& p, int order) {
  return omega_M(PhaseSpaceModel(sys, p, order));
}

SplittingAtPoint splitting_at(const PhaseSpaceModel& model) {
  const std::size_t N = model.dim(), m2 = model.basis_C().cols(), k = model.basis_W().cols();
  SplittingAtPoint s;
  s.dimM = N;
  s.C_basis = values(model.basis_C());
  s.W_basis = values(model.basis_W());
  const Matrix<double>& inv = model.basis_inverse();
  s.P_C = s.C_basis * inv.block(0, 0, m2, N);
  s.P_W = s.W_basis * inv.block(m2, 0, k, N);
  return s;
}

SplittingAtPoint splitting_at(const NonholonomicSystem& sys, const PointM& p,
                              const std::optional<LiftShift>& lift) {
  return splitting_at(PhaseSpaceModel(sys, p, 0, lift));
}

bool has_adapted_coframe(const NonholonomicSystem& sys) { return sys.has_d_frame() || sys.is_adapted(); }

Matrix<double> adapted_coframe(const NonholonomicSystem& sys, std::span<const double> q) {
  const std::size_t n = sys.n(), k = sys.k(), m = sys.m(), N = sys.dim_M();
  const auto f = detail::build_frame<double>(sys, q);
  Matrix<double> out(N, N);
  for (std::size_t al = 0; al < m; ++al) {
    if (sys.is_adapted()) {
      out(al, sys.r_indices()[al]) = 1.0;
    } else {
      for (std::size_t i = 0; i < n; ++i) out(al, i) = f.chi(al, i);
    }
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t i = 0; i < n; ++i) out(m + a, i) = f.eps(a, i);
  for (std::size_t al = 0; al < m; ++al) out(n + al, n + al) = 1.0;
  return out;
}

std::vector<std::string> adapted_coframe_names(const NonholonomicSystem& sys) {
  std::vector<std::string> names = sys.coframe_names();
  for (std::size_t a = 0; a < sys.k(); ++a) names.push_back("eps" + std::to_string(a + 1));
  names.insert(names.end(), sys.momentum_names().begin(), sys.momentum_names().end());
  return names;
}

std::vector<double> base_projection(const NonholonomicSystem& sys, std::span<const double> v) {
  if (v.size() != sys.dim_M()) throw ContractViolation("base_projection: expected a vector on M");
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(sys.n())};
}

std::vector<double> pullback(const NonholonomicSystem& sys, std::span<const double> base_covector) {
  if (base_covector.size() != sys.n()) throw ContractViolation("pullback: expected a covector on Q");
  std::vector<double> out(sys.dim_M(), 0.0);
  std::copy(base_covector.begin(), base_covector.end(), out.begin());
  return out;
}

template Matrix<double> detail::complement_frame(const NonholonomicSystem&, const Matrix<double>&,
                                                 const Matrix<double>&, std::span<const double>);

}  // namespace nhk
