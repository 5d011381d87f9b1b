#include "nhk/jacobiator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace nhk {

const char* to_string(Method m) {
  switch (m) {
    case Method::brute:
      return "brute";
    case Method::global:
      return "global";
    case Method::km:
      return "km";
  }
  return "?";
}

std::optional<Method> method_from_string(const std::string& s) {
  if (s == "brute") return Method::brute;
  if (s == "global") return Method::global;
  if (s == "km") return Method::km;
  return std::nullopt;
}

double Trivector::contract(std::span<const double> alpha, std::span<const double> beta,
                           std::span<const double> gamma) const {
  if (alpha.size() != dim_ || beta.size() != dim_ || gamma.size() != dim_) {
    throw ContractViolation("trivector: covector has the wrong length");
  }
  double s = 0.0;
  for (std::size_t a = 0; a < dim_; ++a) {
    if (alpha[a] == 0.0) continue;
    for (std::size_t b = 0; b < dim_; ++b) {
      if (beta[b] == 0.0) continue;
      for (std::size_t c = 0; c < dim_; ++c) s += alpha[a] * beta[b] * gamma[c] * (*this)(a, b, c);
    }
  }
  return s;
}

double Trivector::antisymmetry_defect() const {
  double d = 0.0;
  for (std::size_t a = 0; a < dim_; ++a)
    for (std::size_t b = 0; b < dim_; ++b)
      for (std::size_t c = 0; c < dim_; ++c) {
        const double t = (*this)(a, b, c);
        d = std::max({d, std::abs(t + (*this)(b, a, c)), std::abs(t + (*this)(a, c, b))});
      }
  return d;
}

Trivector jacobiator_tensor_brute(const BivectorAtPoint& pi) {
  const std::size_t N = pi.dim();
  // dP[(b*N + c)*N + l] = ∂_l π(dy^b, dy^c)
  std::vector<double> dp(N * N * N, 0.0);
  for (std::size_t b = 0; b < N; ++b)
    for (std::size_t c = 0; c < N; ++c) {
      const Jet1& e = pi.entry_jet(b, c);
      if (e.is_constant()) continue;
      for (std::size_t l = 0; l < N; ++l) dp[(b * N + c) * N + l] = e.grad(l);
    }
  auto outer = [&](std::size_t f, std::size_t g, std::size_t h) {
    double s = 0.0;
    for (std::size_t l = 0; l < N; ++l) s += pi.entry(f, l) * dp[(g * N + h) * N + l];
    return s;
  };
  Trivector t(N);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b)
      for (std::size_t c = 0; c < N; ++c) t(a, b, c) = outer(a, b, c) + outer(b, c, a) + outer(c, a, b);
  return t;
}

namespace {

// Ω(K(u,v), w) − γ(K(u,v)) for u = π♯α, v = π♯β, w = π♯γ.
double global_term(const Matrix<double>& omega, const std::vector<double>& kuv,
                   std::span<const double> w, std::span<const double> gamma) {
  double s = 0.0;
  const std::size_t N = kuv.size();
  for (std::size_t i = 0; i < N; ++i) {
    if (kuv[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < N; ++j) row += omega(i, j) * w[j];
    s += kuv[i] * (row - gamma[i]);
  }
  return s;
}

}  // namespace

Trivector jacobiator_tensor_global(const PhaseSpaceModel& model, const BivectorAtPoint& pi,
                                   const CurvatureAtPoint& k) {
  const std::size_t N = model.dim();
  const Matrix<double> omega = values(model.omega());
  std::vector<std::vector<double>> u(N);
  for (std::size_t a = 0; a < N; ++a) {
    u[a].resize(N);
    for (std::size_t i = 0; i < N; ++i) u[a][i] = pi.sharp(i, a).value();
  }
  std::vector<std::vector<double>> kk(N * N);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) kk[a * N + b] = k.apply(u[a], u[b]);

  // term(a, b, c) = Ω(K(u_a, u_b), u_c) − K(u_a, u_b)^c
  auto term = [&](std::size_t a, std::size_t b, std::size_t c) {
    const auto& kab = kk[a * N + b];
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (kab[i] == 0.0) continue;
      double row = 0.0;
      for (std::size_t j = 0; j < N; ++j) row += omega(i, j) * u[c][j];
      s += kab[i] * row;
    }
    return s - kab[c];
  };
  Trivector t(N);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b)
      for (std::size_t c = 0; c < N; ++c) t(a, b, c) = term(a, b, c) + term(b, c, a) + term(c, a, b);
  return t;
}

double jacobiator_global(const PhaseSpaceModel& model, const BivectorAtPoint& pi,
                         const CurvatureAtPoint& k, std::span<const double> alpha,
                         std::span<const double> beta, std::span<const double> gamma) {
  const Matrix<double> omega = values(model.omega());
  const std::vector<double> ua = pi.apply(alpha), ub = pi.apply(beta), uc = pi.apply(gamma);
  return global_term(omega, k.apply(ua, ub), uc, gamma) + global_term(omega, k.apply(ub, uc), ua, alpha) +
         global_term(omega, k.apply(uc, ua), ub, beta);
}

Trivector jacobiator_tensor_km(const NonholonomicSystem& sys, const PointM& p) {
  const AdaptedData d = adapted_data(sys, p.q);
  const std::size_t n = sys.n(), k = sys.k(), m = sys.m(), N = sys.dim_M();
  const auto& r_idx = sys.r_indices();
  const auto& s_idx = sys.s_indices();
  const std::vector<double>& pt = p.ptilde;

  auto J = [&](std::size_t a, std::size_t tau) { return d.J(a, tau).value(); };
  auto A = [&](std::size_t a, std::size_t al) { return d.A(a, al).value(); };
  auto K = [&](std::size_t a, std::size_t al, std::size_t be) { return d.K(a, al, be); };

  // Line (p̃_γ, r^α, p̃_β): J_b^α K^b_{βγ}
  auto line_r = [&](std::size_t gam, std::size_t al, std::size_t be) {
    double s = 0.0;
    for (std::size_t b = 0; b < k; ++b) s += J(b, al) * K(b, be, gam);
    return s;
  };
  // Line (p̃_β, s^a, p̃_α): −K^a_{αβ} − A^a_γ J_b^γ K^b_{αβ}
  auto line_s = [&](std::size_t be, std::size_t a, std::size_t al) {
    double s = -K(a, al, be);
    for (std::size_t gam = 0; gam < m; ++gam)
      for (std::size_t b = 0; b < k; ++b) s -= A(a, gam) * J(b, gam) * K(b, al, be);
    return s;
  };
  // One cyclic term of the (p̃, p̃, p̃) line.
  auto e3 = [&](std::size_t al, std::size_t be, std::size_t gam) {
    double s = 0.0;
    for (std::size_t tau = 0; tau < m; ++tau) {
      double c = 0.0;
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) c += J(a, tau) * d.A(a, gam).grad(s_idx[b]) * K(b, al, be);
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t de = 0; de < m; ++de)
          for (std::size_t b = 0; b < k; ++b) c += J(a, tau) * K(a, de, gam) * J(b, de) * K(b, al, be);
      for (std::size_t b = 0; b < k; ++b) {
        double dj = d.J(b, tau).grad(r_idx[gam]);
        for (std::size_t a = 0; a < k; ++a) dj -= A(a, gam) * d.J(b, tau).grad(s_idx[a]);
        c -= K(b, al, be) * dj;
      }
      s += pt[tau] * c;
    }
    return s;
  };

  enum class Kind { r, s, p };
  auto classify = [&](std::size_t i, std::size_t& local) {
    if (i >= n) {
      local = i - n;
      return Kind::p;
    }
    for (std::size_t al = 0; al < m; ++al)
      if (r_idx[al] == i) {
        local = al;
        return Kind::r;
      }
    for (std::size_t a = 0; a < k; ++a)
      if (s_idx[a] == i) {
        local = a;
        return Kind::s;
      }
    throw InternalInvariant("coordinate index is neither r nor s");
  };

  Trivector t(N);
  for (std::size_t x = 0; x < N; ++x)
    for (std::size_t y = 0; y < N; ++y)
      for (std::size_t z = 0; z < N; ++z) {
        std::array<std::size_t, 3> idx{x, y, z}, loc{};
        std::array<Kind, 3> kind{};
        int np = 0;
        for (int i = 0; i < 3; ++i) {
          kind[i] = classify(idx[i], loc[i]);
          np += kind[i] == Kind::p;
        }
        double v = 0.0;
        if (np == 3) {
          v = e3(loc[0], loc[1], loc[2]) + e3(loc[1], loc[2], loc[0]) + e3(loc[2], loc[0], loc[1]);
        } else if (np == 2) {
          // Bring the base entry to the middle slot: (p̃, base, p̃).
          int base = kind[0] != Kind::p ? 0 : kind[1] != Kind::p ? 1 : 2;
          double sign = 1.0;
          if (base != 1) {
            std::swap(loc[base], loc[1]);
            std::swap(kind[base], kind[1]);
            sign = -1.0;
          }
          v = sign * (kind[1] == Kind::r ? line_r(loc[0], loc[1], loc[2]) : line_s(loc[0], loc[1], loc[2]));
        }
        t(x, y, z) = v;
      }
  return t;
}

double jacobiator_bruteforce(const NonholonomicSystem& sys, const PointM& p, const Triple& triple) {
  const PhaseSpaceModel model(sys, p, 1);
  for (std::size_t i : triple)
    if (i >= model.dim()) throw ContractViolation("triple index out of range");
  return jacobiator_tensor_brute(nh_bivector(model))(triple[0], triple[1], triple[2]);
}

double jacobiator_global(const NonholonomicSystem& sys, const PointM& p, std::span<const double> alpha,
                         std::span<const double> beta, std::span<const double> gamma,
                         const std::optional<LiftShift>& lift) {
  const PhaseSpaceModel model(sys, p, 1, lift);
  for (auto c : {alpha, beta, gamma})
    if (c.size() != model.dim()) throw ContractViolation("covector has the wrong length");
  return jacobiator_global(model, nh_bivector(model), curvature_at(model), alpha, beta, gamma);
}

double jacobiator_km(const NonholonomicSystem& sys, const PointM& p, const Triple& triple) {
  for (std::size_t i : triple)
    if (i >= sys.dim_M()) throw ContractViolation("triple index out of range");
  return jacobiator_tensor_km(sys, p)(triple[0], triple[1], triple[2]);
}

// ---------------------------------------------------------------------------
// Cross-validation

unsigned default_threads() {
  if (const char* env = std::getenv("NHK_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace {

struct PointResult {
  bool ok = false;
  std::string reason;
  std::vector<std::vector<double>> values;  // [triple][method]
  double antisymmetry = 0.0;
};

PointResult evaluate_point(const NonholonomicSystem& sys, const PointM& p,
                           const std::vector<Triple>& triples, const std::vector<Method>& methods) {
  PointResult r;
  try {
    const PhaseSpaceModel model(sys, p, 1);
    const BivectorAtPoint pi = nh_bivector(model);
    std::vector<Trivector> tensors;
    for (Method m : methods) {
      switch (m) {
        case Method::brute:
          tensors.push_back(jacobiator_tensor_brute(pi));
          break;
        case Method::global:
          tensors.push_back(jacobiator_tensor_global(model, pi, curvature_at(model)));
          break;
        case Method::km:
          tensors.push_back(jacobiator_tensor_km(sys, p));
          break;
      }
    }
    for (const auto& t : tensors) r.antisymmetry = std::max(r.antisymmetry, t.antisymmetry_defect());
    r.values.resize(triples.size());
    for (std::size_t i = 0; i < triples.size(); ++i) {
      const auto& [a, b, c] = triples[i];
      for (const auto& t : tensors) r.values[i].push_back(t(a, b, c));
    }
    r.ok = true;
  } catch (const std::exception& err) {
    r.reason = err.what();
  }
  return r;
}

}  // namespace

JacobiatorReport cross_validate(const NonholonomicSystem& sys, std::size_t samples, std::uint64_t seed,
                                double tol, unsigned threads) {
  if (samples < 1) throw ContractViolation("cross_validate: samples must be at least 1");
  if (!(tol > 0.0)) throw ContractViolation("cross_validate: tol must be positive");

  JacobiatorReport rep;
  rep.system = sys.name();
  rep.seed = seed;
  rep.samples = samples;
  rep.tol = tol;
  rep.methods = {Method::brute, Method::global};
  if (sys.is_adapted()) rep.methods.push_back(Method::km);
  rep.chart_names = sys.chart_names();
  const std::size_t N = sys.dim_M();
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = a + 1; b < N; ++b)
      for (std::size_t c = b + 1; c < N; ++c) rep.triples.push_back({a, b, c});

  Lcg rng(seed);
  for (std::size_t i = 0; i < samples; ++i) rep.points.push_back(sample_point(sys, rng));

  std::vector<PointResult> results(samples);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(samples)));
  if (threads == 0 || workers == 1) {
    for (std::size_t i = 0; i < samples; ++i)
      results[i] = evaluate_point(sys, rep.points[i], rep.triples, rep.methods);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < samples; i = next++)
          results[i] = evaluate_point(sys, rep.points[i], rep.triples, rep.methods);
      });
    }
    for (auto& t : pool) t.join();
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t evaluated = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    PointResult& r = results[i];
    if (!r.ok) {
      rep.skipped.push_back({i, r.reason});
      rep.values.emplace_back(rep.triples.size(), std::vector<double>(rep.methods.size(), nan));
      continue;
    }
    ++evaluated;
    rep.max_antisymmetry_defect = std::max(rep.max_antisymmetry_defect, r.antisymmetry);
    for (std::size_t t = 0; t < rep.triples.size(); ++t) {
      const auto& v = r.values[t];
      for (std::size_t m = 1; m < rep.methods.size(); ++m) {
        const double delta = std::abs(v[m] - v[0]);
        rep.max_abs_discrepancy = std::max(rep.max_abs_discrepancy, delta);
        if (!(delta < tol)) {
          ++rep.failure_count;
          if (rep.failures.size() < JacobiatorReport::kMaxFailureRows)
            rep.failures.push_back({i, rep.triples[t], rep.methods[0], rep.methods[m], delta});
        }
      }
    }
    rep.values.push_back(std::move(r.values));
  }
  rep.pass = evaluated > 0 && rep.failure_count == 0 && rep.max_antisymmetry_defect <= kAntisymmetryTol;
  return rep;
}

nlohmann::json to_json(const JacobiatorReport& r, bool include_values) {
  using nlohmann::json;
  json methods = json::array();
  for (Method m : r.methods) methods.push_back(to_string(m));
  auto triple_names = [&](const Triple& t) {
    return json::array({r.chart_names[t[0]], r.chart_names[t[1]], r.chart_names[t[2]]});
  };
  json failures = json::array();
  for (const auto& f : r.failures) {
    failures.push_back({{"point", f.point},
                        {"triple", triple_names(f.triple)},
                        {"method_a", to_string(f.method_a)},
                        {"method_b", to_string(f.method_b)},
                        {"delta", f.delta}});
  }
  json skipped = json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"point", s.point}, {"reason", s.reason}});
  json out = {{"system", r.system},
              {"seed", r.seed},
              {"samples", r.samples},
              {"tol", r.tol},
              {"methods", methods},
              {"triples_per_point", r.triples.size()},
              {"max_abs_discrepancy", r.max_abs_discrepancy},
              {"max_antisymmetry_defect", r.max_antisymmetry_defect},
              {"failure_count", r.failure_count},
              {"pass", r.pass},
              {"failures", failures},
              {"skipped", skipped}};
  if (include_values) {
    json pts = json::array();
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      json vals = json::array();
      for (std::size_t t = 0; t < r.triples.size(); ++t) {
        json row = {{"triple", triple_names(r.triples[t])}};
        for (std::size_t m = 0; m < r.methods.size(); ++m) {
          const double v = r.values[i][t][m];
          row[to_string(r.methods[m])] = std::isnan(v) ? json(nullptr) : json(v);
        }
        vals.push_back(std::move(row));
      }
      pts.push_back({{"q", r.points[i].q}, {"ptilde", r.points[i].ptilde}, {"values", vals}});
    }
    out["points"] = pts;
  }
  return out;
}

}  // namespace nhk
