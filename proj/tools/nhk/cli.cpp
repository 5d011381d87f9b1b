#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nhk/errors.hpp"
#include "nhk/expr.hpp"
#include "nhk/jacobiator.hpp"
#include "nhk/sim.hpp"
#include "nhk/systems.hpp"

namespace nhk::cli {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kSchema = "nhk/1";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw UsageError(what + ": '" + text + "' is not a number");
  }
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

/// "a=1,b=2" in the order given; repeated names are rejected.
std::vector<std::pair<std::string, double>> parse_assignments(const std::string& text, const std::string& flag) {
  std::vector<std::pair<std::string, double>> out;
  if (text.empty()) return out;
  for (const std::string& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError(flag + ": expected name=value, got '" + item + "'");
    std::string name = item.substr(0, eq);
    for (const auto& [n, _] : out)
      if (n == name) throw UsageError(flag + ": '" + name + "' given twice");
    out.emplace_back(name, parse_number(item.substr(eq + 1), flag + " " + name));
  }
  return out;
}

struct SystemSource {
  std::string system;
  std::string file;
  std::string params;

  void add_to(CLI::App* cmd) {
    auto* s = cmd->add_option("--system", system, "builtin system name (see `nhk list`)");
    auto* f = cmd->add_option("--file", file, "system definition JSON file");
    s->excludes(f);
    cmd->add_option("--param", params, "parameter overrides for a builtin, name=value,...");
  }

  NonholonomicSystem load() const {
    if (system.empty() == file.empty()) throw UsageError("exactly one of --system or --file is required");
    if (!file.empty()) {
      if (!params.empty()) throw UsageError("--param applies to builtin systems only");
      return load_system_file(file);
    }
    ParamMap overrides;
    for (const auto& [k, v] : parse_assignments(params, "--param")) overrides[k] = v;
    const auto names = builtin_names();
    if (std::find(names.begin(), names.end(), system) == names.end()) {
      throw UsageError("unknown system '" + system + "'");
    }
    try {
      return builtin(system, overrides);
    } catch (const LookupError& e) {
      throw UsageError(e.what());
    }
  }
};

/// Domain midpoints and zero momenta, overridden by the given names.
PointM parse_point(const NonholonomicSystem& sys, const std::string& text, const std::string& flag) {
  PointM p = default_point(sys);
  const auto& coords = sys.coord_names();
  const auto& moms = sys.momentum_names();
  for (const auto& [name, value] : parse_assignments(text, flag)) {
    if (auto it = std::find(coords.begin(), coords.end(), name); it != coords.end()) {
      p.q[static_cast<std::size_t>(it - coords.begin())] = value;
    } else if (auto jt = std::find(moms.begin(), moms.end(), name); jt != moms.end()) {
      p.ptilde[static_cast<std::size_t>(jt - moms.begin())] = value;
    } else {
      throw UsageError(flag + ": '" + name + "' is not a coordinate or momentum of " + sys.name());
    }
  }
  return p;
}

ojson point_json(const NonholonomicSystem& sys, const PointM& p) {
  ojson o = ojson::object();
  for (std::size_t i = 0; i < sys.n(); ++i) o[sys.coord_names()[i]] = p.q[i];
  for (std::size_t a = 0; a < sys.m(); ++a) o[sys.momentum_names()[a]] = p.ptilde[a];
  return o;
}

void emit(std::ostream& out, const ojson& payload) { out << payload.dump(2) << '\n'; }

ojson header(const std::string& command) {
  ojson o;
  o["schema"] = kSchema;
  o["command"] = command;
  return o;
}

// ---------------------------------------------------------------------------

int cmd_list(std::ostream& out) {
  ojson o = header("list");
  ojson arr = ojson::array();
  for (const std::string& name : builtin_names()) {
    const NonholonomicSystem sys = builtin(name);
    ojson s;
    s["name"] = name;
    s["n"] = sys.n();
    s["k"] = sys.k();
    s["dim_M"] = sys.dim_M();
    s["coords"] = sys.coord_names();
    s["momenta"] = sys.momentum_names();
    ojson params = ojson::object();
    for (const auto& [k, v] : sys.params()) params[k] = v;
    s["params"] = params;
    s["adapted"] = sys.is_adapted();
    arr.push_back(s);
  }
  o["systems"] = arr;
  emit(out, o);
  return kOk;
}

int cmd_export(const std::string& name, const std::string& params, std::ostream& out) {
  ParamMap overrides;
  for (const auto& [k, v] : parse_assignments(params, "--param")) overrides[k] = v;
  const auto names = builtin_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw UsageError("unknown system '" + name + "'");
  }
  nlohmann::json def;
  try {
    def = builtin_definition(name, overrides);
  } catch (const LookupError& e) {
    throw UsageError(e.what());
  }
  ojson o;
  o["schema"] = kSchema;
  for (const char* key : {"name", "coords", "constraints_rank", "params", "metric", "potential",
                          "constraint_forms", "d_frame", "w_frame", "adapted", "domain"}) {
    if (def.contains(key)) o[key] = ojson::parse(def[key].dump());
  }
  emit(out, o);
  return kOk;
}

int cmd_verify(const SystemSource& src, std::size_t samples, std::uint64_t seed, double tol, bool values,
               std::ostream& out, std::ostream& err) {
  if (samples < 1) throw UsageError("--samples must be at least 1");
  if (!(tol > 0.0)) throw UsageError("--tol must be positive");
  const NonholonomicSystem sys = src.load();
  const JacobiatorReport report = cross_validate(sys, samples, seed, tol);
  ojson o = header("verify");
  const ojson body = ojson::parse(to_json(report, values).dump());
  for (const auto& [k, v] : body.items()) o[k] = v;
  emit(out, o);
  err << "verify " << sys.name() << ": " << (report.pass ? "PASS" : "FAIL") << ", "
      << report.points.size() - report.skipped.size() << "/" << samples << " points, max discrepancy "
      << report.max_abs_discrepancy << ", " << report.failure_count << " failures\n";
  return report.pass ? kOk : kVerificationFailed;
}

struct JacobiatorArgs {
  std::string point, triple, method = "all", basis = "chart";
};

int cmd_jacobiator(const SystemSource& src, const JacobiatorArgs& a, std::ostream& out, std::ostream& err) {
  const NonholonomicSystem sys = src.load();
  if (a.basis != "chart" && a.basis != "adapted") throw UsageError("--basis must be chart or adapted");
  if (a.basis == "adapted" && !has_adapted_coframe(sys)) {
    throw UsageError("--basis adapted needs an adapted system or one with user D and W frames");
  }
  std::vector<Method> methods;
  if (a.method == "all") {
    methods = {Method::brute, Method::global};
    if (sys.is_adapted()) methods.push_back(Method::km);
  } else if (auto m = method_from_string(a.method)) {
    if (*m == Method::km && !sys.is_adapted()) {
      throw UsageError("--method km needs a system with adapted coordinates");
    }
    methods = {*m};
  } else {
    throw UsageError("--method must be brute, global, km or all");
  }

  const PointM p = parse_point(sys, a.point, "--point");
  detail::check_in_domain(sys, p.q);

  const std::vector<std::string> names = a.basis == "chart" ? sys.chart_names() : adapted_coframe_names(sys);
  const std::vector<std::string> tri = split(a.triple, ',');
  if (tri.size() != 3) throw UsageError("--triple: expected three names separated by commas");
  const std::size_t N = sys.dim_M();
  Matrix<double> rows(N, N);
  if (a.basis == "chart") {
    for (std::size_t i = 0; i < N; ++i) rows(i, i) = 1.0;
  } else {
    rows = adapted_coframe(sys, p.q);
  }
  std::array<std::vector<double>, 3> cov;
  for (std::size_t t = 0; t < 3; ++t) {
    auto it = std::find(names.begin(), names.end(), tri[t]);
    if (it == names.end()) throw UsageError("--triple: '" + tri[t] + "' is not in the " + a.basis + " basis");
    const auto r = static_cast<std::size_t>(it - names.begin());
    cov[t].assign(N, 0.0);
    for (std::size_t j = 0; j < N; ++j) cov[t][j] = rows(r, j);
  }

  const PhaseSpaceModel model(sys, p, 1);
  const BivectorAtPoint pi = nh_bivector(model);
  ojson results = ojson::array();
  std::vector<double> vals;
  for (Method m : methods) {
    double v = 0.0;
    switch (m) {
      case Method::brute:
        v = jacobiator_tensor_brute(pi).contract(cov[0], cov[1], cov[2]);
        break;
      case Method::global:
        v = jacobiator_global(model, pi, curvature_at(model), cov[0], cov[1], cov[2]);
        break;
      case Method::km:
        v = jacobiator_tensor_km(sys, p).contract(cov[0], cov[1], cov[2]);
        break;
    }
    vals.push_back(v);
    ojson r;
    r["method"] = to_string(m);
    r["jacobiator"] = v;
    r["[pi,pi]"] = 2.0 * v;
    results.push_back(r);
  }
  double disc = 0.0;
  for (double v : vals) disc = std::max(disc, std::abs(v - vals.front()));

  ojson o = header("jacobiator");
  o["system"] = sys.name();
  o["basis"] = a.basis;
  o["point"] = point_json(sys, p);
  o["triple"] = tri;
  o["columns"] = {{"jacobiator", "{f,{g,h}} + {g,{h,f}} + {h,{f,g}}"}, {"[pi,pi]", "2 * jacobiator"}};
  o["results"] = results;
  o["max_abs_discrepancy"] = disc;
  emit(out, o);
  err << "jacobiator " << sys.name() << " (" << a.triple << "): " << vals.front() << '\n';
  return kOk;
}

struct SimulateArgs {
  std::string init, out_path, format = "json";
  double dt = 0.0;
  std::size_t steps = 0;
  bool backward = false;
};

int cmd_simulate(const SystemSource& src, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.format != "json" && a.format != "csv") throw UsageError("--format must be json or csv");
  if (!(a.dt > 0.0)) throw UsageError("--dt must be positive");
  if (a.steps < 1) throw UsageError("--steps must be at least 1");
  const NonholonomicSystem sys = src.load();
  const PointM init = parse_point(sys, a.init, "--init");
  const Trajectory traj = integrate(sys, init, a.dt, a.steps, a.backward);

  if (!a.out_path.empty()) {
    std::ofstream f(a.out_path);
    if (!f) throw Error("cannot open '" + a.out_path + "' for writing");
    write_csv(f, sys, traj);
  }
  if (a.format == "csv") {
    write_csv(out, sys, traj);
  } else {
    ojson o = header("simulate");
    o["system"] = sys.name();
    o["init"] = point_json(sys, init);
    o["dt"] = a.dt;
    o["steps"] = a.steps;
    o["backward"] = a.backward;
    o["steps_completed"] = traj.times.size() - 1;
    o["left_domain"] = traj.left_domain;
    if (traj.left_domain) o["stop_reason"] = traj.stop_reason;
    o["final"] = point_json(sys, traj.states.back());
    o["t_final"] = traj.times.back();
    o["energy_initial"] = traj.energy.front();
    o["energy_final"] = traj.energy.back();
    o["max_energy_drift"] = traj.max_energy_drift;
    o["max_residual"] = traj.max_residual;
    if (!a.out_path.empty()) o["csv"] = a.out_path;
    emit(out, o);
  }
  err << "simulate " << sys.name() << ": " << traj.times.size() - 1 << " steps, energy drift "
      << traj.max_energy_drift << ", max residual " << traj.max_residual
      << (traj.left_domain ? ", stopped at the domain boundary" : "") << '\n';
  return kOk;
}

int cmd_eval(const std::string& text, const std::string& at, const std::string& wrt, std::ostream& out) {
  const Expr e = parse(text);
  std::map<std::string, double> coords;
  for (const auto& [k, v] : parse_assignments(at, "--at")) coords[k] = v;
  std::vector<std::string> active;
  if (!wrt.empty()) {
    for (const std::string& name : split(wrt, ',')) {
      if (!coords.contains(name)) throw UsageError("--wrt: '" + name + "' has no value in --at");
      if (std::find(active.begin(), active.end(), name) != active.end()) {
        throw UsageError("--wrt: '" + name + "' given twice");
      }
      active.push_back(name);
    }
  }
  const Jet2 j = eval_jet(e, coords, {}, active);
  ojson o = header("eval");
  o["expr"] = to_string(e);
  o["at"] = ojson::parse(nlohmann::json(coords).dump());
  o["wrt"] = active;
  o["value"] = j.value();
  ojson grad = ojson::array();
  ojson hess = ojson::array();
  for (std::size_t i = 0; i < active.size(); ++i) {
    grad.push_back(j.grad(i));
    ojson row = ojson::array();
    for (std::size_t k = 0; k < active.size(); ++k) row.push_back(j.hess(i, k));
    hess.push_back(row);
  }
  o["grad"] = grad;
  o["hess"] = hess;
  emit(out, o);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonholonomic brackets, Jacobiators and dynamics", "nhk"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nhk 1.0.0");

  app.add_subcommand("list", "list builtin systems");

  auto* exp = app.add_subcommand("export", "print a builtin system definition");
  std::string export_name, export_params;
  exp->add_option("--system", export_name, "builtin system name")->required();
  exp->add_option("--param", export_params, "parameter overrides, name=value,...");

  auto* ver = app.add_subcommand("verify", "cross-validate the Jacobiator methods at sampled points");
  SystemSource ver_src;
  ver_src.add_to(ver);
  std::size_t samples = 100;
  std::uint64_t seed = 42;
  double tol = 1e-8;
  bool values = false;
  ver->add_option("--samples", samples, "number of sample points")->capture_default_str();
  ver->add_option("--seed", seed, "random seed")->capture_default_str();
  ver->add_option("--tol", tol, "agreement tolerance")->capture_default_str();
  ver->add_flag("--values", values, "include per-point values in the report");

  auto* jac = app.add_subcommand("jacobiator", "evaluate the Jacobiator on one covector triple");
  SystemSource jac_src;
  jac_src.add_to(jac);
  JacobiatorArgs ja;
  jac->add_option("--point", ja.point, "coordinates and momenta, name=value,...");
  jac->add_option("--triple", ja.triple, "three basis covector names, a,b,c")->required();
  jac->add_option("--method", ja.method, "brute, global, km or all")->capture_default_str();
  jac->add_option("--basis", ja.basis, "chart or adapted")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "integrate the nonholonomic dynamics with RK4");
  SystemSource sim_src;
  sim_src.add_to(sim);
  SimulateArgs sa;
  sim->add_option("--init", sa.init, "initial coordinates and momenta, name=value,...");
  sim->add_option("--dt", sa.dt, "time step")->required();
  sim->add_option("--steps", sa.steps, "number of steps")->required();
  sim->add_option("--out", sa.out_path, "write the trajectory CSV to this path");
  sim->add_option("--format", sa.format, "stdout format, json or csv")->capture_default_str();
  sim->add_flag("--backward", sa.backward, "integrate the negated vector field");

  auto* ev = app.add_subcommand("eval", "evaluate an expression with first and second derivatives");
  std::string expr_text, at, wrt;
  ev->add_option("--expr", expr_text, "expression")->required();
  ev->add_option("--at", at, "variable values, name=value,...");
  ev->add_option("--wrt", wrt, "differentiation variables, name,...");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kUsage;
  }

  try {
    if (app.got_subcommand("list")) return cmd_list(out);
    if (app.got_subcommand("export")) return cmd_export(export_name, export_params, out);
    if (app.got_subcommand("verify")) return cmd_verify(ver_src, samples, seed, tol, values, out, err);
    if (app.got_subcommand("jacobiator")) return cmd_jacobiator(jac_src, ja, out, err);
    if (app.got_subcommand("simulate")) return cmd_simulate(sim_src, sa, out, err);
    if (app.got_subcommand("eval")) return cmd_eval(expr_text, at, wrt, out);
  } catch (const UsageError& e) {
    const auto subs = app.get_subcommands();
    err << "nhk: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
    return kUsage;
  } catch (const ParseError& e) {
    err << "nhk: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "nhk: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    err << "nhk: internal error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace nhk::cli
