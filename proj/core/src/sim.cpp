#include "nhk/sim.hpp"

#include <cmath>
#include <cstdio>

#include "nhk/bracket.hpp"

namespace nhk {

namespace {

struct Evaluation {
  std::vector<double> rate;  // X_nh, chart components
  double energy = 0.0;
  double residual = 0.0;
};

Evaluation evaluate(const NonholonomicSystem& sys, const PointM& p, double sign) {
  const PhaseSpaceModel model(sys, p, 0);
  Evaluation e;
  e.rate = nh_vector_field(model, nh_bivector(model));
  for (double& v : e.rate) v *= sign;
  e.energy = model.hamiltonian();
  const Matrix<double>& eps = model.frame().eps;
  for (std::size_t a = 0; a < sys.k(); ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < sys.n(); ++i) s += eps(a, i) * e.rate[i];
    e.residual = std::max(e.residual, std::abs(s));
  }
  return e;
}

PointM advance(const PointM& p, const std::vector<double>& rate, double h) {
  PointM out = p;
  const std::size_t n = p.q.size();
  for (std::size_t i = 0; i < n; ++i) out.q[i] += h * rate[i];
  for (std::size_t a = 0; a < p.ptilde.size(); ++a) out.ptilde[a] += h * rate[n + a];
  return out;
}

}  // namespace

Trajectory integrate(const NonholonomicSystem& sys, const PointM& init, double dt, std::size_t steps,
                     bool backward) {
  if (!(dt > 0.0)) throw ContractViolation("integrate: dt must be positive");
  if (steps < 1) throw ContractViolation("integrate: steps must be at least 1");
  if (init.q.size() != sys.n() || init.ptilde.size() != sys.m()) {
    throw ContractViolation("integrate: initial state has the wrong size");
  }
  detail::check_in_domain(sys, init.q);
  const double sign = backward ? -1.0 : 1.0;

  Trajectory traj;
  auto record = [&](double t, const PointM& p, const Evaluation& e) {
    traj.times.push_back(t);
    traj.states.push_back(p);
    traj.energy.push_back(e.energy);
    traj.constraint_residual.push_back(e.residual);
    traj.max_residual = std::max(traj.max_residual, e.residual);
    const double h0 = traj.energy.front();
    const double drift = h0 != 0.0 ? std::abs(e.energy - h0) / std::abs(h0) : std::abs(e.energy - h0);
    traj.max_energy_drift = std::max(traj.max_energy_drift, drift);
  };

  PointM y = init;
  Evaluation ey = evaluate(sys, y, sign);
  record(0.0, y, ey);
  for (std::size_t step = 0; step < steps; ++step) {
    try {
      const Evaluation& k1 = ey;
      const Evaluation k2 = evaluate(sys, advance(y, k1.rate, 0.5 * dt), sign);
      const Evaluation k3 = evaluate(sys, advance(y, k2.rate, 0.5 * dt), sign);
      const Evaluation k4 = evaluate(sys, advance(y, k3.rate, dt), sign);
      std::vector<double> rate(k1.rate.size());
      for (std::size_t i = 0; i < rate.size(); ++i)
        rate[i] = (k1.rate[i] + 2.0 * k2.rate[i] + 2.0 * k3.rate[i] + k4.rate[i]) / 6.0;
      PointM next = advance(y, rate, dt);
      ey = evaluate(sys, next, sign);
      y = std::move(next);
    } catch (const DomainError& err) {
      traj.left_domain = true;
      traj.stop_reason = "step " + std::to_string(step + 1) + ": " + err.what();
      return traj;
    } catch (const FrameSingularity& err) {
      throw FrameSingularity("step " + std::to_string(step + 1) + ": " + err.what());
    } catch (const Error& err) {
      throw Error("step " + std::to_string(step + 1) + ": " + err.what());
    }
    record(static_cast<double>(step + 1) * dt, y, ey);
  }
  return traj;
}

void write_csv(std::ostream& out, const NonholonomicSystem& sys, const Trajectory& traj) {
  out << "t";
  for (const auto& c : sys.coord_names()) out << ',' << c;
  for (const auto& p : sys.momentum_names()) out << ',' << p;
  out << ",energy,residual\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    put(traj.times[i]);
    for (double v : traj.states[i].q) {
      out << ',';
      put(v);
    }
    for (double v : traj.states[i].ptilde) {
      out << ',';
      put(v);
    }
    out << ',';
    put(traj.energy[i]);
    out << ',';
    put(traj.constraint_residual[i]);
    out << '\n';
  }
}

}  // namespace nhk
