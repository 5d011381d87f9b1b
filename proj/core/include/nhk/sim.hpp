#pragma once

// Fixed-step RK4 integration of X_nh on the chart (q, p̃).

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "nhk/manifold.hpp"

namespace nhk {

struct Trajectory {
  std::vector<double> times;
  std::vector<PointM> states;
  std::vector<double> energy;
  /// max_a |ε^a(Tτ X_nh)| at each recorded state.
  std::vector<double> constraint_residual;
  /// max |H − H(0)| / |H(0)| (absolute when H(0) = 0).
  double max_energy_drift = 0.0;
  double max_residual = 0.0;
  /// Set when a step would leave the coordinate domain; the trajectory
  /// stops at the last state inside.
  bool left_domain = false;
  std::string stop_reason;
};

/// `backward` integrates −X_nh.
Trajectory integrate(const NonholonomicSystem& sys, const PointM& init, double dt, std::size_t steps,
                     bool backward = false);

/// Header t,<coords>,<momenta>,energy,residual; 17 significant digits.
void write_csv(std::ostream& out, const NonholonomicSystem& sys, const Trajectory& traj);

}  // namespace nhk
