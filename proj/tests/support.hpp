// Desk-scale scenario used across the test suites. Mirrors the shipped
// scenario files; test_config has a sync check against desk_track.cfg.
#pragma once

#include <array>
#include <vector>

#include "emla/config.hpp"
#include "emla/optimizer.hpp"
#include "emla/sim.hpp"

namespace emla::testsupport {

inline PlantParams desk_plant() {
  PlantParams p;
  p.pole_pairs = 4;
  p.flux_linkage = 8.0 / 3.0;  // Kt = 16 N*m/A
  p.inductance_d = 0.010;
  p.inductance_q = 0.012;
  p.stator_resistance = 0.5;
  p.rotary_to_linear = 20.0;
  p.equivalent_inertia = 50.0;
  p.equivalent_viscosity = 200.0;
  p.equivalent_stiffness = 0.0;
  p.force_coefficient = 0.01;
  return p;
}

inline SafetyEnvelope desk_envelope() {
  SafetyEnvelope env;
  // rho3 must cover a full current-reference swing: the torque limits map
  // to |x_3d| <= 98/16, and a saturated command can step that far while
  // the measured current still sits near the opposite rail
  env.chi << 0.13, 0.40, 25.0, 5.0;
  env.lambda << 0.12, 0.25, 10.0, 1.0;  // rho = 0.01, 0.15, 15, 4
  return env;
}

inline ChannelLimits desk_limits() {
  ChannelLimits lim;
  lim.torque = {-98.0, 98.0};
  lim.voltage_q = {-400.0, 400.0};
  lim.voltage_d = {-400.0, 400.0};
  return lim;
}

inline ControllerGains desk_drs_gains() {
  ControllerGains g;
  g.beta << 11.2, 19.8, 4.75, 7.1;
  g.kappa << 98.0, 76.0, 24.0, 48.0;
  g.zeta << 0.002, 2.0, 1.0, 0.5;
  g.epsilon << 8.0, 1200.0, 24.0, 24.0;
  return g;
}

inline PidGains desk_pid_gains() { return default_pid_gains(); }

inline PiecewiseTrajectory hold_trajectory(double duration,
                                           double position = 0.0) {
  std::vector<WaypointCondition> wps = {
      {0.0, position, 0.0, 0.0},
      {duration, position, 0.0, 0.0},
  };
  return build_piecewise(wps);
}

/// Forward, stationary, backward, then forward again; 14 s total.
inline PiecewiseTrajectory track_trajectory() {
  std::vector<WaypointCondition> wps = {
      {0.0, 0.0, 0.0, 0.0},  {3.0, 0.08, 0.0, 0.0}, {5.0, 0.08, 0.0, 0.0},
      {8.0, 0.0, 0.0, 0.0},  {11.0, 0.08, 0.0, 0.0}, {14.0, 0.0, 0.0, 0.0},
  };
  return build_piecewise(wps);
}

inline Scenario desk_scenario_base() {
  Scenario sc;
  sc.plant = desk_plant();
  sc.envelope = desk_envelope();
  sc.limits = desk_limits();
  sc.drs_gains = desk_drs_gains();
  sc.pid_gains = desk_pid_gains();
  sc.controller = ControllerKind::drsblf;
  sc.control_rate = 1000.0;
  sc.plant_substeps = 4;
  sc.theta_init = 1.0;
  sc.policy = BarrierPolicy::abort_run;
  sc.convergence_band = 0.02;
  sc.seed = 1;
  return sc;
}

/// Rest hold with an initial position offset of half the error budget.
inline Scenario desk_hold_scenario(double duration = 5.0) {
  Scenario sc = desk_scenario_base();
  sc.trajectory = hold_trajectory(duration);
  sc.duration = duration;
  sc.initial_state.x << 0.005, 0.0, 0.0, 0.0;  // 0.5 * rho_1
  return sc;
}

/// Tracking cycle; optionally a mid-run step load at t = 6 s.
inline Scenario desk_track_scenario(bool with_load,
                                    double load_newtons = 800.0) {
  Scenario sc = desk_scenario_base();
  sc.trajectory = track_trajectory();
  sc.duration = 14.0;
  if (with_load) sc.load.force_table = {{0.0, 0.0}, {6.0, load_newtons}};
  return sc;
}

/// Comparison scenario: tracking cycle plus a step load, beating
/// mid-band pushes near loop crossover, and high-frequency content that
/// penalizes excessive loop stiffness. Mirrors desk_compare.cfg.
inline Scenario desk_compare_scenario() {
  Scenario sc = desk_track_scenario(true);
  sc.envelope.chi(1) = 0.31;  // rho2 = 0.06
  sc.load.disturbance[1] = {
      {DisturbanceSpec::Kind::sine, 0.5, 6.0, 0.0},
      {DisturbanceSpec::Kind::sine, 0.5, 7.3, 0.5},
      {DisturbanceSpec::Kind::sine, 6.0, 90.0, 0.7},
      {DisturbanceSpec::Kind::sine, 3.0, 320.0, 1.1},
  };
  // warm start that survives the disturbance set
  sc.drs_gains.epsilon << 400.0, 30000.0, 24.0, 24.0;
  sc.drs_gains.zeta << 0.001, 2.0, 1.0, 0.5;
  return sc;
}

/// Wide log-space search box for the comparison tuning; mirrors
/// desk_compare.cfg.
inline JayaConfig desk_compare_jaya_config(ControllerKind kind) {
  JayaConfig config;
  config.population = 15;
  config.generations = 100;
  config.seed = 21;
  config.retry_limit = 100;
  config.warm_start = true;
  if (kind == ControllerKind::drsblf) {
    config.bounds.lower = Eigen::ArrayXd(16);
    config.bounds.upper = Eigen::ArrayXd(16);
    // beta, kappa, zeta, epsilon
    config.bounds.lower << 0.05, 0.05, 0.05, 0.05, 0.1, 0.1, 0.1, 0.1, 1e-5,
        0.01, 1e-4, 1e-4, 0.5, 100, 1, 1;
    config.bounds.upper << 50, 50, 50, 50, 200, 200, 200, 200, 10, 5000, 100,
        100, 2000, 100000, 40, 40;
  } else {
    config.bounds.lower = Eigen::ArrayXd(7);
    config.bounds.upper = Eigen::ArrayXd(7);
    config.bounds.lower << 0.5, 100, 1, 1, 1, 1, 1;
    config.bounds.upper << 200, 20000, 50000, 20, 20000, 20, 20000;
  }
  return config;
}

/// Search box used by the tuning tests; mirrors desk_track.cfg.
inline JayaConfig desk_jaya_config(ControllerKind kind) {
  JayaConfig config;
  config.population = 15;
  config.generations = 25;
  config.seed = 7;
  config.retry_limit = 100;
  config.warm_start = true;
  if (kind == ControllerKind::drsblf) {
    config.bounds.lower = Eigen::ArrayXd(16);
    config.bounds.upper = Eigen::ArrayXd(16);
    // beta, kappa, zeta, epsilon
    config.bounds.lower << 0.5, 0.5, 0.5, 0.5, 1, 1, 1, 1, 1e-4, 0.01, 1e-3,
        1e-3, 0.5, 100, 1, 1;
    config.bounds.upper << 50, 50, 50, 50, 200, 200, 200, 200, 0.1, 20, 10,
        10, 50, 5000, 40, 40;
  } else {
    config.bounds.lower = Eigen::ArrayXd(7);
    config.bounds.upper = Eigen::ArrayXd(7);
    config.bounds.lower << 0.5, 100, 1, 1, 1, 1, 1;
    config.bounds.upper << 50, 5000, 20000, 20, 20000, 20, 20000;
  }
  return config;
}

}  // namespace emla::testsupport
