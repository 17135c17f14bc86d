#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emla/controller.hpp"
#include "emla/plant.hpp"
#include "emla/trajectory.hpp"

namespace emla {

enum class ControllerKind { drsblf, pid };

/// Everything one closed-loop run needs. Immutable during the run; safe
/// to share across concurrent runs.
struct Scenario {
  PlantParams plant;
  PiecewiseTrajectory trajectory;
  LoadProfile load;
  ControllerKind controller = ControllerKind::drsblf;
  ControllerGains drs_gains;
  PidGains pid_gains;
  SafetyEnvelope envelope;
  ChannelLimits limits;
  double duration = 0.0;       // s
  double control_rate = 1000.0;  // Hz
  int plant_substeps = 4;      // physics substeps per control period
  PlantState initial_state;
  double theta_init = 1.0;  // initial adaptive estimates, > 0
  BarrierPolicy policy = BarrierPolicy::abort_run;
  double convergence_band = 0.02;  // fraction of peak reference amplitude
  std::uint64_t seed = 0;

  double control_period() const { return 1.0 / control_rate; }
  void validate(std::vector<std::string>& problems) const;
};

/// One control-rate sample of the closed loop.
struct TraceRecord {
  double t = 0.0;
  Eigen::Vector4d x = Eigen::Vector4d::Zero();    // plant state
  Eigen::Vector4d ref = Eigen::Vector4d::Zero();  // x_jd
  Eigen::Vector4d xe = Eigen::Vector4d::Zero();   // x_j - x_jd
  Eigen::Vector4d e = Eigen::Vector4d::Zero();    // barrier errors
  Eigen::Vector4d theta = Eigen::Vector4d::Zero();
  Eigen::Vector4d barrier_margin = Eigen::Vector4d::Zero();
  double u1 = 0.0;
  double u2_raw = 0.0, u2 = 0.0;
  double u3_raw = 0.0, u3 = 0.0;
  double u4_raw = 0.0, u4 = 0.0;
  double load_force = 0.0;
  std::uint32_t flags = 0;
};

struct SimulationTrace {
  std::vector<TraceRecord> records;
  double control_rate = 0.0;

  bool empty() const { return records.empty(); }
  double duration() const { return records.empty() ? 0.0 : records.back().t; }
};

enum class RunOutcome { completed, barrier_violation, numeric_failure };

struct RunResult {
  SimulationTrace trace;
  RunOutcome outcome = RunOutcome::completed;
  int violation_subsystem = 0;  // 1-based, when the outcome names one
  double stop_time = 0.0;       // last simulated time
  std::string message;

  bool completed() const { return outcome == RunOutcome::completed; }
};

/// Classical fourth-order Runge-Kutta step with the control inputs held
/// across the step; f(t, y) -> dy/dt.
template <class Vec, class Deriv>
Vec rk4_step(Deriv&& f, double t, const Vec& y, double dt) {
  const Vec k1 = f(t, y);
  const Vec k2 = f(t + 0.5 * dt, Vec(y + 0.5 * dt * k1));
  const Vec k3 = f(t + 0.5 * dt, Vec(y + 0.5 * dt * k2));
  const Vec k4 = f(t + dt, Vec(y + dt * k3));
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Fixed-step closed-loop run: sample references, step the controller,
/// hold the saturated voltages, integrate the plant through the physics
/// substeps, record. Deterministic for a given scenario.
RunResult run(const Scenario& scenario);

/// Table-style summary of one run.
struct Metrics {
  double position_rms = 0.0;       // m
  double position_max = 0.0;       // m
  double velocity_rms = 0.0;       // m/s
  double velocity_max = 0.0;       // m/s
  double torque_rms = 0.0;         // N*m, saturated command over the run
  double convergence_time = 0.0;   // s; +inf if the band is never held
  bool converged = false;
  long violation_count = 0;        // barrier or envelope flagged samples
  double band = 0.0;               // absolute position band used, m
};

/// Error statistics over the post-convergence window (whole trace when
/// the band is never held); torque effort over the whole run.
Metrics compute_metrics(const SimulationTrace& trace, double band_fraction);

/// Per-sample safety audit of a finished trace.
struct InvariantReport {
  bool pass = true;
  std::string first_failure;  // subsystem, time, values
  long checked_samples = 0;
  long clamped_samples = 0;  // excluded from the |e| < rho assertion
};

InvariantReport check_trace_invariants(const SimulationTrace& trace,
                                       const SafetyEnvelope& envelope,
                                       const ChannelLimits& limits);

/// Fixed-column CSV with shortest round-trip decimal formatting.
void write_trace_csv(std::ostream& os, const SimulationTrace& trace);

std::string format_metrics_table(const Metrics& m);
std::string format_metrics_kv(const Metrics& m);

/// Discrete tracking-error norm over the whole trace: the root of the
/// summed squared position and velocity tracking errors.
double tracking_error_norm(const SimulationTrace& trace);

}  // namespace emla
