#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "emla/plant.hpp"
#include "emla/trajectory.hpp"

namespace emla {

/// Per-subsystem state bound chi_j split into a reference allowance
/// lambda_j and an error budget rho_j = chi_j - lambda_j. Subsystems are
/// 1-based in the API (position, velocity, q-current, d-current) and map
/// to indices 0..3 in the vectors.
struct SafetyEnvelope {
  Eigen::Vector4d chi = Eigen::Vector4d::Zero();     // state bound, |x_j| < chi_j
  Eigen::Vector4d lambda = Eigen::Vector4d::Zero();  // reference allowance

  double rho(int subsystem) const {
    return chi(subsystem - 1) - lambda(subsystem - 1);
  }
  void validate(std::vector<std::string>& problems) const;
};

/// The 16 tunable constants, four per subsystem.
struct ControllerGains {
  Eigen::Vector4d epsilon = Eigen::Vector4d::Zero();
  Eigen::Vector4d zeta = Eigen::Vector4d::Zero();
  Eigen::Vector4d beta = Eigen::Vector4d::Zero();
  Eigen::Vector4d kappa = Eigen::Vector4d::Zero();

  void validate(std::vector<std::string>& problems) const;
  /// Forward-Euler positivity margin per subsystem: beta*kappa*dt. The
  /// adaptation integrator keeps theta-hat positive regardless, so values
  /// >= 1 are reported as warnings, not errors.
  std::vector<std::string> discrete_positivity_report(double dt) const;
};

/// Saturation bounds for the three constrained channels.
struct ChannelLimits {
  SaturationLimits torque{-98.0, 98.0};     // N*m
  SaturationLimits voltage_q{-400.0, 400.0};  // V
  SaturationLimits voltage_d{-400.0, 400.0};  // V

  void validate(std::vector<std::string>& problems) const;
};

/// Adaptive gain estimates, strictly positive for all time, plus the last
/// virtual velocity command.
struct AdaptiveState {
  Eigen::Vector4d theta = Eigen::Vector4d::Ones();
  double last_virtual = 0.0;  // u1, m/s
};

enum class BarrierPolicy {
  abort_run,  // record the event and stop the run
  clamp,      // floor Q_j at 1e-9 * rho_j^2 and flag the sample
};

/// Sample flags shared by the controller and the trace records.
namespace flag {
inline constexpr std::uint32_t torque_saturated = 1u << 0;
inline constexpr std::uint32_t voltage_q_saturated = 1u << 1;
inline constexpr std::uint32_t voltage_d_saturated = 1u << 2;
inline constexpr std::uint32_t barrier_clamped = 1u << 3;
inline constexpr std::uint32_t barrier_violation = 1u << 4;
inline constexpr std::uint32_t trajectory_held = 1u << 5;
inline constexpr std::uint32_t envelope_exceeded = 1u << 6;
}  // namespace flag

/// Everything one controller invocation produces.
struct ControlOutput {
  Eigen::Vector4d tracking_error = Eigen::Vector4d::Zero();  // x_ej = x_j - x_jd
  Eigen::Vector4d barrier_error = Eigen::Vector4d::Zero();   // e_j
  Eigen::Vector4d phi = Eigen::Vector4d::Zero();
  Eigen::Vector4d barrier_margin = Eigen::Vector4d::Zero();  // log(rho^2/Q)
  double virtual_velocity = 0.0;  // u1, m/s
  double torque_raw = 0.0;        // u2 before saturation, N*m
  double torque = 0.0;            // Sat(u2)
  double voltage_q_raw = 0.0;     // u3, V
  double voltage_q = 0.0;
  double voltage_d_raw = 0.0;     // u4, V
  double voltage_d = 0.0;
  double ref_current_q = 0.0;  // x_3d, from the saturated torque command
  double ref_current_d = 0.0;  // x_4d, zero d-current target
  std::uint32_t flags = 0;
};

/// Tracking error pair for subsystem j: x_ej = x_j - x_jd always, and the
/// barrier error e_j, which for the velocity subsystem subtracts the
/// virtual control produced by the position subsystem.
inline std::pair<double, double> tracking_error(double x_j, double x_jd,
                                                int subsystem,
                                                double virtual_control) {
  const double xe = x_j - x_jd;
  return {xe, subsystem == 2 ? xe - virtual_control : xe};
}

struct BarrierSample {
  double phi = 0.0;  // e / Q
  double q = 0.0;    // rho^2 - e^2, > 0
};

/// Barrier transform; valid only inside |e| < rho.
inline BarrierSample barrier_phi(double e, double rho, int subsystem = 0) {
  const double q = rho * rho - e * e;
  if (!(std::abs(e) < rho) || !(q > 0.0))
    throw BarrierViolation(subsystem, e, rho);
  return {e / q, q};
}

/// u_j = -1/2 (epsilon_j e_j + zeta_j theta_j phi_j).
inline double control_law(double e, double phi, double theta_hat,
                          double epsilon, double zeta) {
  return -0.5 * (epsilon * e + zeta * theta_hat * phi);
}

/// One step of the adaptation law
///   theta' = -beta kappa theta + 1/2 zeta beta phi^2.
/// The linear decay is integrated exactly and the forcing term is
/// non-negative, so a positive theta stays positive for any step size.
/// The floor guards against the decay underflowing to exactly zero.
inline double adaptive_step(double theta_hat, double phi, double beta,
                            double kappa, double zeta, double dt) {
  const double next = theta_hat * std::exp(-beta * kappa * dt) +
                      0.5 * zeta * beta * phi * phi * dt;
  return std::max(next, std::numeric_limits<double>::min());
}

/// One control period of the barrier cascade: position -> virtual
/// velocity -> torque (saturated) -> q-current reference -> dq voltages
/// (saturated). The adaptive state advances once per subsystem; the
/// updated estimate feeds the same tick's control. Pure in its arguments.
std::pair<ControlOutput, AdaptiveState> drs_blf_step(
    const PlantState& state, double x1d, double x2d,
    const SafetyEnvelope& envelope, const ControllerGains& gains,
    const ChannelLimits& limits, double torque_constant,
    const AdaptiveState& adaptive, double dt, BarrierPolicy policy);

/// Cascade PID baseline: position P -> velocity PI -> current PI loops.
struct PidGains {
  double kp_pos = 0.0;  // 1/s
  double kp_vel = 0.0;  // N*m per m/s
  double ki_vel = 0.0;  // N*m per m
  double kp_iq = 0.0;   // V/A
  double ki_iq = 0.0;   // V/(A*s)
  double kp_id = 0.0;
  double ki_id = 0.0;

  void validate(std::vector<std::string>& problems) const;
};

struct PidState {
  double int_vel = 0.0;
  double int_iq = 0.0;
  double int_id = 0.0;
};

/// Integrators freeze on any step whose output saturates.
std::pair<ControlOutput, PidState> pid_step(const PlantState& state,
                                            double x1d, double x2d,
                                            const PidGains& gains,
                                            const ChannelLimits& limits,
                                            double torque_constant,
                                            const PidState& pid, double dt);

/// Pre-run reference screening against the envelope allowances.
struct EnvelopeReport {
  enum class Status { pass, violated, runtime_monitored };
  struct Entry {
    int subsystem = 0;
    Status status = Status::pass;
    double first_violation_time = 0.0;
    double worst_value = 0.0;
    double allowance = 0.0;
    std::string note;
  };
  std::vector<Entry> entries;

  bool all_verified_ok() const {
    for (const auto& e : entries)
      if (e.status == Status::violated) return false;
    return true;
  }
};

/// Checks |x_1d| <= lambda_1 over the sampled horizon, bounds the
/// q-current reference by the torque limits, and reports the velocity
/// subsystem as runtime-monitored unless a virtual-control bound is
/// supplied. A horizon <= 0 passes vacuously.
EnvelopeReport envelope_check(const PiecewiseTrajectory& trajectory,
                              const SafetyEnvelope& envelope, double horizon,
                              double sample_rate, const ChannelLimits& limits,
                              double torque_constant,
                              double virtual_bound = 0.0);

}  // namespace emla
