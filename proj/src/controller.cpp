#include "emla/controller.hpp"

#include <cmath>

namespace emla {

void SafetyEnvelope::validate(std::vector<std::string>& problems) const {
  for (int j = 1; j <= 4; ++j) {
    const double c = chi(j - 1), l = lambda(j - 1);
    if (!(l > 0.0) || !std::isfinite(l))
      problems.push_back("[envelope] lambda" + std::to_string(j) +
                         " must be strictly positive");
    if (!(c > l) || !std::isfinite(c))
      problems.push_back("[envelope] chi" + std::to_string(j) +
                         " must exceed lambda" + std::to_string(j));
  }
}

void ControllerGains::validate(std::vector<std::string>& problems) const {
  auto check = [&](const Eigen::Vector4d& v, const char* name) {
    for (int j = 0; j < 4; ++j)
      if (!(v(j) > 0.0) || !std::isfinite(v(j)))
        problems.push_back(std::string("[gains.drsblf] ") + name +
                           std::to_string(j + 1) +
                           " must be strictly positive");
  };
  check(epsilon, "epsilon");
  check(zeta, "zeta");
  check(beta, "beta");
  check(kappa, "kappa");
}

std::vector<std::string> ControllerGains::discrete_positivity_report(
    double dt) const {
  std::vector<std::string> warnings;
  for (int j = 0; j < 4; ++j) {
    const double margin = beta(j) * kappa(j) * dt;
    if (margin >= 1.0)
      warnings.push_back("beta" + std::to_string(j + 1) + "*kappa" +
                         std::to_string(j + 1) + "*dt = " +
                         std::to_string(margin) +
                         " >= 1; forward Euler would lose theta-hat "
                         "positivity (exact-decay integrator in use)");
  }
  return warnings;
}

void ChannelLimits::validate(std::vector<std::string>& problems) const {
  auto check = [&](const SaturationLimits& lim, const char* name) {
    if (!(lim.lower < 0.0 && 0.0 < lim.upper) || !std::isfinite(lim.lower) ||
        !std::isfinite(lim.upper))
      problems.push_back(std::string("[limits] ") + name +
                         " must satisfy lower < 0 < upper");
  };
  check(torque, "torque");
  check(voltage_q, "voltage_q");
  check(voltage_d, "voltage_d");
}

void PidGains::validate(std::vector<std::string>& problems) const {
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      problems.push_back(std::string("[gains.pid] ") + name +
                         " must be strictly positive");
  };
  positive(kp_pos, "kp_pos");
  positive(kp_vel, "kp_vel");
  positive(ki_vel, "ki_vel");
  positive(kp_iq, "kp_iq");
  positive(ki_iq, "ki_iq");
  positive(kp_id, "kp_id");
  positive(ki_id, "ki_id");
}

namespace {

// Barrier transform under the configured out-of-set policy. Returns false
// (under clamp) after flooring Q; throws under abort.
BarrierSample guarded_barrier(double e, double rho, int subsystem,
                              BarrierPolicy policy, std::uint32_t& flags) {
  const double q_floor = 1e-9 * rho * rho;
  double q = rho * rho - e * e;
  if (std::abs(e) >= rho || q < q_floor) {
    if (policy == BarrierPolicy::abort_run && std::abs(e) >= rho)
      throw BarrierViolation(subsystem, e, rho);
    q = q_floor;
    flags |= flag::barrier_clamped;
  }
  return {e / q, q};
}

}  // namespace

std::pair<ControlOutput, AdaptiveState> drs_blf_step(
    const PlantState& state, double x1d, double x2d,
    const SafetyEnvelope& envelope, const ControllerGains& gains,
    const ChannelLimits& limits, double torque_constant,
    const AdaptiveState& adaptive, double dt, BarrierPolicy policy) {
  ControlOutput out;
  AdaptiveState next = adaptive;

  auto subsystem_control = [&](int j, double x, double x_jd,
                               double virtual_ctrl) {
    const int i = j - 1;
    const auto [xe, e] = tracking_error(x, x_jd, j, virtual_ctrl);
    out.tracking_error(i) = xe;
    out.barrier_error(i) = e;
    const double rho = envelope.rho(j);
    const BarrierSample b = guarded_barrier(e, rho, j, policy, out.flags);
    out.phi(i) = b.phi;
    out.barrier_margin(i) = std::log(rho * rho / b.q);
    next.theta(i) = adaptive_step(adaptive.theta(i), b.phi, gains.beta(i),
                                  gains.kappa(i), gains.zeta(i), dt);
    return control_law(e, b.phi, next.theta(i), gains.epsilon(i),
                       gains.zeta(i));
  };

  // position -> virtual velocity command
  out.virtual_velocity = subsystem_control(1, state.position(), x1d, 0.0);
  next.last_virtual = out.virtual_velocity;

  // velocity -> torque command
  out.torque_raw =
      subsystem_control(2, state.velocity(), x2d, out.virtual_velocity);
  const SatOutcome torque_sat = saturate(out.torque_raw, limits.torque);
  out.torque = torque_sat.value;
  if (torque_sat.clipped) out.flags |= flag::torque_saturated;

  // the current reference comes from the torque the channel can deliver
  out.ref_current_q = out.torque / torque_constant;
  out.ref_current_d = 0.0;

  // q-current -> q voltage
  out.voltage_q_raw =
      subsystem_control(3, state.current_q(), out.ref_current_q, 0.0);
  const SatOutcome vq_sat = saturate(out.voltage_q_raw, limits.voltage_q);
  out.voltage_q = vq_sat.value;
  if (vq_sat.clipped) out.flags |= flag::voltage_q_saturated;

  // d-current -> d voltage
  out.voltage_d_raw =
      subsystem_control(4, state.current_d(), out.ref_current_d, 0.0);
  const SatOutcome vd_sat = saturate(out.voltage_d_raw, limits.voltage_d);
  out.voltage_d = vd_sat.value;
  if (vd_sat.clipped) out.flags |= flag::voltage_d_saturated;

  return {out, next};
}

std::pair<ControlOutput, PidState> pid_step(const PlantState& state,
                                            double x1d, double x2d,
                                            const PidGains& gains,
                                            const ChannelLimits& limits,
                                            double torque_constant,
                                            const PidState& pid, double dt) {
  ControlOutput out;
  PidState next = pid;

  // conditional integration: a saturated loop keeps its integrator
  auto pi_loop = [&](double error, double kp, double ki, double integral,
                     const SaturationLimits& lim, double& integral_out,
                     double& raw_out) {
    const double trial_integral = integral + error * dt;
    const double trial = kp * error + ki * trial_integral;
    const SatOutcome sat = saturate(trial, lim);
    if (sat.clipped) {
      raw_out = kp * error + ki * integral;
      integral_out = integral;
      return saturate(raw_out, lim);
    }
    raw_out = trial;
    integral_out = trial_integral;
    return sat;
  };

  const double pos_error = x1d - state.position();
  out.virtual_velocity = gains.kp_pos * pos_error;
  const double vel_ref = x2d + out.virtual_velocity;

  const double vel_error = vel_ref - state.velocity();
  const SatOutcome torque_sat =
      pi_loop(vel_error, gains.kp_vel, gains.ki_vel, pid.int_vel,
              limits.torque, next.int_vel, out.torque_raw);
  out.torque = torque_sat.value;
  if (torque_sat.clipped) out.flags |= flag::torque_saturated;

  out.ref_current_q = out.torque / torque_constant;
  out.ref_current_d = 0.0;

  const double iq_error = out.ref_current_q - state.current_q();
  const SatOutcome vq_sat =
      pi_loop(iq_error, gains.kp_iq, gains.ki_iq, pid.int_iq,
              limits.voltage_q, next.int_iq, out.voltage_q_raw);
  out.voltage_q = vq_sat.value;
  if (vq_sat.clipped) out.flags |= flag::voltage_q_saturated;

  const double id_error = out.ref_current_d - state.current_d();
  const SatOutcome vd_sat =
      pi_loop(id_error, gains.kp_id, gains.ki_id, pid.int_id,
              limits.voltage_d, next.int_id, out.voltage_d_raw);
  out.voltage_d = vd_sat.value;
  if (vd_sat.clipped) out.flags |= flag::voltage_d_saturated;

  out.tracking_error(0) = state.position() - x1d;
  out.tracking_error(1) = state.velocity() - x2d;
  out.tracking_error(2) = state.current_q() - out.ref_current_q;
  out.tracking_error(3) = state.current_d() - out.ref_current_d;
  out.barrier_error(0) = out.tracking_error(0);
  out.barrier_error(1) = state.velocity() - vel_ref;
  out.barrier_error(2) = out.tracking_error(2);
  out.barrier_error(3) = out.tracking_error(3);

  return {out, next};
}

EnvelopeReport envelope_check(const PiecewiseTrajectory& trajectory,
                              const SafetyEnvelope& envelope, double horizon,
                              double sample_rate, const ChannelLimits& limits,
                              double torque_constant, double virtual_bound) {
  EnvelopeReport report;
  const long samples =
      horizon > 0.0 ? std::lround(horizon * sample_rate) : -1;

  // position reference against lambda_1
  {
    EnvelopeReport::Entry entry;
    entry.subsystem = 1;
    entry.allowance = envelope.lambda(0);
    for (long k = 0; k <= samples; ++k) {
      const double t = static_cast<double>(k) / sample_rate;
      const double pos = trajectory.eval(t).position;
      if (std::abs(pos) > std::abs(entry.worst_value))
        entry.worst_value = pos;
      if (std::abs(pos) > entry.allowance &&
          entry.status == EnvelopeReport::Status::pass) {
        entry.status = EnvelopeReport::Status::violated;
        entry.first_violation_time = t;
      }
    }
    if (samples < 0) entry.note = "empty horizon";
    report.entries.push_back(entry);
  }

  // velocity reference: the shifted bound depends on the runtime virtual
  // control, so it can only be screened given an assumed bound on it
  {
    EnvelopeReport::Entry entry;
    entry.subsystem = 2;
    entry.allowance = envelope.lambda(1);
    if (virtual_bound > 0.0) {
      for (long k = 0; k <= samples; ++k) {
        const double t = static_cast<double>(k) / sample_rate;
        const double worst = std::abs(trajectory.eval(t).velocity) + virtual_bound;
        if (worst > std::abs(entry.worst_value)) entry.worst_value = worst;
        if (worst > entry.allowance &&
            entry.status == EnvelopeReport::Status::pass) {
          entry.status = EnvelopeReport::Status::violated;
          entry.first_violation_time = t;
        }
      }
      entry.note = "assumes |u1| <= " + std::to_string(virtual_bound);
    } else {
      entry.status = EnvelopeReport::Status::runtime_monitored;
      entry.note = "depends on the runtime virtual control";
    }
    report.entries.push_back(entry);
  }

  // q-current reference is bounded by the torque channel limits
  {
    EnvelopeReport::Entry entry;
    entry.subsystem = 3;
    entry.allowance = envelope.lambda(2);
    entry.worst_value =
        std::max(std::abs(limits.torque.lower), std::abs(limits.torque.upper)) /
        torque_constant;
    if (std::abs(entry.worst_value) > entry.allowance)
      entry.status = EnvelopeReport::Status::violated;
    entry.note = "bound implied by the torque limits";
    report.entries.push_back(entry);
  }

  // d-current reference is identically zero
  {
    EnvelopeReport::Entry entry;
    entry.subsystem = 4;
    entry.allowance = envelope.lambda(3);
    entry.worst_value = 0.0;
    report.entries.push_back(entry);
  }

  return report;
}

}  // namespace emla
