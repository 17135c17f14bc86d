#include "emla/sim.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace emla {

void Scenario::validate(std::vector<std::string>& problems) const {
  plant.validate(problems);
  load.validate(problems);
  envelope.validate(problems);
  limits.validate(problems);
  drs_gains.validate(problems);
  if (controller == ControllerKind::pid) pid_gains.validate(problems);
  if (!(duration > 0.0)) problems.push_back("[sim] duration must be > 0");
  if (!(control_rate > 0.0))
    problems.push_back("[sim] control_rate must be > 0");
  if (plant_substeps < 1)
    problems.push_back("[sim] plant_substeps must be >= 1");
  if (!(theta_init > 0.0))
    problems.push_back("[sim] theta_init must be strictly positive");
  if (!(convergence_band > 0.0))
    problems.push_back("[sim] convergence_band must be > 0");
  if (!initial_state.all_finite())
    problems.push_back("[sim] initial state must be finite");
  if (trajectory.empty())
    problems.push_back("[trajectory] at least one segment is required");
}

namespace {

ControlOutput step_controller(const Scenario& sc, const PlantState& state,
                              double x1d, double x2d, AdaptiveState& adaptive,
                              PidState& pid) {
  if (sc.controller == ControllerKind::drsblf) {
    auto [out, next] = drs_blf_step(state, x1d, x2d, sc.envelope, sc.drs_gains,
                                    sc.limits, sc.plant.torque_constant(),
                                    adaptive, sc.control_period(), sc.policy);
    adaptive = next;
    return out;
  }
  auto [out, next] = pid_step(state, x1d, x2d, sc.pid_gains, sc.limits,
                              sc.plant.torque_constant(), pid,
                              sc.control_period());
  pid = next;
  return out;
}

TraceRecord make_record(double t, const PlantState& state,
                        const TrajectorySample& ref_sample,
                        const ControlOutput& out, const AdaptiveState& adaptive,
                        double load_force, const SafetyEnvelope& envelope) {
  TraceRecord r;
  r.t = t;
  r.x = state.x;
  r.ref << ref_sample.position, ref_sample.velocity, out.ref_current_q,
      out.ref_current_d;
  r.xe = out.tracking_error;
  r.e = out.barrier_error;
  r.theta = adaptive.theta;
  r.barrier_margin = out.barrier_margin;
  r.u1 = out.virtual_velocity;
  r.u2_raw = out.torque_raw;
  r.u2 = out.torque;
  r.u3_raw = out.voltage_q_raw;
  r.u3 = out.voltage_q;
  r.u4_raw = out.voltage_d_raw;
  r.u4 = out.voltage_d;
  r.load_force = load_force;
  r.flags = out.flags;
  if (ref_sample.clamped) r.flags |= flag::trajectory_held;
  for (int j = 0; j < 4; ++j)
    if (std::abs(state.x(j)) >= envelope.chi(j))
      r.flags |= flag::envelope_exceeded;
  return r;
}

}  // namespace

RunResult run(const Scenario& scenario) {
  RunResult result;
  result.trace.control_rate = scenario.control_rate;

  const double dt = scenario.control_period();
  const long ticks = std::lround(scenario.duration * scenario.control_rate);
  result.trace.records.reserve(static_cast<size_t>(ticks) + 1);

  PlantState state = scenario.initial_state;
  AdaptiveState adaptive;
  adaptive.theta.setConstant(scenario.theta_init);
  PidState pid;

  const double sub_dt = dt / scenario.plant_substeps;
  auto derivative = [&](double t, const Eigen::Vector4d& x, double u_q,
                        double u_d) {
    PlantState s;
    s.x = x;
    return plant_derivatives(s, u_q, u_d, scenario.load.sample(t),
                             scenario.plant);
  };

  for (long k = 0; k <= ticks; ++k) {
    const double t = static_cast<double>(k) * dt;
    const TrajectorySample ref = scenario.trajectory.eval(t);
    const double load_force = scenario.load.sample(t).force;

    if (!state.all_finite()) {
      result.outcome = RunOutcome::numeric_failure;
      result.stop_time = t;
      result.message = "plant state became non-finite at t = " +
                       std::to_string(t);
      return result;
    }

    ControlOutput out;
    try {
      out = step_controller(scenario, state, ref.position, ref.velocity,
                            adaptive, pid);
    } catch (const BarrierViolation& violation) {
      TraceRecord r;
      r.t = t;
      r.x = state.x;
      r.ref << ref.position, ref.velocity, 0.0, 0.0;
      r.xe << state.position() - ref.position, state.velocity() - ref.velocity,
          0.0, 0.0;
      r.theta = adaptive.theta;
      r.load_force = load_force;
      r.flags = flag::barrier_violation;
      result.trace.records.push_back(r);
      result.outcome = RunOutcome::barrier_violation;
      result.violation_subsystem = violation.subsystem();
      result.stop_time = t;
      result.message = violation.what();
      return result;
    }

    result.trace.records.push_back(
        make_record(t, state, ref, out, adaptive, load_force,
                    scenario.envelope));

    if (k == ticks) break;

    try {
      for (int sub = 0; sub < scenario.plant_substeps; ++sub) {
        const double t_sub = t + sub * sub_dt;
        state.x = rk4_step(
            [&](double tau, const Eigen::Vector4d& x) {
              return derivative(tau, x, out.voltage_q, out.voltage_d);
            },
            t_sub, state.x, sub_dt);
      }
    } catch (const NumericFailure& failure) {
      result.outcome = RunOutcome::numeric_failure;
      result.violation_subsystem = failure.subsystem();
      result.stop_time = t;
      result.message = failure.what();
      return result;
    }
  }

  result.outcome = RunOutcome::completed;
  result.stop_time = scenario.duration;
  return result;
}

Metrics compute_metrics(const SimulationTrace& trace, double band_fraction) {
  Metrics m;
  if (trace.empty()) return m;
  const auto& rec = trace.records;

  double peak_ref = 0.0;
  for (const auto& r : rec) peak_ref = std::max(peak_ref, std::abs(r.ref(0)));
  m.band = band_fraction * peak_ref;

  // last sample outside the band determines the entry-and-stay time
  size_t conv_index = 0;
  for (size_t i = rec.size(); i-- > 0;) {
    if (std::abs(rec[i].xe(0)) > m.band) {
      conv_index = i + 1;
      break;
    }
  }
  m.converged = conv_index < rec.size();
  m.convergence_time = m.converged
                           ? rec[conv_index].t
                           : std::numeric_limits<double>::infinity();

  const size_t window_begin = m.converged ? conv_index : 0;
  double pos_sq = 0.0, vel_sq = 0.0;
  size_t n = 0;
  for (size_t i = window_begin; i < rec.size(); ++i, ++n) {
    pos_sq += rec[i].xe(0) * rec[i].xe(0);
    vel_sq += rec[i].xe(1) * rec[i].xe(1);
    m.position_max = std::max(m.position_max, std::abs(rec[i].xe(0)));
    m.velocity_max = std::max(m.velocity_max, std::abs(rec[i].xe(1)));
  }
  if (n > 0) {
    m.position_rms = std::sqrt(pos_sq / static_cast<double>(n));
    m.velocity_rms = std::sqrt(vel_sq / static_cast<double>(n));
  }

  double torque_sq = 0.0;
  for (const auto& r : rec) torque_sq += r.u2 * r.u2;
  m.torque_rms = std::sqrt(torque_sq / static_cast<double>(rec.size()));

  for (const auto& r : rec)
    if (r.flags & (flag::barrier_clamped | flag::barrier_violation |
                   flag::envelope_exceeded))
      ++m.violation_count;
  return m;
}

InvariantReport check_trace_invariants(const SimulationTrace& trace,
                                       const SafetyEnvelope& envelope,
                                       const ChannelLimits& limits) {
  InvariantReport report;
  auto fail = [&](const std::string& what, double t) {
    if (report.pass) {
      report.pass = false;
      report.first_failure = what + " at t = " + std::to_string(t);
    }
  };

  for (const auto& r : trace.records) {
    ++report.checked_samples;
    const bool clamped = r.flags & flag::barrier_clamped;
    const bool violated = r.flags & flag::barrier_violation;
    if (clamped) ++report.clamped_samples;
    for (int j = 0; j < 4; ++j) {
      if (!(std::abs(r.x(j)) < envelope.chi(j)))
        fail("|x" + std::to_string(j + 1) + "| = " +
                 std::to_string(std::abs(r.x(j))) + " >= chi = " +
                 std::to_string(envelope.chi(j)),
             r.t);
      const double rho = envelope.rho(j + 1);
      if (!clamped && !violated && !(std::abs(r.e(j)) < rho))
        fail("|e" + std::to_string(j + 1) + "| = " +
                 std::to_string(std::abs(r.e(j))) + " >= rho = " +
                 std::to_string(rho),
             r.t);
      if (!(r.theta(j) > 0.0))
        fail("theta" + std::to_string(j + 1) + " not positive", r.t);
    }
    if (r.u2 < limits.torque.lower || r.u2 > limits.torque.upper)
      fail("saturated torque outside limits", r.t);
    if (r.u3 < limits.voltage_q.lower || r.u3 > limits.voltage_q.upper)
      fail("saturated q voltage outside limits", r.t);
    if (r.u4 < limits.voltage_d.lower || r.u4 > limits.voltage_d.upper)
      fail("saturated d voltage outside limits", r.t);
  }
  return report;
}

namespace {

void append_number(std::string& line, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  line.append(buf, ptr);
}

}  // namespace

void write_trace_csv(std::ostream& os, const SimulationTrace& trace) {
  os << "t,x1,x2,x3,x4,x1d,x2d,x3d,x4d,e1,e2,e3,e4,u1,u2_raw,u2,u3_raw,u3,"
        "u4_raw,u4,th1,th2,th3,th4,FL,flags\n";
  std::string line;
  for (const auto& r : trace.records) {
    line.clear();
    append_number(line, r.t);
    for (int j = 0; j < 4; ++j) {
      line.push_back(',');
      append_number(line, r.x(j));
    }
    for (int j = 0; j < 4; ++j) {
      line.push_back(',');
      append_number(line, r.ref(j));
    }
    for (int j = 0; j < 4; ++j) {
      line.push_back(',');
      append_number(line, r.e(j));
    }
    for (double v : {r.u1, r.u2_raw, r.u2, r.u3_raw, r.u3, r.u4_raw, r.u4}) {
      line.push_back(',');
      append_number(line, v);
    }
    for (int j = 0; j < 4; ++j) {
      line.push_back(',');
      append_number(line, r.theta(j));
    }
    line.push_back(',');
    append_number(line, r.load_force);
    line.push_back(',');
    line += std::to_string(r.flags);
    line.push_back('\n');
    os << line;
  }
}

std::string format_metrics_table(const Metrics& m) {
  std::ostringstream os;
  auto row = [&](const char* name, double value, const char* unit) {
    os << name;
    for (size_t i = std::string(name).size(); i < 28; ++i) os << ' ';
    os << value << " " << unit << "\n";
  };
  row("Position error RMS", m.position_rms, "m");
  row("Position error max", m.position_max, "m");
  row("Velocity error RMS", m.velocity_rms, "m/s");
  row("Velocity error max", m.velocity_max, "m/s");
  row("Torque effort RMS", m.torque_rms, "N.m");
  row("Convergence speed", m.convergence_time, "s");
  row("Violation count", static_cast<double>(m.violation_count), "samples");
  row("Convergence band", m.band, "m");
  return os.str();
}

std::string format_metrics_kv(const Metrics& m) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "position_rms_m = " << m.position_rms << "\n"
     << "position_max_m = " << m.position_max << "\n"
     << "velocity_rms_mps = " << m.velocity_rms << "\n"
     << "velocity_max_mps = " << m.velocity_max << "\n"
     << "torque_rms_nm = " << m.torque_rms << "\n"
     << "convergence_time_s = " << m.convergence_time << "\n"
     << "converged = " << (m.converged ? 1 : 0) << "\n"
     << "violation_count = " << m.violation_count << "\n"
     << "band_m = " << m.band << "\n";
  return os.str();
}

double tracking_error_norm(const SimulationTrace& trace) {
  double sum = 0.0;
  for (const auto& r : trace.records)
    sum += r.xe(0) * r.xe(0) + r.xe(1) * r.xe(1);
  return std::sqrt(sum);
}

}  // namespace emla
