#include <doctest.h>

#include <cmath>
#include <random>

#include "emla/controller.hpp"
#include "support.hpp"

using namespace emla;
using namespace emla::testsupport;

TEST_CASE("tracking errors per subsystem") {
  SUBCASE("on reference") {
    const auto [xe, e] = tracking_error(0.5, 0.5, 1, 0.0);
    CHECK(xe == 0.0);
    CHECK(e == 0.0);
  }
  SUBCASE("velocity subsystem subtracts the virtual control") {
    const auto [xe, e] = tracking_error(1.0, 0.8, 2, 0.1);
    CHECK(xe == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(e == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("position subsystem is a plain difference") {
    const auto [xe, e] = tracking_error(0.05, 0.02, 1, 123.0);
    CHECK(xe == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(e == xe);
  }
}

TEST_CASE("barrier transform") {
  SUBCASE("zero error") {
    const BarrierSample b = barrier_phi(0.0, 0.1);
    CHECK(b.phi == 0.0);
    CHECK(b.q == doctest::Approx(0.01).epsilon(1e-12));
  }
  SUBCASE("error at rho over root two") {
    const double rho = 0.4;
    const double e = rho / std::sqrt(2.0);
    const BarrierSample b = barrier_phi(e, rho);
    CHECK(b.q == doctest::Approx(rho * rho / 2.0).epsilon(1e-12));
    CHECK(b.phi == doctest::Approx(std::sqrt(2.0) / rho).epsilon(1e-12));
  }
  SUBCASE("near the boundary the margin inequality holds") {
    const double rho = 0.25;
    const double e = 0.999 * rho;
    const BarrierSample b = barrier_phi(e, rho);
    CHECK(b.phi > 100.0 / rho);
    CHECK(std::log(rho * rho / b.q) < e * e / b.q);
  }
  SUBCASE("outside the set it throws with context") {
    CHECK_THROWS_AS(barrier_phi(0.1, 0.1, 3), BarrierViolation);
    try {
      barrier_phi(-0.2, 0.1, 3);
    } catch (const BarrierViolation& v) {
      CHECK(v.subsystem() == 3);
      CHECK(v.error() == -0.2);
      CHECK(v.rho() == 0.1);
    }
  }
}

TEST_CASE("margin inequality over randomized samples") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> log_rho(std::log(1e-3),
                                                 std::log(1e3));
  std::uniform_real_distribution<double> frac(-1.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double rho = std::exp(log_rho(rng));
    double alpha = frac(rng);
    // below |e|/rho ~ 1e-3 the analytic gap (e/rho)^4 / 2 drops under the
    // rounding of rho^2/Q and the two sides tie bit-for-bit
    if (std::abs(alpha) < 1e-3 || std::abs(alpha) >= 1.0) continue;
    const double e = alpha * rho;
    const BarrierSample b = barrier_phi(e, rho);
    CHECK(std::log(rho * rho / b.q) < e * e / b.q);
  }
}

TEST_CASE("control law") {
  CHECK(control_law(0.0, 0.0, 1.0, 0.005, 0.002) == 0.0);

  // hand evaluation at the documented magnitudes
  const double e = 0.01, rho = 0.1;
  const BarrierSample b = barrier_phi(e, rho);
  CHECK(b.phi == doctest::Approx(0.01 / 0.0099).epsilon(1e-12));
  const double u = control_law(e, b.phi, 1.0, 0.005, 0.002);
  CHECK(u == doctest::Approx(-0.5 * (0.005 * 0.01 + 0.002 * b.phi))
                 .epsilon(1e-12));

  // opposite sign of the error for any positive gains
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.01, 10.0);
  for (int i = 0; i < 200; ++i) {
    const double err = (i % 2 ? 1 : -1) * dist(rng) * 0.05;
    const BarrierSample bb = barrier_phi(err, 1.0);
    const double out = control_law(err, bb.phi, dist(rng), dist(rng), dist(rng));
    CHECK(out * err < 0.0);
  }
}

TEST_CASE("adaptive step integrates the decay exactly") {
  // beta*kappa = 1, dt = 1e-3, no forcing
  const double next = adaptive_step(1.0, 0.0, 1.0, 1.0, 0.5, 1e-3);
  CHECK(next == doctest::Approx(std::exp(-1e-3)).epsilon(1e-15));
}

TEST_CASE("adaptive step stays positive from a vanishing start") {
  const double next = adaptive_step(1e-300, 2.0, 10.0, 10.0, 0.1, 1e-3);
  CHECK(next > 0.0);
  // forcing term alone keeps it away from zero
  CHECK(next >= 0.5 * 0.1 * 10.0 * 4.0 * 1e-3);
}

TEST_CASE("adaptive fixed point of the continuous law") {
  const double zeta = 0.002, kappa = 98.0, beta = 11.2, phi = 1.0;
  const double theta_star = zeta * phi * phi / (2.0 * kappa);
  const double dt = 1e-5;  // small enough that the forcing discretization
                           // error beta^2 kappa^2 dt^2 / 2 stays below 1e-9
  const double next =
      adaptive_step(theta_star, phi, beta, kappa, zeta, dt);
  CHECK(std::abs(next - theta_star) < 1e-9);
}

TEST_CASE("adaptive estimates survive long adversarial sequences") {
  double theta = 1e-6;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> phi_dist(0.0, 50.0);
  for (int i = 0; i < 20000; ++i) {
    const double phi = (i % 3 == 0) ? 0.0 : phi_dist(rng);
    theta = adaptive_step(theta, phi, 19.8, 76.0, 0.001, 1e-3);
    CHECK(theta > 0.0);
  }
}

namespace {

Scenario controller_fixture() { return desk_hold_scenario(); }

}  // namespace

TEST_CASE("cascade is quiet on the reference") {
  const Scenario sc = controller_fixture();
  PlantState on_ref;  // reference holds zero
  AdaptiveState adaptive;
  adaptive.theta.setConstant(1e-9);  // adapted-out estimates
  const auto [out, next] =
      drs_blf_step(on_ref, 0.0, 0.0, sc.envelope, sc.drs_gains, sc.limits,
                   sc.plant.torque_constant(), adaptive, 1e-3,
                   BarrierPolicy::abort_run);
  CHECK(out.torque_raw == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(out.voltage_q_raw == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(out.voltage_d_raw == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(out.virtual_velocity == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(out.flags == 0);
}

TEST_CASE("positive position error commands corrective velocity") {
  const Scenario sc = controller_fixture();
  PlantState state;
  state.x << 0.005, 0.0, 0.0, 0.0;  // +rho1/2
  AdaptiveState adaptive;
  const auto [out, next] =
      drs_blf_step(state, 0.0, 0.0, sc.envelope, sc.drs_gains, sc.limits,
                   sc.plant.torque_constant(), adaptive, 1e-3,
                   BarrierPolicy::abort_run);
  CHECK(out.virtual_velocity < 0.0);
}

TEST_CASE("current reference follows the saturated torque") {
  const Scenario sc = controller_fixture();
  PlantState state;
  state.x << 0.0, 0.14, 0.0, 0.0;  // large velocity error forces saturation
  AdaptiveState adaptive;
  const auto [out, next] =
      drs_blf_step(state, 0.0, 0.0, sc.envelope, sc.drs_gains, sc.limits,
                   sc.plant.torque_constant(), adaptive, 1e-3,
                   BarrierPolicy::abort_run);
  CHECK(std::abs(out.torque_raw) > sc.limits.torque.upper);
  CHECK(out.torque == sc.limits.torque.lower);
  CHECK((out.flags & flag::torque_saturated) != 0);
  CHECK(out.ref_current_q ==
        doctest::Approx(out.torque / sc.plant.torque_constant())
            .epsilon(1e-12));
}

TEST_CASE("raw controls decompose exactly from the recorded terms") {
  const Scenario sc = controller_fixture();
  PlantState state;
  state.x << 0.003, 0.02, 0.5, -0.1;
  AdaptiveState adaptive;
  const auto [out, next] =
      drs_blf_step(state, 0.001, 0.01, sc.envelope, sc.drs_gains, sc.limits,
                   sc.plant.torque_constant(), adaptive, 1e-3,
                   BarrierPolicy::abort_run);
  const double raw[4] = {out.virtual_velocity, out.torque_raw,
                         out.voltage_q_raw, out.voltage_d_raw};
  for (int j = 0; j < 4; ++j) {
    const double recomputed =
        -0.5 * (sc.drs_gains.epsilon(j) * out.barrier_error(j) +
                sc.drs_gains.zeta(j) * next.theta(j) * out.phi(j));
    CHECK(raw[j] == doctest::Approx(recomputed).epsilon(1e-12));
  }
}

TEST_CASE("identical inputs give bit-identical outputs") {
  const Scenario sc = controller_fixture();
  PlantState state;
  state.x << 0.004, -0.03, 1.2, 0.2;
  AdaptiveState adaptive;
  adaptive.theta << 0.3, 0.7, 1.1, 0.9;
  const auto [a, na] =
      drs_blf_step(state, 0.002, -0.01, sc.envelope, sc.drs_gains, sc.limits,
                   sc.plant.torque_constant(), adaptive, 1e-3,
                   BarrierPolicy::abort_run);
  const auto [b, nb] =
      drs_blf_step(state, 0.002, -0.01, sc.envelope, sc.drs_gains, sc.limits,
                   sc.plant.torque_constant(), adaptive, 1e-3,
                   BarrierPolicy::abort_run);
  CHECK(a.torque_raw == b.torque_raw);
  CHECK(a.voltage_q_raw == b.voltage_q_raw);
  CHECK(a.voltage_d_raw == b.voltage_d_raw);
  CHECK((na.theta.array() == nb.theta.array()).all());
}

TEST_CASE("abort policy throws, clamp policy floors and flags") {
  const Scenario sc = controller_fixture();
  PlantState state;
  state.x << 0.02, 0.0, 0.0, 0.0;  // |e1| = 2 * rho1
  AdaptiveState adaptive;
  CHECK_THROWS_AS(
      drs_blf_step(state, 0.0, 0.0, sc.envelope, sc.drs_gains, sc.limits,
                   sc.plant.torque_constant(), adaptive, 1e-3,
                   BarrierPolicy::abort_run),
      BarrierViolation);

  const auto [out, next] =
      drs_blf_step(state, 0.0, 0.0, sc.envelope, sc.drs_gains, sc.limits,
                   sc.plant.torque_constant(), adaptive, 1e-3,
                   BarrierPolicy::clamp);
  CHECK((out.flags & flag::barrier_clamped) != 0);
  CHECK(std::isfinite(out.virtual_velocity));
}

TEST_CASE("theta positivity across the cascade") {
  const Scenario sc = controller_fixture();
  PlantState state;
  state.x << 0.004, 0.05, 2.0, 0.5;
  AdaptiveState adaptive;
  adaptive.theta.setConstant(1e-6);
  for (int i = 0; i < 2000; ++i) {
    const auto [out, next] =
        drs_blf_step(state, 0.0, 0.0, sc.envelope, sc.drs_gains, sc.limits,
                     sc.plant.torque_constant(), adaptive, 1e-3,
                     BarrierPolicy::clamp);
    adaptive = next;
    CHECK((adaptive.theta.array() > 0.0).all());
  }
}

TEST_CASE("pid baseline") {
  const Scenario sc = controller_fixture();
  const PidGains gains = desk_pid_gains();

  SUBCASE("zero error, zero integrators, zero output") {
    const auto [out, next] =
        pid_step(PlantState{}, 0.0, 0.0, gains, sc.limits,
                 sc.plant.torque_constant(), PidState{}, 1e-3);
    CHECK(out.torque_raw == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(out.voltage_q_raw == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(next.int_vel == 0.0);
  }

  SUBCASE("proportional-only position response") {
    PidGains p_only = gains;
    p_only.ki_vel = 1e-30;  // effectively proportional
    PlantState state;
    state.x << -0.01, 0.0, 0.0, 0.0;
    const auto [out, next] =
        pid_step(state, 0.0, 0.0, p_only, sc.limits,
                 sc.plant.torque_constant(), PidState{}, 1e-3);
    // velocity reference kp_pos * 0.01, torque kp_vel * that
    CHECK(out.torque_raw ==
          doctest::Approx(p_only.kp_vel * p_only.kp_pos * 0.01 +
                          p_only.ki_vel * p_only.kp_pos * 0.01 * 1e-3)
              .epsilon(1e-9));
    CHECK(out.virtual_velocity ==
          doctest::Approx(p_only.kp_pos * 0.01).epsilon(1e-12));
  }

  SUBCASE("integrators freeze while saturated") {
    PlantState state;
    state.x << -0.12, -0.3, 0.0, 0.0;  // giant error, torque saturates
    PidState pid;
    pid.int_vel = 0.02;
    const auto [out, next] =
        pid_step(state, 0.0, 0.0, gains, sc.limits,
                 sc.plant.torque_constant(), pid, 1e-3);
    CHECK((out.flags & flag::torque_saturated) != 0);
    CHECK(out.torque == sc.limits.torque.upper);
    CHECK(next.int_vel == pid.int_vel);
  }
}

TEST_CASE("envelope pre-check") {
  const Scenario sc = controller_fixture();

  SUBCASE("hold trajectory passes") {
    const EnvelopeReport report = envelope_check(
        sc.trajectory, sc.envelope, sc.duration, 100.0, sc.limits,
        sc.plant.torque_constant());
    CHECK(report.all_verified_ok());
    CHECK(report.entries.size() == 4);
    CHECK(report.entries[1].status ==
          EnvelopeReport::Status::runtime_monitored);
  }

  SUBCASE("amplitude above the allowance is flagged with a time") {
    const PiecewiseTrajectory big = hold_trajectory(5.0, 0.125);  // > lambda1
    const EnvelopeReport report =
        envelope_check(big, sc.envelope, 5.0, 100.0, sc.limits,
                       sc.plant.torque_constant());
    CHECK_FALSE(report.all_verified_ok());
    CHECK(report.entries[0].status == EnvelopeReport::Status::violated);
    CHECK(report.entries[0].first_violation_time == 0.0);
  }

  SUBCASE("tight current allowance is caught from the torque limits") {
    SafetyEnvelope env = sc.envelope;
    env.lambda(2) = 2.0;  // < 98 / 16
    env.chi(2) = 3.0;
    const EnvelopeReport report =
        envelope_check(sc.trajectory, env, 5.0, 100.0, sc.limits,
                       sc.plant.torque_constant());
    CHECK(report.entries[2].status == EnvelopeReport::Status::violated);
  }

  SUBCASE("empty horizon passes vacuously") {
    const EnvelopeReport report =
        envelope_check(sc.trajectory, sc.envelope, 0.0, 100.0, sc.limits,
                       sc.plant.torque_constant());
    CHECK(report.all_verified_ok());
  }

  SUBCASE("virtual bound enables the velocity pre-check") {
    const EnvelopeReport report = envelope_check(
        sc.trajectory, sc.envelope, 5.0, 100.0, sc.limits,
        sc.plant.torque_constant(), 0.1);
    CHECK(report.entries[1].status == EnvelopeReport::Status::pass);
  }
}

TEST_CASE("gain validation") {
  ControllerGains gains = desk_drs_gains();
  gains.zeta(2) = 0.0;
  gains.kappa(0) = -1.0;
  std::vector<std::string> problems;
  gains.validate(problems);
  CHECK(problems.size() == 2);

  const auto warnings =
      desk_drs_gains().discrete_positivity_report(1e-3);
  // beta1*kappa1*dt and beta2*kappa2*dt exceed one at 1 kHz
  CHECK(warnings.size() == 2);
}

TEST_CASE("envelope validation") {
  SafetyEnvelope env = desk_envelope();
  env.lambda(0) = env.chi(0);  // rho1 collapses
  std::vector<std::string> problems;
  env.validate(problems);
  CHECK(problems.size() == 1);
}
