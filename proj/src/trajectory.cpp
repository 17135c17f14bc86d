#include "emla/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emla/errors.hpp"

namespace emla {

namespace {

// Position/velocity/acceleration rows of the quintic boundary system at
// local time tau.
void fill_condition_rows(Eigen::Matrix<double, 6, 6>& m, int first_row,
                         double tau) {
  const double t1 = tau, t2 = tau * tau, t3 = t2 * tau, t4 = t3 * tau,
               t5 = t4 * tau;
  m.row(first_row) << 1, t1, t2, t3, t4, t5;
  m.row(first_row + 1) << 0, 1, 2 * t1, 3 * t2, 4 * t3, 5 * t4;
  m.row(first_row + 2) << 0, 0, 2, 6 * t1, 12 * t2, 20 * t3;
}

}  // namespace

TrajectorySample QuinticSegment::eval(double t) const {
  const double tau = t - t_start;
  const auto& c = coeff;
  TrajectorySample s;
  s.position = ((((c(5) * tau + c(4)) * tau + c(3)) * tau + c(2)) * tau + c(1)) * tau + c(0);
  s.velocity = (((5 * c(5) * tau + 4 * c(4)) * tau + 3 * c(3)) * tau + 2 * c(2)) * tau + c(1);
  s.acceleration = ((20 * c(5) * tau + 12 * c(4)) * tau + 6 * c(3)) * tau + 2 * c(2);
  s.jerk = (60 * c(5) * tau + 24 * c(4)) * tau + 6 * c(3);
  return s;
}

double QuinticSegment::max_abs_jerk() const {
  // jerk(tau) = 6 c3 + 24 c4 tau + 60 c5 tau^2
  double best = std::max(std::abs(eval(t_start).jerk), std::abs(eval(t_end).jerk));
  const double a = 60.0 * coeff(5);
  if (a != 0.0) {
    const double vertex = -24.0 * coeff(4) / (2.0 * a);
    if (vertex > 0.0 && vertex < duration())
      best = std::max(best, std::abs(eval(t_start + vertex).jerk));
  }
  return best;
}

QuinticSegment solve_quintic_segment(const WaypointCondition& start,
                                     const WaypointCondition& end) {
  const double duration = end.time - start.time;
  if (!(duration > 0.0))
    throw ConfigError("quintic segment needs end.time > start.time (got [" +
                      std::to_string(start.time) + ", " +
                      std::to_string(end.time) + "])");

  Eigen::Matrix<double, 6, 6> m;
  fill_condition_rows(m, 0, 0.0);
  fill_condition_rows(m, 3, duration);

  Eigen::Matrix<double, 6, 1> rhs;
  rhs << start.position, start.velocity, start.acceleration, end.position,
      end.velocity, end.acceleration;

  QuinticSegment seg;
  seg.coeff = m.partialPivLu().solve(rhs);
  seg.t_start = start.time;
  seg.t_end = end.time;

  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  const double residual = (m * seg.coeff - rhs).cwiseAbs().maxCoeff();
  if (!seg.coeff.allFinite() || residual > 1e-9 * scale)
    throw NumericFailure(
        "quintic boundary system is numerically singular (residual " +
        std::to_string(residual) + " over [" + std::to_string(start.time) +
        ", " + std::to_string(end.time) + "])");
  return seg;
}

TrajectorySample PiecewiseTrajectory::eval(double t) const {
  if (segments.empty())
    throw ConfigError("cannot evaluate an empty trajectory");
  if (t < start_time()) {
    TrajectorySample s;
    s.position = segments.front().eval(start_time()).position;
    s.clamped = true;
    return s;
  }
  if (t > end_time()) {
    TrajectorySample s;
    s.position = segments.back().eval(end_time()).position;
    s.clamped = true;
    return s;
  }
  // first segment whose end time covers t; knots belong to the earlier
  // segment, which shares the boundary condition anyway
  auto it = std::lower_bound(
      segments.begin(), segments.end(), t,
      [](const QuinticSegment& seg, double time) { return seg.t_end < time; });
  return it->eval(t);
}

double PiecewiseTrajectory::max_abs_jerk() const {
  double best = 0.0;
  for (const auto& seg : segments) best = std::max(best, seg.max_abs_jerk());
  return best;
}

double PiecewiseTrajectory::max_abs_position() const {
  // |position| is piecewise-quintic; sample densely per segment and refine
  // with the endpoints, which is ample for envelope screening
  double best = 0.0;
  for (const auto& seg : segments) {
    const int n = 64;
    for (int i = 0; i <= n; ++i) {
      const double t = seg.t_start + seg.duration() * i / n;
      best = std::max(best, std::abs(seg.eval(t).position));
    }
  }
  return best;
}

double PiecewiseTrajectory::max_abs_velocity() const {
  double best = 0.0;
  for (const auto& seg : segments) {
    const int n = 64;
    for (int i = 0; i <= n; ++i) {
      const double t = seg.t_start + seg.duration() * i / n;
      best = std::max(best, std::abs(seg.eval(t).velocity));
    }
  }
  return best;
}

PiecewiseTrajectory build_piecewise(
    std::span<const WaypointCondition> waypoints) {
  if (waypoints.size() < 2)
    throw ConfigError("trajectory needs at least 2 waypoints, got " +
                      std::to_string(waypoints.size()));
  for (size_t i = 1; i < waypoints.size(); ++i) {
    if (!(waypoints[i].time > waypoints[i - 1].time))
      throw ConfigError("waypoint times must be strictly increasing (t[" +
                        std::to_string(i - 1) + "] = " +
                        std::to_string(waypoints[i - 1].time) + ", t[" +
                        std::to_string(i) + "] = " +
                        std::to_string(waypoints[i].time) + ")");
  }

  PiecewiseTrajectory traj;
  traj.segments.reserve(waypoints.size() - 1);
  for (size_t i = 0; i + 1 < waypoints.size(); ++i)
    traj.segments.push_back(
        solve_quintic_segment(waypoints[i], waypoints[i + 1]));
  return traj;
}

}  // namespace emla
