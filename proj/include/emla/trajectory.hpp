#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace emla {

/// Full boundary condition at one waypoint time.
struct WaypointCondition {
  double time = 0.0;          // s
  double position = 0.0;      // m
  double velocity = 0.0;      // m/s
  double acceleration = 0.0;  // m/s^2
};

struct TrajectorySample {
  double position = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
  double jerk = 0.0;
  bool clamped = false;  // sampled outside the trajectory's time span
};

/// Quintic position polynomial on [t_start, t_end]. Coefficients are in
/// local time tau = t - t_start; raw powers of large absolute times would
/// wreck the conditioning of the boundary solve.
struct QuinticSegment {
  Eigen::Matrix<double, 6, 1> coeff = Eigen::Matrix<double, 6, 1>::Zero();
  double t_start = 0.0;
  double t_end = 0.0;

  double duration() const { return t_end - t_start; }
  TrajectorySample eval(double t) const;
  /// max |jerk| over the segment: the jerk is quadratic in tau, so the
  /// extremum sits at an endpoint or the parabola vertex.
  double max_abs_jerk() const;
};

/// Solve the 6x6 boundary-condition system for one segment.
/// Rejects degenerate intervals and numerically singular systems.
QuinticSegment solve_quintic_segment(const WaypointCondition& start,
                                     const WaypointCondition& end);

/// Chain of quintic segments sharing boundary conditions at the knots,
/// hence C2-continuous by construction. Immutable once built.
struct PiecewiseTrajectory {
  std::vector<QuinticSegment> segments;

  bool empty() const { return segments.empty(); }
  double start_time() const { return segments.front().t_start; }
  double end_time() const { return segments.back().t_end; }
  double duration() const { return end_time() - start_time(); }

  /// Analytic sample of the active segment. Outside [start_time, end_time]
  /// the nearest endpoint position is held with zero derivatives and the
  /// sample is flagged as clamped.
  TrajectorySample eval(double t) const;

  double max_abs_jerk() const;
  double max_abs_position() const;
  double max_abs_velocity() const;
};

/// One segment per adjacent waypoint pair. Needs >= 2 waypoints with
/// strictly increasing times.
PiecewiseTrajectory build_piecewise(std::span<const WaypointCondition> waypoints);

}  // namespace emla
