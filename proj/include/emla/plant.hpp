#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "emla/errors.hpp"

namespace emla {

/// Physical constants of the PMSM-driven actuator, dq frame, load-side
/// linear coordinates. All values come from configuration.
struct PlantParams {
  int pole_pairs = 0;                 // P
  double flux_linkage = 0.0;          // Wb
  double inductance_d = 0.0;          // H
  double inductance_q = 0.0;          // H
  double stator_resistance = 0.0;     // ohm
  double rotary_to_linear = 0.0;      // rad/m
  double equivalent_inertia = 0.0;    // kg
  double equivalent_viscosity = 0.0;  // N*s/m
  double equivalent_stiffness = 0.0;  // N/m (>= 0)
  double force_coefficient = 0.0;     // dimensionless

  /// Kt = (3/2) * P * flux_linkage, N*m/A.
  double torque_constant() const { return 1.5 * pole_pairs * flux_linkage; }

  void validate(std::vector<std::string>& problems) const;
};

/// Four-state vector: load-side position/velocity plus dq currents.
struct PlantState {
  Eigen::Vector4d x = Eigen::Vector4d::Zero();  // [m, m/s, A, A]

  double position() const { return x(0); }
  double velocity() const { return x(1); }
  double current_q() const { return x(2); }
  double current_d() const { return x(3); }
  bool all_finite() const { return x.allFinite(); }
};

/// Disturbance channel d_j(t), bounded by construction.
struct DisturbanceSpec {
  enum class Kind { none, constant, step, sine };
  Kind kind = Kind::none;
  double a = 0.0;  // constant: value; step: switch time; sine: amplitude
  double b = 0.0;  // step: value after switch; sine: frequency (Hz)
  double c = 0.0;  // sine: phase (rad)

  double eval(double t) const {
    switch (kind) {
      case Kind::none:
        return 0.0;
      case Kind::constant:
        return a;
      case Kind::step:
        return t >= a ? b : 0.0;
      case Kind::sine:
        return a * std::sin(2.0 * M_PI * b * t + c);
    }
    return 0.0;
  }
};

/// Load force and disturbances evaluated at one instant.
struct LoadSample {
  double force = 0.0;              // N
  std::array<double, 4> d{0, 0, 0, 0};
};

/// Piecewise-constant load force plus optional per-subsystem disturbances;
/// each channel is an additive sum of terms. Force breakpoints hold from
/// their time onward; zero before the first.
struct LoadProfile {
  std::vector<std::pair<double, double>> force_table;  // (s, N), times increasing
  std::array<std::vector<DisturbanceSpec>, 4> disturbance{};

  LoadSample sample(double t) const {
    LoadSample s;
    for (const auto& [time, force] : force_table) {
      if (t >= time) s.force = force;
      else break;
    }
    for (size_t j = 0; j < 4; ++j)
      for (const auto& term : disturbance[j]) s.d[j] += term.eval(t);
    return s;
  }

  void validate(std::vector<std::string>& problems) const;
};

/// One saturation channel; rest commands must be admissible.
struct SaturationLimits {
  double lower = 0.0;  // < 0
  double upper = 0.0;  // > 0
};

/// Saturated value decomposed as value = s1*u + s2.
struct SatOutcome {
  double value = 0.0;
  double s1 = 0.0;  // dimensionless, <= 1
  double s2 = 0.0;  // same units as u
  bool clipped = false;
};

/// Clamp u to [lower, upper]; boundary values resolve to the in-band
/// branch (s1 = 1, s2 = 0).
inline SatOutcome saturate(double u, const SaturationLimits& lim) {
  SatOutcome out;
  if (u >= lim.lower && u <= lim.upper) {
    out.value = u;
    out.s1 = 1.0;
    out.s2 = 0.0;
    out.clipped = false;
    return out;
  }
  const double shrink = u / (std::abs(u) + 1.0);
  out.s1 = 1.0 / (std::abs(u) + 1.0);
  if (u > lim.upper) {
    out.value = lim.upper;
    out.s2 = lim.upper - shrink;
  } else {
    out.value = lim.lower;
    out.s2 = lim.lower - shrink;
  }
  out.clipped = true;
  return out;
}

/// Electromagnetic torque from dq currents (N*m). The inductance gap
/// (Ld - Lq) contributes reluctance torque for asymmetric machines.
inline double torque_from_currents(double i_q, double i_d,
                                   const PlantParams& p) {
  return 1.5 * p.pole_pairs *
         (i_q * (p.flux_linkage + (p.inductance_d - p.inductance_q) * i_d));
}

/// q-axis current reference producing torque_ref at i_d = 0 (A).
inline double reference_q_current(double torque_ref, const PlantParams& p) {
  if (!std::isfinite(torque_ref))
    throw NumericFailure("non-finite torque reference");
  return torque_ref / p.torque_constant();
}

/// Right-hand side of the four-state model. Voltages are assumed already
/// saturated by the caller; the mechanical subsystem is driven by the
/// torque produced by the actual currents, not by the commanded torque.
Eigen::Vector4d plant_derivatives(const PlantState& state, double u_q,
                                  double u_d, const LoadSample& load,
                                  const PlantParams& p);

}  // namespace emla
