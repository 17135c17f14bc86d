#include "emla/plant.hpp"

#include <limits>

namespace emla {

void PlantParams::validate(std::vector<std::string>& problems) const {
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      problems.push_back(std::string("[plant] ") + name +
                         " must be strictly positive");
  };
  if (pole_pairs < 1) problems.push_back("[plant] pole_pairs must be >= 1");
  positive(flux_linkage, "flux_linkage");
  positive(inductance_d, "inductance_d");
  positive(inductance_q, "inductance_q");
  positive(stator_resistance, "stator_resistance");
  positive(rotary_to_linear, "rotary_to_linear");
  positive(equivalent_inertia, "equivalent_inertia");
  positive(equivalent_viscosity, "equivalent_viscosity");
  positive(force_coefficient, "force_coefficient");
  if (equivalent_stiffness < 0.0 || !std::isfinite(equivalent_stiffness))
    problems.push_back("[plant] equivalent_stiffness must be >= 0");
}

void LoadProfile::validate(std::vector<std::string>& problems) const {
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& [time, force] : force_table) {
    if (!(time > prev))
      problems.push_back("[load] breakpoint times must be strictly increasing");
    if (!std::isfinite(force))
      problems.push_back("[load] force values must be finite");
    prev = time;
  }
  for (size_t j = 0; j < disturbance.size(); ++j) {
    for (const auto& d : disturbance[j]) {
      if (!std::isfinite(d.a) || !std::isfinite(d.b) || !std::isfinite(d.c))
        problems.push_back("[disturbance] d" + std::to_string(j + 1) +
                           " parameters must be finite");
      if (d.kind == DisturbanceSpec::Kind::sine && d.b < 0.0)
        problems.push_back("[disturbance] d" + std::to_string(j + 1) +
                           " sine frequency must be >= 0");
    }
  }
}

Eigen::Vector4d plant_derivatives(const PlantState& state, double u_q,
                                  double u_d, const LoadSample& load,
                                  const PlantParams& p) {
  const double x1 = state.position();
  const double x2 = state.velocity();
  const double x3 = state.current_q();
  const double x4 = state.current_d();
  const double pc = p.pole_pairs * p.rotary_to_linear;  // electrical rad per m

  const double tau_m = torque_from_currents(x3, x4, p);

  Eigen::Vector4d dx;
  dx(0) = x2 + load.d[0];
  dx(1) = (tau_m - p.equivalent_viscosity * x2 - p.equivalent_stiffness * x1 -
           p.force_coefficient * load.force) /
              p.equivalent_inertia +
          load.d[1];
  dx(2) = (u_q - p.stator_resistance * x3 - pc * p.inductance_d * x2 * x4 -
           pc * p.flux_linkage * x2) /
              p.inductance_q +
          load.d[2];
  dx(3) = (u_d - p.stator_resistance * x4 +
           2.0 * pc * p.inductance_q * x2 * x3) /
              p.inductance_d +
          load.d[3];

  for (int j = 0; j < 4; ++j) {
    if (!std::isfinite(dx(j)))
      throw NumericFailure(
          "non-finite derivative in subsystem " + std::to_string(j + 1),
          j + 1);
  }
  return dx;
}

}  // namespace emla
