#pragma once

#include <map>
#include <optional>
#include <string>

#include "emla/optimizer.hpp"
#include "emla/sim.hpp"

namespace emla {

/// Documented defaults for [gains.drsblf] when the section is absent.
ControllerGains default_drs_gains();

/// Documented defaults for [gains.pid] when the section is absent.
PidGains default_pid_gains();

/// One parsed scenario file. The [jaya] section is kept in raw form and
/// resolved per controller kind, since one file can carry bounds for both
/// gain sets.
struct ScenarioFile {
  Scenario scenario;
  bool has_jaya = false;
  int jaya_population = 15;
  int jaya_generations = 0;
  std::uint64_t jaya_seed = 0;
  int jaya_retry_limit = 100;
  bool jaya_warm_start = false;
  std::map<std::string, std::pair<double, double>> jaya_bounds;
};

/// Parse and validate a whole scenario file; every problem found is
/// reported at once, prefixed with path:line where one applies.
ScenarioFile load_scenario_file(const std::string& path);

/// Parse a file for planning only: full syntax validation, but just the
/// [trajectory] section is required.
PiecewiseTrajectory load_trajectory_file(const std::string& path);

/// Resolve the [jaya] section for one controller's gain vector. Family
/// keys (bounds_beta = lo hi) apply to all four subsystem entries and
/// per-gain keys (bounds_beta2 = lo hi) override them.
JayaConfig build_jaya_config(const ScenarioFile& file, ControllerKind kind);

/// Config-section text ready to paste back into a scenario file.
std::string serialize_gains(const ControllerGains& gains);
std::string serialize_gains(const PidGains& gains);

const char* controller_name(ControllerKind kind);

}  // namespace emla
