#include "emla/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace emla {

ControllerGains default_drs_gains() {
  ControllerGains g;
  g.beta << 11.2, 19.8, 4.75, 7.1;
  g.kappa << 98.0, 76.0, 24.0, 48.0;
  g.zeta << 0.002, 0.001, 0.0001, 0.0021;
  g.epsilon << 0.005, 0.008, 0.001, 0.003;
  return g;
}

PidGains default_pid_gains() {
  PidGains g;
  g.kp_pos = 4.0;
  g.kp_vel = 1200.0;
  g.ki_vel = 2400.0;
  g.kp_iq = 12.0;
  g.ki_iq = 600.0;
  g.kp_id = 12.0;
  g.ki_id = 600.0;
  return g;
}

const char* controller_name(ControllerKind kind) {
  return kind == ControllerKind::drsblf ? "drsblf" : "pid";
}

namespace {

struct Parser {
  std::string path;
  std::vector<std::string> problems;
  int line_number = 0;

  void error(const std::string& message) {
    problems.push_back(path + ":" + std::to_string(line_number) + ": " +
                       message);
  }

  bool parse_double(const std::string& token, double& out) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) {
      error("expected a number, got '" + token + "'");
      return false;
    }
    return true;
  }

  bool parse_int(const std::string& token, long& out) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) {
      error("expected an integer, got '" + token + "'");
      return false;
    }
    return true;
  }
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> tokens;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  return tokens;
}

struct KeyValue {
  std::string key;
  std::string value;
};

std::optional<KeyValue> split_key_value(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) return std::nullopt;
  return KeyValue{trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

class ScenarioParser {
 public:
  explicit ScenarioParser(const std::string& path) { p_.path = path; }

  ScenarioFile parse(std::istream& in);
  std::vector<std::string>& problems() { return p_.problems; }
  bool has_section(const std::string& name) const {
    return seen_sections_.count(name) > 0;
  }
  const std::vector<WaypointCondition>& waypoints() const {
    return waypoints_;
  }

 private:
  Parser p_;
  ScenarioFile file_;
  std::string section_;
  std::map<std::string, int> seen_sections_;
  std::vector<WaypointCondition> waypoints_;

  void handle_line(const std::string& line);
  void handle_data_row(const std::string& line);
  void handle_key(const KeyValue& kv);
  void handle_plant(const KeyValue& kv);
  void handle_disturbance(const KeyValue& kv);
  void handle_envelope(const KeyValue& kv);
  void handle_limits(const KeyValue& kv);
  void handle_drs_gains(const KeyValue& kv);
  void handle_pid_gains(const KeyValue& kv);
  void handle_sim(const KeyValue& kv);
  void handle_jaya(const KeyValue& kv);
};

ScenarioFile ScenarioParser::parse(std::istream& in) {
  file_.scenario.drs_gains = default_drs_gains();
  file_.scenario.pid_gains = default_pid_gains();

  std::string raw;
  while (std::getline(in, raw)) {
    ++p_.line_number;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    handle_line(line);
  }

  if (!waypoints_.empty()) {
    try {
      file_.scenario.trajectory = build_piecewise(waypoints_);
    } catch (const std::exception& e) {
      p_.problems.push_back(p_.path + ": [trajectory] " + e.what());
    }
  }
  return file_;
}

void ScenarioParser::handle_line(const std::string& line) {
  if (line.front() == '[') {
    if (line.back() != ']') {
      p_.error("malformed section header '" + line + "'");
      section_.clear();
      return;
    }
    const std::string name = trim(line.substr(1, line.size() - 2));
    static const char* known[] = {"plant",        "trajectory", "load",
                                  "disturbance",  "envelope",   "limits",
                                  "gains.drsblf", "gains.pid",  "sim",
                                  "jaya"};
    bool ok = false;
    for (const char* k : known) ok = ok || name == k;
    if (!ok) {
      p_.error("unknown section [" + name + "]");
      section_.clear();
      return;
    }
    section_ = name;
    ++seen_sections_[name];
    return;
  }

  if (section_.empty()) {
    p_.error("content before any [section] header");
    return;
  }

  const auto kv = split_key_value(line);
  if (section_ == "trajectory" || section_ == "load") {
    if (kv) {
      p_.error("[" + section_ + "] takes data rows, not key = value lines");
      return;
    }
    handle_data_row(line);
    return;
  }
  if (!kv) {
    p_.error("expected key = value in [" + section_ + "]");
    return;
  }
  handle_key(*kv);
}

void ScenarioParser::handle_data_row(const std::string& line) {
  const auto tokens = split_ws(line);
  if (section_ == "trajectory") {
    if (tokens.size() != 4) {
      p_.error("waypoint rows are 't pos vel acc' (4 numbers), got " +
               std::to_string(tokens.size()));
      return;
    }
    WaypointCondition w;
    if (p_.parse_double(tokens[0], w.time) &&
        p_.parse_double(tokens[1], w.position) &&
        p_.parse_double(tokens[2], w.velocity) &&
        p_.parse_double(tokens[3], w.acceleration))
      waypoints_.push_back(w);
    return;
  }
  // load
  if (tokens.size() != 2) {
    p_.error("load rows are 't force' (2 numbers), got " +
             std::to_string(tokens.size()));
    return;
  }
  double t = 0.0, f = 0.0;
  if (p_.parse_double(tokens[0], t) && p_.parse_double(tokens[1], f))
    file_.scenario.load.force_table.emplace_back(t, f);
}

void ScenarioParser::handle_key(const KeyValue& kv) {
  if (section_ == "plant") return handle_plant(kv);
  if (section_ == "disturbance") return handle_disturbance(kv);
  if (section_ == "envelope") return handle_envelope(kv);
  if (section_ == "limits") return handle_limits(kv);
  if (section_ == "gains.drsblf") return handle_drs_gains(kv);
  if (section_ == "gains.pid") return handle_pid_gains(kv);
  if (section_ == "sim") return handle_sim(kv);
  if (section_ == "jaya") return handle_jaya(kv);
}

void ScenarioParser::handle_plant(const KeyValue& kv) {
  auto& p = file_.scenario.plant;
  if (kv.key == "pole_pairs") {
    long v = 0;
    if (p_.parse_int(kv.value, v)) p.pole_pairs = static_cast<int>(v);
    return;
  }
  static const std::map<std::string, double PlantParams::*> fields = {
      {"flux_linkage", &PlantParams::flux_linkage},
      {"inductance_d", &PlantParams::inductance_d},
      {"inductance_q", &PlantParams::inductance_q},
      {"stator_resistance", &PlantParams::stator_resistance},
      {"rotary_to_linear", &PlantParams::rotary_to_linear},
      {"equivalent_inertia", &PlantParams::equivalent_inertia},
      {"equivalent_viscosity", &PlantParams::equivalent_viscosity},
      {"equivalent_stiffness", &PlantParams::equivalent_stiffness},
      {"force_coefficient", &PlantParams::force_coefficient},
  };
  const auto it = fields.find(kv.key);
  if (it == fields.end()) {
    p_.error("unknown [plant] key '" + kv.key + "'");
    return;
  }
  double v = 0.0;
  if (p_.parse_double(kv.value, v)) p.*(it->second) = v;
}

void ScenarioParser::handle_disturbance(const KeyValue& kv) {
  if (kv.key.size() != 2 || kv.key[0] != 'd' || kv.key[1] < '1' ||
      kv.key[1] > '4') {
    p_.error("unknown [disturbance] key '" + kv.key + "' (d1..d4)");
    return;
  }
  const size_t j = static_cast<size_t>(kv.key[1] - '1');
  const auto tokens = split_ws(kv.value);
  DisturbanceSpec spec;
  if (tokens.empty()) {
    p_.error("empty disturbance spec");
    return;
  }
  if (tokens[0] == "const" && tokens.size() == 2) {
    spec.kind = DisturbanceSpec::Kind::constant;
    if (!p_.parse_double(tokens[1], spec.a)) return;
  } else if (tokens[0] == "step" && tokens.size() == 3) {
    spec.kind = DisturbanceSpec::Kind::step;
    if (!p_.parse_double(tokens[1], spec.a) ||
        !p_.parse_double(tokens[2], spec.b))
      return;
  } else if (tokens[0] == "sine" && tokens.size() == 4) {
    spec.kind = DisturbanceSpec::Kind::sine;
    if (!p_.parse_double(tokens[1], spec.a) ||
        !p_.parse_double(tokens[2], spec.b) ||
        !p_.parse_double(tokens[3], spec.c))
      return;
  } else {
    p_.error("disturbance spec is 'const v', 'step t v', or 'sine a f ph'");
    return;
  }
  // repeated keys add terms to the channel
  file_.scenario.load.disturbance[j].push_back(spec);
}

void ScenarioParser::handle_envelope(const KeyValue& kv) {
  auto& env = file_.scenario.envelope;
  if (kv.key.size() == 4 && kv.key.compare(0, 3, "chi") == 0 &&
      kv.key[3] >= '1' && kv.key[3] <= '4') {
    double v = 0.0;
    if (p_.parse_double(kv.value, v)) env.chi(kv.key[3] - '1') = v;
    return;
  }
  if (kv.key.size() == 7 && kv.key.compare(0, 6, "lambda") == 0 &&
      kv.key[6] >= '1' && kv.key[6] <= '4') {
    double v = 0.0;
    if (p_.parse_double(kv.value, v)) env.lambda(kv.key[6] - '1') = v;
    return;
  }
  p_.error("unknown [envelope] key '" + kv.key + "' (chi1..4, lambda1..4)");
}

void ScenarioParser::handle_limits(const KeyValue& kv) {
  auto& lim = file_.scenario.limits;
  static const std::map<std::string, std::pair<int, int>> keys = {
      {"torque_min", {0, 0}},    {"torque_max", {0, 1}},
      {"voltage_q_min", {1, 0}}, {"voltage_q_max", {1, 1}},
      {"voltage_d_min", {2, 0}}, {"voltage_d_max", {2, 1}},
  };
  const auto it = keys.find(kv.key);
  if (it == keys.end()) {
    p_.error("unknown [limits] key '" + kv.key + "'");
    return;
  }
  double v = 0.0;
  if (!p_.parse_double(kv.value, v)) return;
  SaturationLimits* channel[] = {&lim.torque, &lim.voltage_q, &lim.voltage_d};
  if (it->second.second == 0)
    channel[it->second.first]->lower = v;
  else
    channel[it->second.first]->upper = v;
}

void ScenarioParser::handle_drs_gains(const KeyValue& kv) {
  auto& g = file_.scenario.drs_gains;
  static const std::map<std::string, Eigen::Vector4d ControllerGains::*>
      families = {{"beta", &ControllerGains::beta},
                  {"kappa", &ControllerGains::kappa},
                  {"zeta", &ControllerGains::zeta},
                  {"epsilon", &ControllerGains::epsilon}};
  if (kv.key.size() >= 2) {
    const char idx = kv.key.back();
    const std::string family = kv.key.substr(0, kv.key.size() - 1);
    const auto it = families.find(family);
    if (it != families.end() && idx >= '1' && idx <= '4') {
      double v = 0.0;
      if (p_.parse_double(kv.value, v)) (g.*(it->second))(idx - '1') = v;
      return;
    }
  }
  p_.error("unknown [gains.drsblf] key '" + kv.key +
           "' (beta1..4, kappa1..4, zeta1..4, epsilon1..4)");
}

void ScenarioParser::handle_pid_gains(const KeyValue& kv) {
  auto& g = file_.scenario.pid_gains;
  static const std::map<std::string, double PidGains::*> keys = {
      {"kp_pos", &PidGains::kp_pos}, {"kp_vel", &PidGains::kp_vel},
      {"ki_vel", &PidGains::ki_vel}, {"kp_iq", &PidGains::kp_iq},
      {"ki_iq", &PidGains::ki_iq},   {"kp_id", &PidGains::kp_id},
      {"ki_id", &PidGains::ki_id},
  };
  const auto it = keys.find(kv.key);
  if (it == keys.end()) {
    p_.error("unknown [gains.pid] key '" + kv.key + "'");
    return;
  }
  double v = 0.0;
  if (p_.parse_double(kv.value, v)) g.*(it->second) = v;
}

void ScenarioParser::handle_sim(const KeyValue& kv) {
  auto& sc = file_.scenario;
  double v = 0.0;
  if (kv.key == "duration") {
    if (p_.parse_double(kv.value, v)) sc.duration = v;
  } else if (kv.key == "control_rate") {
    if (p_.parse_double(kv.value, v)) sc.control_rate = v;
  } else if (kv.key == "plant_substeps") {
    long n = 0;
    if (p_.parse_int(kv.value, n)) sc.plant_substeps = static_cast<int>(n);
  } else if (kv.key == "controller") {
    if (kv.value == "drsblf")
      sc.controller = ControllerKind::drsblf;
    else if (kv.value == "pid")
      sc.controller = ControllerKind::pid;
    else
      p_.error("controller must be 'drsblf' or 'pid'");
  } else if (kv.key == "barrier_policy") {
    if (kv.value == "abort")
      sc.policy = BarrierPolicy::abort_run;
    else if (kv.value == "clamp")
      sc.policy = BarrierPolicy::clamp;
    else
      p_.error("barrier_policy must be 'abort' or 'clamp'");
  } else if (kv.key == "theta_init") {
    if (p_.parse_double(kv.value, v)) sc.theta_init = v;
  } else if (kv.key == "convergence_band") {
    if (p_.parse_double(kv.value, v)) sc.convergence_band = v;
  } else if (kv.key == "seed") {
    long n = 0;
    if (p_.parse_int(kv.value, n)) sc.seed = static_cast<std::uint64_t>(n);
  } else if (kv.key == "initial_position") {
    if (p_.parse_double(kv.value, v)) sc.initial_state.x(0) = v;
  } else if (kv.key == "initial_velocity") {
    if (p_.parse_double(kv.value, v)) sc.initial_state.x(1) = v;
  } else if (kv.key == "initial_current_q") {
    if (p_.parse_double(kv.value, v)) sc.initial_state.x(2) = v;
  } else if (kv.key == "initial_current_d") {
    if (p_.parse_double(kv.value, v)) sc.initial_state.x(3) = v;
  } else {
    p_.error("unknown [sim] key '" + kv.key + "'");
  }
}

void ScenarioParser::handle_jaya(const KeyValue& kv) {
  file_.has_jaya = true;
  if (kv.key == "population") {
    long n = 0;
    if (p_.parse_int(kv.value, n)) file_.jaya_population = static_cast<int>(n);
  } else if (kv.key == "generations") {
    long n = 0;
    if (p_.parse_int(kv.value, n))
      file_.jaya_generations = static_cast<int>(n);
  } else if (kv.key == "seed") {
    long n = 0;
    if (p_.parse_int(kv.value, n))
      file_.jaya_seed = static_cast<std::uint64_t>(n);
  } else if (kv.key == "retry_limit") {
    long n = 0;
    if (p_.parse_int(kv.value, n))
      file_.jaya_retry_limit = static_cast<int>(n);
  } else if (kv.key == "warm_start") {
    if (kv.value == "true" || kv.value == "1")
      file_.jaya_warm_start = true;
    else if (kv.value == "false" || kv.value == "0")
      file_.jaya_warm_start = false;
    else
      p_.error("warm_start must be true|false");
  } else if (kv.key.compare(0, 7, "bounds_") == 0) {
    const auto tokens = split_ws(kv.value);
    double lo = 0.0, hi = 0.0;
    if (tokens.size() != 2 || !p_.parse_double(tokens[0], lo) ||
        !p_.parse_double(tokens[1], hi)) {
      p_.error("bounds are 'lower upper' (2 numbers)");
      return;
    }
    file_.jaya_bounds[kv.key.substr(7)] = {lo, hi};
  } else {
    p_.error("unknown [jaya] key '" + kv.key + "'");
  }
}

ScenarioFile parse_stream(const std::string& path, std::istream& in,
                          bool full_scenario) {
  ScenarioParser parser(path);
  ScenarioFile file = parser.parse(in);

  auto& problems = parser.problems();
  if (full_scenario) {
    for (const char* required : {"plant", "trajectory", "envelope", "limits",
                                 "sim"})
      if (!parser.has_section(required))
        problems.push_back(path + ": missing required section [" +
                           std::string(required) + "]");
    if (parser.has_section("trajectory") && parser.waypoints().size() < 2)
      problems.push_back(path +
                         ": [trajectory] needs at least 2 waypoints");
    if (problems.empty()) {
      std::vector<std::string> validation;
      file.scenario.validate(validation);
      for (const auto& v : validation) problems.push_back(path + ": " + v);
    }
  } else {
    if (!parser.has_section("trajectory"))
      problems.push_back(path + ": missing required section [trajectory]");
    if (parser.has_section("trajectory") && parser.waypoints().size() < 2)
      problems.push_back(path +
                         ": [trajectory] needs at least 2 waypoints");
  }

  if (!problems.empty()) {
    std::string all;
    for (const auto& p : problems) {
      all += p;
      all += '\n';
    }
    throw ConfigError(all);
  }
  return file;
}

}  // namespace

ScenarioFile load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file\n");
  return parse_stream(path, in, true);
}

PiecewiseTrajectory load_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file\n");
  return parse_stream(path, in, false).scenario.trajectory;
}

namespace {

const char* kDrsGainNames[16] = {"beta1",    "beta2",    "beta3",    "beta4",
                                 "kappa1",   "kappa2",   "kappa3",   "kappa4",
                                 "zeta1",    "zeta2",    "zeta3",    "zeta4",
                                 "epsilon1", "epsilon2", "epsilon3", "epsilon4"};
const char* kPidGainNames[7] = {"kp_pos", "kp_vel", "ki_vel", "kp_iq",
                                "ki_iq",  "kp_id",  "ki_id"};

}  // namespace

JayaConfig build_jaya_config(const ScenarioFile& file, ControllerKind kind) {
  JayaConfig config;
  config.population = file.jaya_population;
  config.generations = file.jaya_generations;
  config.seed = file.jaya_seed;
  config.retry_limit = file.jaya_retry_limit;
  config.warm_start = file.jaya_warm_start;

  const int dim = gain_dimension(kind);
  config.bounds.lower = Eigen::ArrayXd::Zero(dim);
  config.bounds.upper = Eigen::ArrayXd::Zero(dim);

  std::vector<std::string> problems;
  if (!file.has_jaya)
    problems.push_back("[jaya] section is required to optimize");

  auto lookup = [&](const std::string& gain,
                    const std::string& family) -> std::pair<double, double> {
    auto it = file.jaya_bounds.find(gain);
    if (it != file.jaya_bounds.end()) return it->second;
    if (!family.empty()) {
      it = file.jaya_bounds.find(family);
      if (it != file.jaya_bounds.end()) return it->second;
    }
    problems.push_back("[jaya] missing bounds_" + gain +
                       (family.empty() ? "" : " (or family bounds_" + family +
                                                  ")"));
    return {0.0, 0.0};
  };

  if (kind == ControllerKind::drsblf) {
    for (int i = 0; i < 16; ++i) {
      const std::string name = kDrsGainNames[i];
      const std::string family = name.substr(0, name.size() - 1);
      const auto [lo, hi] = lookup(name, family);
      config.bounds.lower(i) = lo;
      config.bounds.upper(i) = hi;
    }
  } else {
    for (int i = 0; i < 7; ++i) {
      const auto [lo, hi] = lookup(kPidGainNames[i], "");
      config.bounds.lower(i) = lo;
      config.bounds.upper(i) = hi;
    }
  }

  config.validate(problems);
  if (!problems.empty()) {
    std::string all;
    for (const auto& p : problems) {
      all += p;
      all += '\n';
    }
    throw ConfigError(all);
  }
  return config;
}

namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

}  // namespace

std::string serialize_gains(const ControllerGains& gains) {
  const Eigen::ArrayXd v = encode_gains(gains);
  std::string out = "[gains.drsblf]\n";
  for (int i = 0; i < 16; ++i)
    out += std::string(kDrsGainNames[i]) + " = " + format_value(v(i)) + "\n";
  return out;
}

std::string serialize_gains(const PidGains& gains) {
  const Eigen::ArrayXd v = encode_gains(gains);
  std::string out = "[gains.pid]\n";
  for (int i = 0; i < 7; ++i)
    out += std::string(kPidGainNames[i]) + " = " + format_value(v(i)) + "\n";
  return out;
}

}  // namespace emla
