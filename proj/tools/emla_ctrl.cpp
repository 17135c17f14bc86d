// Command-line front end: plan trajectories, run closed-loop simulations,
// tune gains, and compare controllers on one scenario file.
//
// Exit codes: 0 success, 2 input error, 3 runtime constraint violation,
// 4 internal numeric failure.

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "emla/config.hpp"
#include "emla/optimizer.hpp"
#include "emla/sim.hpp"

namespace fs = std::filesystem;
using namespace emla;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitViolation = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
  std::string scenario_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> generations;
  int jobs = 0;  // 0 = hardware concurrency
  bool quiet = false;

  std::optional<std::uint64_t> effective_seed() const {
    if (seed) return seed;
    if (const char* env = std::getenv("EMLA_CTRL_SEED")) {
      std::uint64_t v = 0;
      const char* end = env + std::string_view(env).size();
      if (std::from_chars(env, end, v).ec == std::errc()) return v;
    }
    return std::nullopt;
  }

  int effective_jobs() const {
    if (jobs > 0) return jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
  }
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError(path.string() + ": cannot open for writing\n");
  return os;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw ConfigError(dir + ": cannot create output directory (" +
                      ec.message() + ")\n");
}

void apply_overrides(const CommonOptions& opt, ScenarioFile& file) {
  if (const auto seed = opt.effective_seed()) {
    file.scenario.seed = *seed;
    file.jaya_seed = *seed;
  }
  if (opt.generations) file.jaya_generations = *opt.generations;
}

void print_envelope_report(const EnvelopeReport& report, bool quiet) {
  if (quiet) return;
  for (const auto& e : report.entries) {
    std::cout << "envelope check: subsystem " << e.subsystem << ": ";
    switch (e.status) {
      case EnvelopeReport::Status::pass:
        std::cout << "ok (worst " << e.worst_value << ", allowance "
                  << e.allowance << ")";
        break;
      case EnvelopeReport::Status::violated:
        std::cout << "VIOLATED at t = " << e.first_violation_time
                  << " (worst " << e.worst_value << " vs allowance "
                  << e.allowance << ")";
        break;
      case EnvelopeReport::Status::runtime_monitored:
        std::cout << "runtime-monitored";
        break;
    }
    if (!e.note.empty()) std::cout << " [" << e.note << "]";
    std::cout << "\n";
  }
}

int cmd_plan(const CommonOptions& opt, double sample_rate) {
  const PiecewiseTrajectory traj = load_trajectory_file(opt.scenario_path);
  ensure_out_dir(opt.out_dir);

  auto csv = open_output(fs::path(opt.out_dir) / "trajectory.csv");
  csv << "t,pos,vel,acc,jerk\n";
  csv.precision(17);
  const long samples = std::lround(traj.duration() * sample_rate);
  for (long k = 0; k <= samples; ++k) {
    const double t =
        traj.start_time() + static_cast<double>(k) / sample_rate;
    const TrajectorySample s = traj.eval(t);
    csv << t << ',' << s.position << ',' << s.velocity << ','
        << s.acceleration << ',' << s.jerk << '\n';
  }

  if (!opt.quiet) {
    std::cout << "segments: " << traj.segments.size() << "\n"
              << "duration: " << traj.duration() << " s\n"
              << "max |jerk|: " << traj.max_abs_jerk() << " m/s^3\n";
    for (size_t i = 0; i < traj.segments.size(); ++i)
      std::cout << "  segment " << i << " [" << traj.segments[i].t_start
                << ", " << traj.segments[i].t_end << "] max |jerk| "
                << traj.segments[i].max_abs_jerk() << "\n";
  }
  return kExitOk;
}

int run_and_report(const Scenario& scenario, const CommonOptions& opt,
                   const std::string& label) {
  const EnvelopeReport env_report = envelope_check(
      scenario.trajectory, scenario.envelope, scenario.duration,
      scenario.control_rate, scenario.limits,
      scenario.plant.torque_constant());
  print_envelope_report(env_report, opt.quiet);

  for (const auto& warning :
       scenario.drs_gains.discrete_positivity_report(scenario.control_period()))
    if (!opt.quiet) std::cout << "note: " << warning << "\n";

  const RunResult result = run(scenario);

  const std::string suffix = label.empty() ? "" : "_" + label;
  {
    auto csv = open_output(fs::path(opt.out_dir) / ("trace" + suffix + ".csv"));
    write_trace_csv(csv, result.trace);
  }

  if (!result.completed()) {
    std::cerr << "run stopped at t = " << result.stop_time << ": "
              << result.message << "\n";
    return result.outcome == RunOutcome::barrier_violation ? kExitViolation
                                                           : kExitNumeric;
  }

  const Metrics metrics =
      compute_metrics(result.trace, scenario.convergence_band);
  const std::string table = format_metrics_table(metrics);
  const std::string kv = format_metrics_kv(metrics);
  if (!opt.quiet) std::cout << table << "\n" << kv;
  auto metrics_file =
      open_output(fs::path(opt.out_dir) / ("metrics" + suffix + ".txt"));
  metrics_file << table << "\n" << kv;
  return kExitOk;
}

int cmd_simulate(const CommonOptions& opt,
                 const std::optional<std::string>& controller) {
  ScenarioFile file = load_scenario_file(opt.scenario_path);
  apply_overrides(opt, file);
  if (controller) {
    if (*controller == "drsblf")
      file.scenario.controller = ControllerKind::drsblf;
    else
      file.scenario.controller = ControllerKind::pid;
  }
  ensure_out_dir(opt.out_dir);
  return run_and_report(file.scenario, opt, "");
}

int cmd_optimize(const CommonOptions& opt,
                 const std::optional<std::string>& controller) {
  ScenarioFile file = load_scenario_file(opt.scenario_path);
  apply_overrides(opt, file);
  const ControllerKind kind = (controller && *controller == "pid")
                                  ? ControllerKind::pid
                                  : ControllerKind::drsblf;

  JayaConfig config = build_jaya_config(file, kind);
  config.jobs = opt.effective_jobs();
  ensure_out_dir(opt.out_dir);

  const OptimizeResult result = optimize(config, file.scenario, kind);

  if (!opt.quiet)
    for (const auto& s : result.history)
      std::cout << "generation " << s.generation << ": best f_x = "
                << s.best_fx << "\n";

  {
    auto csv = open_output(fs::path(opt.out_dir) / "convergence.csv");
    write_convergence_csv(csv, result.history);
  }
  {
    auto gains_file = open_output(fs::path(opt.out_dir) / "best_gains.cfg");
    if (kind == ControllerKind::drsblf)
      gains_file << serialize_gains(decode_drs_gains(result.best.gains));
    else
      gains_file << serialize_gains(decode_pid_gains(result.best.gains));
  }
  if (!opt.quiet)
    std::cout << "best f_x = " << result.best.fx << " (gains written to "
              << (fs::path(opt.out_dir) / "best_gains.cfg").string() << ")\n";
  return kExitOk;
}

int cmd_compare(const CommonOptions& opt) {
  ScenarioFile file = load_scenario_file(opt.scenario_path);
  apply_overrides(opt, file);
  ensure_out_dir(opt.out_dir);

  struct Column {
    ControllerKind kind;
    Metrics metrics;
  };
  std::vector<Column> columns;

  for (const ControllerKind kind :
       {ControllerKind::drsblf, ControllerKind::pid}) {
    JayaConfig config = build_jaya_config(file, kind);
    config.jobs = opt.effective_jobs();
    const OptimizeResult tuned = optimize(config, file.scenario, kind);

    Scenario best = file.scenario;
    best.controller = kind;
    if (kind == ControllerKind::drsblf)
      best.drs_gains = decode_drs_gains(tuned.best.gains);
    else
      best.pid_gains = decode_pid_gains(tuned.best.gains);

    const RunResult result = run(best);
    if (!result.completed()) {
      std::cerr << "tuned " << controller_name(kind) << " run stopped at t = "
                << result.stop_time << ": " << result.message << "\n";
      return result.outcome == RunOutcome::barrier_violation ? kExitViolation
                                                             : kExitNumeric;
    }

    {
      auto csv = open_output(fs::path(opt.out_dir) /
                             ("trace_" + std::string(controller_name(kind)) +
                              ".csv"));
      write_trace_csv(csv, result.trace);
    }
    {
      auto gains_file =
          open_output(fs::path(opt.out_dir) /
                      ("best_gains_" + std::string(controller_name(kind)) +
                       ".cfg"));
      if (kind == ControllerKind::drsblf)
        gains_file << serialize_gains(decode_drs_gains(tuned.best.gains));
      else
        gains_file << serialize_gains(decode_pid_gains(tuned.best.gains));
    }
    columns.push_back({kind, compute_metrics(result.trace,
                                             file.scenario.convergence_band)});
  }

  std::ostringstream table;
  table.precision(4);
  auto row = [&](const std::string& name, double a, double b) {
    table << name;
    for (size_t i = name.size(); i < 26; ++i) table << ' ';
    std::ostringstream va, vb;
    va.precision(4);
    vb.precision(4);
    va << a;
    vb << b;
    table << va.str();
    for (size_t i = va.str().size(); i < 18; ++i) table << ' ';
    table << vb.str() << "\n";
  };
  table << "Convergence Criteria      DRS-BLF Control   PID Control\n";
  row("Position error (m)", columns[0].metrics.position_rms,
      columns[1].metrics.position_rms);
  row("Velocity error (m/s)", columns[0].metrics.velocity_rms,
      columns[1].metrics.velocity_rms);
  row("Torque effort (N.m)", columns[0].metrics.torque_rms,
      columns[1].metrics.torque_rms);
  row("Convergence speed (s)", columns[0].metrics.convergence_time,
      columns[1].metrics.convergence_time);

  std::cout << table.str();
  auto out = open_output(fs::path(opt.out_dir) / "comparison.txt");
  out << table.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PMSM linear-actuator control toolkit"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::optional<std::string> controller;
  double plan_rate = 1000.0;

  auto add_common = [&](CLI::App* cmd, bool with_controller) {
    cmd->add_option("--scenario", opt.scenario_path, "scenario file")
        ->required();
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--seed", opt.seed, "seed override (or EMLA_CTRL_SEED)");
    cmd->add_option("--jobs", opt.jobs, "max concurrent evaluations");
    cmd->add_flag("--quiet", opt.quiet, "suppress progress output");
    if (with_controller)
      cmd->add_option("--controller", controller, "drsblf or pid")
          ->check(CLI::IsMember({"drsblf", "pid"}));
  };

  auto* plan = app.add_subcommand("plan", "build a trajectory profile");
  add_common(plan, false);
  plan->add_option("--rate", plan_rate, "profile sample rate, Hz");

  auto* simulate = app.add_subcommand("simulate", "run one closed loop");
  add_common(simulate, true);

  auto* optimize_cmd = app.add_subcommand("optimize", "tune gains");
  add_common(optimize_cmd, true);
  optimize_cmd->add_option("--generations", opt.generations,
                           "generation count override");

  auto* compare = app.add_subcommand("compare",
                                     "tune and compare both controllers");
  add_common(compare, false);
  compare->add_option("--generations", opt.generations,
                      "generation count override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) return cmd_plan(opt, plan_rate);
    if (simulate->parsed()) return cmd_simulate(opt, controller);
    if (optimize_cmd->parsed()) return cmd_optimize(opt, controller);
    if (compare->parsed()) return cmd_compare(opt);
  } catch (const ConfigError& e) {
    std::cerr << e.what();
    return kExitInput;
  } catch (const BarrierViolation& e) {
    std::cerr << e.what() << "\n";
    return kExitViolation;
  } catch (const NumericFailure& e) {
    std::cerr << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
