#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string command =
      std::string(EMLA_CTRL_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

fs::path scenario(const char* name) {
  return fs::path(EMLA_SCENARIO_DIR) / name;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("emla_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("plan writes a profile and exits cleanly") {
  TempDir out;
  const int code = run_cli("plan --scenario " +
                           scenario("desk_track.cfg").string() + " --out " +
                           out.path.string());
  CHECK(code == 0);
  const std::string csv = slurp(out.path / "trajectory.csv");
  CHECK(csv.rfind("t,pos,vel,acc,jerk", 0) == 0);
  // rest-to-rest midpoint of the first 3 s segment reaches half amplitude
  CHECK(csv.find("\n1.5,") != std::string::npos);
}

TEST_CASE("plan rejects unordered waypoints with exit 2") {
  TempDir out;
  const fs::path bad = out.path / "bad.cfg";
  std::ofstream(bad) << "[trajectory]\n0 0 0 0\n2 1 0 0\n1 0 0 0\n";
  CHECK(run_cli("plan --scenario " + bad.string() + " --out " +
                out.path.string()) == 2);
}

TEST_CASE("plan rejects a missing file with exit 2") {
  TempDir out;
  CHECK(run_cli("plan --scenario /nonexistent.cfg --out " +
                out.path.string()) == 2);
}

TEST_CASE("simulate produces trace and metrics") {
  TempDir out;
  const int code = run_cli("simulate --scenario " +
                           scenario("desk_hold.cfg").string() + " --out " +
                           out.path.string() + " --quiet");
  CHECK(code == 0);
  CHECK(fs::exists(out.path / "trace.csv"));
  const std::string metrics = slurp(out.path / "metrics.txt");
  CHECK(metrics.find("position_rms_m = ") != std::string::npos);
  CHECK(metrics.find("Torque effort RMS") != std::string::npos);
}

TEST_CASE("simulate with the pid flag uses the baseline") {
  TempDir out;
  const int code = run_cli("simulate --scenario " +
                           scenario("desk_hold.cfg").string() +
                           " --controller pid --out " + out.path.string() +
                           " --quiet");
  CHECK(code == 0);
  CHECK(fs::exists(out.path / "metrics.txt"));
}

TEST_CASE("an envelope too tight for the initial error exits 3") {
  TempDir out;
  // initial position offset beyond rho1
  std::string content = slurp(scenario("desk_hold.cfg"));
  const auto pos = content.find("initial_position = 0.005");
  REQUIRE(pos != std::string::npos);
  content.replace(pos, std::string("initial_position = 0.005").size(),
                  "initial_position = 0.02");
  const fs::path tight = out.path / "tight.cfg";
  std::ofstream(tight) << content;
  CHECK(run_cli("simulate --scenario " + tight.string() + " --out " +
                out.path.string() + " --quiet") == 3);
}

TEST_CASE("a numerically exploding run exits 4") {
  TempDir out;
  std::string content = slurp(scenario("desk_hold.cfg"));
  content += "\n[sim]\ncontroller = pid\ninitial_velocity = 1e160\n"
             "initial_current_q = 1e160\n";
  const fs::path unstable = out.path / "unstable.cfg";
  std::ofstream(unstable) << content;
  CHECK(run_cli("simulate --scenario " + unstable.string() + " --out " +
                out.path.string() + " --quiet") == 4);
}

TEST_CASE("optimize is reproducible for a fixed seed") {
  TempDir out_a, out_b;
  const std::string base = "optimize --scenario " +
                           scenario("desk_hold_jaya.cfg").string() +
                           " --generations 3 --seed 11 --quiet --jobs 2";
  CHECK(run_cli(base + " --out " + out_a.path.string()) == 0);
  CHECK(run_cli(base + " --out " + out_b.path.string()) == 0);
  CHECK(slurp(out_a.path / "convergence.csv") ==
        slurp(out_b.path / "convergence.csv"));
  CHECK(slurp(out_a.path / "best_gains.cfg") ==
        slurp(out_b.path / "best_gains.cfg"));
  CHECK(slurp(out_a.path / "best_gains.cfg").rfind("[gains.drsblf]", 0) == 0);
}

TEST_CASE("optimize honors the env seed fallback") {
  TempDir out_a, out_b;
  const std::string base = "optimize --scenario " +
                           scenario("desk_hold_jaya.cfg").string() +
                           " --generations 2 --quiet";
  const std::string env = "EMLA_CTRL_SEED=99 ";
  const int status_a = std::system(
      (env + std::string(EMLA_CTRL_BIN) + " " + base + " --out " +
       out_a.path.string() + " > /dev/null 2>&1")
          .c_str());
  const int status_b = std::system(
      (env + std::string(EMLA_CTRL_BIN) + " " + base + " --out " +
       out_b.path.string() + " > /dev/null 2>&1")
          .c_str());
  REQUIRE(WIFEXITED(status_a));
  REQUIRE(WEXITSTATUS(status_a) == 0);
  REQUIRE(WIFEXITED(status_b));
  REQUIRE(WEXITSTATUS(status_b) == 0);
  CHECK(slurp(out_a.path / "convergence.csv") ==
        slurp(out_b.path / "convergence.csv"));
}

TEST_CASE("zero-generation optimize echoes an initial candidate") {
  TempDir out;
  CHECK(run_cli("optimize --scenario " +
                scenario("desk_hold_jaya.cfg").string() +
                " --generations 0 --seed 5 --quiet --out " +
                out.path.string()) == 0);
  const std::string csv = slurp(out.path / "convergence.csv");
  CHECK(csv.rfind("generation,best_fx,mean_fx,worst_fx", 0) == 0);
  // header plus exactly one generation row
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("compare emits the four-criteria table") {
  TempDir out;
  const int code = run_cli("compare --scenario " +
                           scenario("desk_hold_jaya.cfg").string() +
                           " --generations 2 --seed 3 --quiet --jobs 2 --out " +
                           out.path.string());
  CHECK(code == 0);
  const std::string table = slurp(out.path / "comparison.txt");
  CHECK(table.find("Convergence Criteria") != std::string::npos);
  CHECK(table.find("DRS-BLF Control") != std::string::npos);
  CHECK(table.find("PID Control") != std::string::npos);
  CHECK(table.find("Position error (m)") != std::string::npos);
  CHECK(table.find("Velocity error (m/s)") != std::string::npos);
  CHECK(table.find("Torque effort (N.m)") != std::string::npos);
  CHECK(table.find("Convergence speed (s)") != std::string::npos);
  CHECK(fs::exists(out.path / "trace_drsblf.csv"));
  CHECK(fs::exists(out.path / "trace_pid.csv"));
  CHECK(fs::exists(out.path / "best_gains_drsblf.cfg"));
  CHECK(fs::exists(out.path / "best_gains_pid.cfg"));
}
