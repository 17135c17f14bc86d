#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "emla/sim.hpp"

namespace emla {

/// Per-dimension search box. The lower bounds double as the positivity
/// clamp when the repair loop runs out of retries; candidates may
/// otherwise leave the box during the search as long as they stay
/// strictly positive.
struct GainBounds {
  Eigen::ArrayXd lower;
  Eigen::ArrayXd upper;

  void validate(std::vector<std::string>& problems) const;
};

struct JayaConfig {
  int population = 15;
  int generations = 0;
  std::uint64_t seed = 0;
  int retry_limit = 100;  // positivity-repair redraws per candidate
  GainBounds bounds;
  bool warm_start = false;  // pin candidate 0 to the scenario's gains
  int jobs = 1;             // concurrent objective evaluations

  void validate(std::vector<std::string>& problems) const;
};

struct Candidate {
  Eigen::ArrayXd gains;
  double fx = 0.0;
  bool penalized = false;
};

struct Population {
  std::vector<Candidate> members;
  int best_index = 0;
  int worst_index = 0;

  void refresh_extremes();
  const Candidate& best() const { return members[static_cast<size_t>(best_index)]; }
  const Candidate& worst() const { return members[static_cast<size_t>(worst_index)]; }
};

struct GenerationStat {
  int generation = 0;
  double best_fx = 0.0;
  double mean_fx = 0.0;
  double worst_fx = 0.0;
};

struct OptimizeResult {
  Candidate best;
  std::vector<GenerationStat> history;  // one row per generation, 0 = initial
};

/// Gain vector layout: [beta1..4, kappa1..4, zeta1..4, epsilon1..4].
Eigen::ArrayXd encode_gains(const ControllerGains& g);
ControllerGains decode_drs_gains(const Eigen::ArrayXd& v);

/// Gain vector layout: [kp_pos, kp_vel, ki_vel, kp_iq, ki_iq, kp_id, ki_id].
Eigen::ArrayXd encode_gains(const PidGains& g);
PidGains decode_pid_gains(const Eigen::ArrayXd& v);

int gain_dimension(ControllerKind kind);

/// Closed-loop objective: the tracking-error norm of a run with the
/// candidate gains installed. Aborted runs return a finite penalty of
/// 1e6 * (1 + fraction of the horizon left unsimulated), which dominates
/// every feasible objective. Never throws.
double objective(const Eigen::ArrayXd& gains, const Scenario& scenario,
                 ControllerKind kind);

/// Deterministic uniform doubles in [0, 1); one independent stream per
/// (seed, generation, candidate).
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t generation,
               std::uint64_t candidate);
  double uniform01();

 private:
  std::uint64_t state_;
};

/// Candidate move toward the best and away from the worst, element-wise:
///   c' = c + r1 (best - c) - r2 (worst - c)
/// with fresh r vectors redrawn while any component is non-positive, up to
/// retry_limit, after which offending components clamp to the lower bound.
Eigen::ArrayXd jaya_update(const Eigen::ArrayXd& candidate,
                           const Eigen::ArrayXd& best,
                           const Eigen::ArrayXd& worst, SubstreamRng& rng,
                           const GainBounds& bounds, int retry_limit);

/// Deterministic variant with caller-supplied random vectors (no repair).
Eigen::ArrayXd jaya_update_with(const Eigen::ArrayXd& candidate,
                                const Eigen::ArrayXd& best,
                                const Eigen::ArrayXd& worst,
                                const Eigen::ArrayXd& r1,
                                const Eigen::ArrayXd& r2);

/// Synchronous Jaya: all moves in a generation are taken against the
/// generation-start best/worst, evaluated (possibly concurrently), then
/// greedily accepted; best/worst refresh at the generation barrier, so
/// results are independent of evaluation order.
OptimizeResult optimize(const JayaConfig& config, const Scenario& scenario,
                        ControllerKind kind);

/// Same loop against an arbitrary objective; the simulation objective is
/// a special case and benchmark functions plug in directly.
OptimizeResult optimize_function(
    const JayaConfig& config,
    const std::function<double(const Eigen::ArrayXd&)>& fx);

void write_convergence_csv(std::ostream& os,
                           const std::vector<GenerationStat>& history);

}  // namespace emla
