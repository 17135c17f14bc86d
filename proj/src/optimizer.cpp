#include "emla/optimizer.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

namespace emla {

void GainBounds::validate(std::vector<std::string>& problems) const {
  if (lower.size() != upper.size() || lower.size() == 0) {
    problems.push_back("[jaya] bounds must be present for every gain");
    return;
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower(i) > 0.0))
      problems.push_back("[jaya] lower bound " + std::to_string(i) +
                         " must be strictly positive");
    if (!(upper(i) > lower(i)))
      problems.push_back("[jaya] upper bound " + std::to_string(i) +
                         " must exceed the lower bound");
  }
}

void JayaConfig::validate(std::vector<std::string>& problems) const {
  if (population < 3) problems.push_back("[jaya] population must be >= 3");
  if (generations < 0) problems.push_back("[jaya] generations must be >= 0");
  if (retry_limit < 0) problems.push_back("[jaya] retry_limit must be >= 0");
  if (jobs < 1) problems.push_back("[jaya] jobs must be >= 1");
  bounds.validate(problems);
}

void Population::refresh_extremes() {
  best_index = 0;
  worst_index = 0;
  for (size_t i = 1; i < members.size(); ++i) {
    if (members[i].fx < members[static_cast<size_t>(best_index)].fx)
      best_index = static_cast<int>(i);
    if (members[i].fx > members[static_cast<size_t>(worst_index)].fx)
      worst_index = static_cast<int>(i);
  }
}

Eigen::ArrayXd encode_gains(const ControllerGains& g) {
  Eigen::ArrayXd v(16);
  v << g.beta(0), g.beta(1), g.beta(2), g.beta(3), g.kappa(0), g.kappa(1),
      g.kappa(2), g.kappa(3), g.zeta(0), g.zeta(1), g.zeta(2), g.zeta(3),
      g.epsilon(0), g.epsilon(1), g.epsilon(2), g.epsilon(3);
  return v;
}

ControllerGains decode_drs_gains(const Eigen::ArrayXd& v) {
  ControllerGains g;
  for (int j = 0; j < 4; ++j) {
    g.beta(j) = v(j);
    g.kappa(j) = v(4 + j);
    g.zeta(j) = v(8 + j);
    g.epsilon(j) = v(12 + j);
  }
  return g;
}

Eigen::ArrayXd encode_gains(const PidGains& g) {
  Eigen::ArrayXd v(7);
  v << g.kp_pos, g.kp_vel, g.ki_vel, g.kp_iq, g.ki_iq, g.kp_id, g.ki_id;
  return v;
}

PidGains decode_pid_gains(const Eigen::ArrayXd& v) {
  return PidGains{v(0), v(1), v(2), v(3), v(4), v(5), v(6)};
}

int gain_dimension(ControllerKind kind) {
  return kind == ControllerKind::drsblf ? 16 : 7;
}

double objective(const Eigen::ArrayXd& gains, const Scenario& scenario,
                 ControllerKind kind) {
  Scenario candidate_scenario = scenario;
  candidate_scenario.controller = kind;
  if (kind == ControllerKind::drsblf)
    candidate_scenario.drs_gains = decode_drs_gains(gains);
  else
    candidate_scenario.pid_gains = decode_pid_gains(gains);

  const RunResult result = run(candidate_scenario);
  if (result.completed()) {
    const double fx = tracking_error_norm(result.trace);
    if (std::isfinite(fx)) return fx;
    return 1e6;
  }
  const double remaining =
      std::max(0.0, (scenario.duration - result.stop_time) / scenario.duration);
  return 1e6 * (1.0 + remaining);
}

namespace {

// splitmix64; decorrelates the (seed, generation, candidate) tags
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

SubstreamRng::SubstreamRng(std::uint64_t seed, std::uint64_t generation,
                           std::uint64_t candidate)
    : state_(mix64(mix64(mix64(seed) ^ generation) ^ candidate)) {}

double SubstreamRng::uniform01() {
  state_ = mix64(state_);
  return static_cast<double>(state_ >> 11) * 0x1.0p-53;
}

Eigen::ArrayXd jaya_update_with(const Eigen::ArrayXd& candidate,
                                const Eigen::ArrayXd& best,
                                const Eigen::ArrayXd& worst,
                                const Eigen::ArrayXd& r1,
                                const Eigen::ArrayXd& r2) {
  return candidate + r1 * (best - candidate) - r2 * (worst - candidate);
}

Eigen::ArrayXd jaya_update(const Eigen::ArrayXd& candidate,
                           const Eigen::ArrayXd& best,
                           const Eigen::ArrayXd& worst, SubstreamRng& rng,
                           const GainBounds& bounds, int retry_limit) {
  const Eigen::Index n = candidate.size();
  Eigen::ArrayXd r1(n), r2(n), next(n);
  for (int attempt = 0;; ++attempt) {
    for (Eigen::Index i = 0; i < n; ++i) r1(i) = rng.uniform01();
    for (Eigen::Index i = 0; i < n; ++i) r2(i) = rng.uniform01();
    next = jaya_update_with(candidate, best, worst, r1, r2);
    if ((next > 0.0).all()) return next;
    if (attempt >= retry_limit) break;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(next(i) > 0.0)) next(i) = bounds.lower(i);
  return next;
}

namespace {

using ObjectiveFn = std::function<double(const Eigen::ArrayXd&)>;

// Evaluate by index into a pre-sized result vector; results are
// independent of the worker count and scheduling.
std::vector<double> evaluate_all(const std::vector<Eigen::ArrayXd>& gains,
                                 const ObjectiveFn& fx, int jobs) {
  std::vector<double> values(gains.size(), 0.0);
  const int workers =
      std::min<int>(jobs, static_cast<int>(gains.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < gains.size(); ++i) values[i] = fx(gains[i]);
    return values;
  }
  std::atomic<size_t> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = cursor.fetch_add(1); i < gains.size();
           i = cursor.fetch_add(1))
        values[i] = fx(gains[i]);
    });
  }
  for (auto& t : pool) t.join();
  return values;
}

GenerationStat make_stat(int generation, const Population& pop) {
  GenerationStat s;
  s.generation = generation;
  s.best_fx = pop.best().fx;
  s.worst_fx = pop.worst().fx;
  double sum = 0.0;
  for (const auto& c : pop.members) sum += c.fx;
  s.mean_fx = sum / static_cast<double>(pop.members.size());
  return s;
}

OptimizeResult run_jaya(const JayaConfig& config, const ObjectiveFn& fx,
                        const Eigen::ArrayXd* warm_start_gains) {
  std::vector<std::string> problems;
  config.validate(problems);
  if (!problems.empty()) {
    std::string all;
    for (const auto& p : problems) all += p + "\n";
    throw ConfigError(all);
  }

  const Eigen::Index dim = config.bounds.lower.size();
  const auto n = static_cast<size_t>(config.population);

  // log-uniform initial population: the gains span several decades
  Population pop;
  pop.members.resize(n);
  std::vector<Eigen::ArrayXd> initial(n);
  for (size_t l = 0; l < n; ++l) {
    SubstreamRng rng(config.seed, 0, l);
    Eigen::ArrayXd g(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double lo = std::log(config.bounds.lower(i));
      const double hi = std::log(config.bounds.upper(i));
      g(i) = std::exp(lo + rng.uniform01() * (hi - lo));
    }
    initial[l] = g;
  }
  if (warm_start_gains != nullptr) initial[0] = *warm_start_gains;

  const std::vector<double> initial_fx =
      evaluate_all(initial, fx, config.jobs);
  for (size_t l = 0; l < n; ++l) {
    pop.members[l].gains = initial[l];
    pop.members[l].fx = initial_fx[l];
    pop.members[l].penalized = initial_fx[l] >= 1e6;
  }
  pop.refresh_extremes();

  OptimizeResult result;
  result.history.reserve(static_cast<size_t>(config.generations) + 1);
  result.history.push_back(make_stat(0, pop));

  for (int gen = 1; gen <= config.generations; ++gen) {
    const Eigen::ArrayXd best = pop.best().gains;
    const Eigen::ArrayXd worst = pop.worst().gains;

    std::vector<Eigen::ArrayXd> proposals(n);
    for (size_t l = 0; l < n; ++l) {
      SubstreamRng rng(config.seed, static_cast<std::uint64_t>(gen), l);
      proposals[l] = jaya_update(pop.members[l].gains, best, worst, rng,
                                 config.bounds, config.retry_limit);
    }

    const std::vector<double> values =
        evaluate_all(proposals, fx, config.jobs);
    for (size_t l = 0; l < n; ++l) {
      if (values[l] < pop.members[l].fx) {
        pop.members[l].gains = proposals[l];
        pop.members[l].fx = values[l];
        pop.members[l].penalized = values[l] >= 1e6;
      }
    }
    pop.refresh_extremes();
    result.history.push_back(make_stat(gen, pop));
  }

  result.best = pop.best();
  return result;
}

}  // namespace

OptimizeResult optimize(const JayaConfig& config, const Scenario& scenario,
                        ControllerKind kind) {
  const Eigen::ArrayXd warm = kind == ControllerKind::drsblf
                                  ? encode_gains(scenario.drs_gains)
                                  : encode_gains(scenario.pid_gains);
  const ObjectiveFn fx = [&scenario, kind](const Eigen::ArrayXd& gains) {
    return objective(gains, scenario, kind);
  };
  return run_jaya(config, fx, config.warm_start ? &warm : nullptr);
}

OptimizeResult optimize_function(const JayaConfig& config,
                                 const ObjectiveFn& fx) {
  return run_jaya(config, fx, nullptr);
}

void write_convergence_csv(std::ostream& os,
                           const std::vector<GenerationStat>& history) {
  os << "generation,best_fx,mean_fx,worst_fx\n";
  os.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& s : history)
    os << s.generation << ',' << s.best_fx << ',' << s.mean_fx << ','
       << s.worst_fx << '\n';
}

}  // namespace emla
