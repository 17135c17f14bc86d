#pragma once

#include <stdexcept>
#include <string>

namespace emla {

/// Scenario/configuration input rejected. Carries every problem found,
/// one per line, so callers can report them all at once.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A state, derivative, or solve produced a non-finite or unusable value.
class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what, int subsystem = 0)
      : std::runtime_error(what), subsystem_(subsystem) {}
  /// 1-based subsystem index when the failure is tied to one, else 0.
  int subsystem() const { return subsystem_; }

 private:
  int subsystem_;
};

/// A barrier error left its admissible set |e_j| < rho_j.
class BarrierViolation : public std::runtime_error {
 public:
  BarrierViolation(int subsystem, double error, double rho)
      : std::runtime_error("barrier violation in subsystem " +
                           std::to_string(subsystem) + ": |e| = " +
                           std::to_string(std::abs(error)) +
                           " >= rho = " + std::to_string(rho)),
        subsystem_(subsystem),
        error_(error),
        rho_(rho) {}

  int subsystem() const { return subsystem_; }  // 1-based
  double error() const { return error_; }
  double rho() const { return rho_; }

 private:
  int subsystem_;
  double error_;
  double rho_;
};

}  // namespace emla
