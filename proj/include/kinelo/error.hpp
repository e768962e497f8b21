#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kinelo {

// Process exit codes used by the CLI. Library code throws; the CLI maps.
enum class ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kCflAbort = 3,
  kNonConvergence = 4,
};

/// Invalid parameters or configuration. `field` names the offending key
/// when one is known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}
  explicit ConfigError(const std::string& what) : ConfigError({}, what) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Time step incompatible with positivity of the explicit scheme, or an
/// undershoot larger than the clipping budget.
class CflError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iteration did not reach its tolerance. Carries the monitored
/// quantity (residual or fixed-point increment) per check.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}

  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace kinelo
