#pragma once

#include <stdexcept>
#include <string>

namespace trustdecay {

// Precondition violations (bad dimensions, out-of-range parameters) are
// reported as std::invalid_argument. The two types below cover failures
// the CLI maps to distinct exit codes.

// A computation could not produce a finite or converged result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configuration value is missing or malformed. `field()` is the dotted
// key path of the offending entry, e.g. "learner.tdmd.eta".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace trustdecay
