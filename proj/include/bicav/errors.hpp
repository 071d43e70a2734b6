#pragma once

#include <stdexcept>
#include <string>

namespace bicav {

// Configuration / input validation failures. CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failures (integrator breakdown, non-convergent fit, degenerate
// observables). CLI maps these to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bicav
