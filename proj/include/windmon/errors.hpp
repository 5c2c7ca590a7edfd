#pragma once

#include <stdexcept>
#include <string>

namespace windmon {

// Bad user input: config schema violations, malformed files, out-of-range
// arguments. Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: decomposition breakdown, non-finite intermediates.
// Maps to CLI exit code 4.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace windmon
