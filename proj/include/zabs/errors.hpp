#pragma once

#include <stdexcept>
#include <string>

namespace zabs {

// Bad model configuration (unknown link, malformed formula, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad data (missing cells, negative responses, unknown columns, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (quadrature non-convergence, singular system, ...).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Fisher scoring exhausted its iteration budget. The caller can still
// inspect the trace carried by the FitResult attached to the fitter.
class NonConvergence : public std::runtime_error {
 public:
  explicit NonConvergence(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace zabs
