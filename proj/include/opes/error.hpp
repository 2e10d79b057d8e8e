#pragma once

#include <stdexcept>
#include <string>

namespace opes {

// Invalid hyperparameters, shapes or names supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Riccati iteration failed to converge.
class UnstabilizableError : public std::runtime_error {
 public:
  explicit UnstabilizableError(const std::string& what)
      : std::runtime_error(what) {}
};

// A metric was requested for an environment that does not support it.
class UnsupportedMetricError : public std::runtime_error {
 public:
  explicit UnsupportedMetricError(const std::string& what)
      : std::runtime_error(what) {}
};

// Malformed input file (checkpoint, config).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace opes
