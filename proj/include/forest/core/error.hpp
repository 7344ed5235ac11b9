#pragma once

#include <stdexcept>
#include <string>

namespace forest {

/// Bad or malformed input data (files, labelings, dimension mismatches). CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration value. CLI exit code 3.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A data-model invariant was violated. CLI exit code 4.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace forest
