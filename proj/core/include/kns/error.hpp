#pragma once

#include <stdexcept>
#include <string>

namespace kns {

/// Invalid sizes, axes, exponents or other caller-side setup mistakes.
class ConfigurationError : public std::invalid_argument {
 public:
  explicit ConfigurationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A valid request the library refuses to honor (e.g. Stratonovich conversion
/// of a time-dependent transport field).
class UnsupportedModeError : public std::runtime_error {
 public:
  explicit UnsupportedModeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kns
