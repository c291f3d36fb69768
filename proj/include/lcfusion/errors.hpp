#pragma once

#include <stdexcept>
#include <string>

namespace lcf {

/// Invalid configuration (bad threshold ranges, malformed config file,
/// missing camera for a declared view). CLI exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or missing input data (parse errors, frame mismatches).
/// CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Degenerate geometric input (coincident camera centers, ...).
struct GeometryError : std::runtime_error {
  explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lcf
