#pragma once

#include <stdexcept>
#include <string>

namespace ephmap {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed input data (sessions, archives, delta files, scene files).
struct ValidationError : Error {
  using Error::Error;
};

// Filesystem and serialization failures.
struct IoError : Error {
  using Error::Error;
};

// No anchor/session scan pair passed the descriptor similarity gate.
struct LoopNotFoundError : Error {
  using Error::Error;
};

// The registration problem does not constrain all six degrees of freedom.
struct DegenerateGeometryError : Error {
  DegenerateGeometryError(const std::string& msg, double condition)
      : Error(msg), condition(condition) {}
  double condition = 0.0;
};

// Too many scans failed to converge during incremental alignment.
struct AlignmentError : Error {
  AlignmentError(const std::string& msg, std::string diagnostics)
      : Error(msg), diagnostics(std::move(diagnostics)) {}
  std::string diagnostics;
};

}  // namespace ephmap
