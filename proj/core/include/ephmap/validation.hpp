#pragma once

#include "ephmap/config.hpp"
#include "ephmap/types.hpp"

#include <string>
#include <vector>

namespace ephmap {

struct ValidationIssue {
  std::string code;     // stable machine-readable tag
  std::string message;  // human explanation with indices
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

// Structural checks on an in-memory session: matching scan/pose counts,
// nonempty finite scans, ranges within max_range, strictly increasing
// timestamps, orthonormal poses.
ValidationReport validate_session(const Session& session,
                                  const PipelineConfig& config);

// Convenience: throws ValidationError with the full report when not ok.
void require_valid_session(const Session& session,
                           const PipelineConfig& config);

}  // namespace ephmap
