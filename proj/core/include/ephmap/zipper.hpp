#pragma once

#include "ephmap/config.hpp"
#include "ephmap/descriptor.hpp"
#include "ephmap/gicp.hpp"
#include "ephmap/types.hpp"

#include <string>
#include <vector>

namespace ephmap {

struct ScanAlignmentDiag {
  std::size_t scan_index = 0;
  char pass = 'F';  // 'F' forward, 'B' backward
  int iterations = 0;
  double final_cost = 0.0;
  double inlier_fraction = 0.0;
  bool converged = false;
};

struct AlignedSession {
  Session session;
  std::vector<Pose> refined_poses;   // sensor -> map frame, final
  std::vector<Pose> forward_poses;   // state after the forward sweep
  std::vector<ScanAlignmentDiag> diagnostics;
  std::size_t failed_scans = 0;      // scans whose final pass did not converge
};

std::string diagnostics_to_text(const std::vector<ScanAlignmentDiag>& diags);

// Two-sweep incremental registration seeded at the loop closure. Forward
// covers the matched scan to the end, each converged correction also
// shifting every later initial guess; the backward sweep runs from the end
// through the entire session (scans before the seed are first placed with
// the seed transform) and produces the final poses. Throws AlignmentError
// when more than max_failure_fraction of scans end unconverged.
AlignedSession zipper_align(const AttributedPointCloud& map, Session session,
                            const LoopCandidate& seed,
                            const PipelineConfig& cfg,
                            const GicpSettings& settings = {},
                            double max_failure_fraction = 0.3);

}  // namespace ephmap
