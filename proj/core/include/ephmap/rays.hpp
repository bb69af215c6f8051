#pragma once

#include "ephmap/types.hpp"

#include <cstdint>
#include <vector>

namespace ephmap {

// Free samples stop this far short of the endpoint so surface points never
// receive free-space evidence from their own ray.
inline constexpr double kEndpointMargin = 0.5;

// Ray evidence for one or more scans, expressed in the map frame. Occupied
// samples are the transformed endpoints; free samples lie along each ray at
// multiples of the sampling step. Samples keep scan order: all samples of
// scan i precede those of scan i+1, and per-sample scan ids delimit the
// ranges.
struct RaySampleSet {
  std::vector<Point3> occupied;
  std::vector<std::uint32_t> occupied_scan;
  std::vector<Point3> free;
  std::vector<std::uint32_t> free_scan;

  std::size_t sample_count() const { return occupied.size() + free.size(); }
  void append(const RaySampleSet& other);
};

// Samples one scan posed in the map frame. Free samples for a ray of length
// range sit at step, 2*step, ... strictly below range - kEndpointMargin.
// Zero-length rays produce no samples at all.
RaySampleSet sample_rays(const Scan& scan, const Pose& pose, double step,
                         std::uint32_t scan_id = 0);

// All scans of a session against their poses, concatenated in scan order.
RaySampleSet sample_session_rays(const Session& session,
                                 const std::vector<Pose>& poses, double step);

}  // namespace ephmap
