#pragma once

#include "ephmap/config.hpp"
#include "ephmap/ephemerality.hpp"
#include "ephmap/rays.hpp"
#include "ephmap/types.hpp"

#include <utility>
#include <vector>

namespace ephmap {

enum class RayKind { kOccupied, kFreeSpace };

// Evidence strength as a function of distance between a ray sample and a map
// point. Occupied samples vouch for nearby points (low values), free samples
// testify against them (high values); both decay to the neutral 0.5 plateau
// within roughly 1.27 sigma.
double propagation_kernel(double x, RayKind kind, const PipelineConfig& cfg);

inline double bayes_update_local(double prev_eps_l, double evidence) {
  return bayes_fuse(prev_eps_l, evidence);
}

// Union of all scans posed into the map frame, every point starting at the
// neutral transiency 0.5. compact=false keeps raw per-scan points.
AttributedPointCloud aggregate_session(const Session& session,
                                       const std::vector<Pose>& poses,
                                       const PipelineConfig& cfg,
                                       bool compact = true);

// Updates eps_l in place by replaying every ray sample against the k nearest
// map points. Order is fixed: scans in index order, occupied before free
// within a scan, neighbors by (distance, index); each update immediately
// feeds the next, and extra passes repeat the whole schedule. Neighbor
// lookups are batched across threads, which cannot change results because
// point positions never move.
void propagate_ephemerality(AttributedPointCloud& map,
                            const RaySampleSet& rays,
                            const PipelineConfig& cfg, int passes = 1);

// Splits by eps_l < tau_l: first = kept static points, second = removed
// transients. A point exactly at the threshold is transient.
std::pair<AttributedPointCloud, AttributedPointCloud> extract_static(
    const AttributedPointCloud& map, double tau_l);

}  // namespace ephmap
