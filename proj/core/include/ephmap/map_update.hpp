#pragma once

#include "ephmap/config.hpp"
#include "ephmap/coverage.hpp"
#include "ephmap/ephemerality.hpp"
#include "ephmap/kdtree.hpp"
#include "ephmap/types.hpp"
#include "ephmap/voxel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ephmap {

// How a point relates to the other side of a map/session pair.
enum class PointCategory : std::uint8_t {
  kCoexisting = 0,      // matched across both
  kDeleted = 1,         // map point gone from a region the session saw
  kEmerged = 2,         // session point new in a region the map knew
  kPrevExploredOnly = 3,  // map point outside current coverage
  kNewlyExplored = 4,     // session point outside previous coverage
};

const char* to_string(PointCategory category);
PointCategory parse_category(const std::string& token);

struct Classification {
  // Parallel to the map cloud: kCoexisting, kDeleted or kPrevExploredOnly,
  // plus the matched session index for coexisting points (-1 otherwise).
  std::vector<PointCategory> map_categories;
  std::vector<std::ptrdiff_t> map_match;
  // Parallel to the session cloud: kCoexisting, kEmerged or kNewlyExplored.
  std::vector<PointCategory> session_categories;
  std::vector<std::ptrdiff_t> session_match;
};

// Mutual nearest-within-radius matching plus coverage lookups. Both grids
// must be valid; the previous grid tells emerged from newly explored, the
// current grid tells deleted from merely unvisited.
Classification classify_points(const AttributedPointCloud& prev_map,
                               const AttributedPointCloud& session_map,
                               const CoverageGrid& prev_coverage,
                               const CoverageGrid& curr_coverage,
                               double nn_radius);

inline double bayes_update_global(double prev_eps_g, double eps_l) {
  return bayes_fuse(prev_eps_g, eps_l);
}

// Cube-root-compressed local density: points within density_radius of point
// i (itself excluded), saturated at density_saturation.
double objectness(const KdIndex& index, std::size_t point_id,
                  double density_radius, int density_saturation);

// Deleted points: high objectness argues for true structure change.
inline double update_deleted(double prev_eps_g, double gamma) {
  return bayes_fuse(prev_eps_g, clamp_eph(gamma));
}

// Emerged points enter with a scaled local belief; low objectness doubles
// the uncertainty.
inline double update_emerged(double eps_l, double gamma, double k_uncertainty) {
  return clamp_eph(k_uncertainty * (2.0 - gamma) * eps_l);
}

struct DeltaRecord {
  Point3 position;
  PointCategory category = PointCategory::kCoexisting;
  double eps_g_before = 0.5;
  double eps_g_after = 0.5;
  double gamma = 0.0;  // objectness, 0 for categories that never use it

  double delta() const { return eps_g_after - eps_g_before; }
};

struct DeltaMap {
  std::string session_id;
  std::uint64_t config_hash = 0;
  std::vector<DeltaRecord> records;
};

struct CategoryCounts {
  std::size_t coexisting = 0;
  std::size_t deleted = 0;
  std::size_t emerged = 0;
  std::size_t prev_explored_only = 0;
  std::size_t newly_explored = 0;
};

struct MergeResult {
  AttributedPointCloud map;
  DeltaMap delta;
  CategoryCounts counts;
};

// Fuses a cleaned session into the previous map. Map-side points keep their
// positions; coexisting ones fuse in the matched session point's local
// belief, deleted ones fuse in their objectness, unexplored ones pass
// through. Session-side coexisting points are dropped as duplicates;
// emerged and newly explored points are appended. The delta records every
// changed or appended point. compact=false skips the final cell merge.
MergeResult merge_and_update(const AttributedPointCloud& prev_map,
                             const AttributedPointCloud& cleaned_session,
                             const CoverageGrid& prev_coverage,
                             const CoverageGrid& curr_coverage,
                             const PipelineConfig& cfg,
                             const std::string& session_id,
                             bool compact = true);

// Points with eps_g < tau_g; a point exactly at the threshold is excluded.
AttributedPointCloud extract_static_map(const AttributedPointCloud& map,
                                        double tau_g);

struct Heatmap {
  double cell_size = 0.0;
  double floor = 0.1;  // |delta| below this does not count
  // Sorted by key; value = cell change count / max count over all cells.
  std::vector<std::pair<CellKey, double>> cells;

  void save(const std::string& path) const;
  static Heatmap load(const std::string& path);
};

// Change frequency across a run of deltas: each delta contributes one count
// to a cell when any of its records in that cell moved eps_g by at least
// the floor. Deleted and emerged records always count.
Heatmap export_heatmap(const std::vector<DeltaMap>& deltas, double cell_size,
                       double floor = 0.1);

}  // namespace ephmap
