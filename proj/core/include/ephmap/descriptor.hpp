#pragma once

#include "ephmap/config.hpp"
#include "ephmap/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace ephmap {

// Rotation-searchable polar signature of a scan: max point height per
// (range ring, azimuth sector) bin. Comparing one signature against a
// column-shifted other sweeps relative yaw in sector-sized increments.
struct PolarDescriptor {
  static constexpr int kRings = 20;
  static constexpr int kSectors = 60;

  Eigen::Matrix<double, kRings, kSectors> bins =
      Eigen::Matrix<double, kRings, kSectors>::Zero();
  Eigen::Matrix<bool, kRings, kSectors> occupied =
      Eigen::Matrix<bool, kRings, kSectors>::Constant(false);

  static PolarDescriptor from_scan(const Scan& scan, double max_radius);

  // Mean cosine column distance minimized over all shifts of other.
  // best_shift (optional) receives the winning shift: other rotated by
  // +shift sectors of yaw matches this. Descriptors with no occupied
  // columns compare at the maximum distance 1.
  static double distance(const PolarDescriptor& a, const PolarDescriptor& b,
                         int* best_shift = nullptr);

  double sector_width_rad() const;
};

struct LoopCandidate {
  std::size_t anchor_index = 0;    // into the anchor list
  std::size_t session_index = 0;   // scan index inside the new session
  Pose initial_transform;          // session frame -> map frame
  double descriptor_distance = 1.0;
  double yaw_rad = 0.0;
};

// Map-side place signatures kept from previous sessions: one descriptor per
// anchor scan plus its refined map-frame pose.
struct AnchorSet {
  std::vector<PolarDescriptor> descriptors;
  std::vector<Pose> poses;  // sensor -> map frame

  std::size_t size() const { return descriptors.size(); }
};

AnchorSet build_anchor_set(const Session& session,
                           const std::vector<Pose>& map_frame_poses,
                           const PipelineConfig& cfg);

inline constexpr double kLoopGateDefault = 0.35;

// Best anchor/session pair under the descriptor distance. Throws
// LoopNotFoundError when nothing beats the gate. The candidate's transform
// seeds alignment: anchor pose composed with the recovered yaw offset,
// re-expressed against the session-frame pose of the matched scan.
LoopCandidate detect_loop(const AnchorSet& anchors, const Session& session,
                          const PipelineConfig& cfg,
                          double gate = kLoopGateDefault);

}  // namespace ephmap
