#pragma once

#include "ephmap/scene.hpp"
#include "ephmap/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ephmap {

// On-disk session directory:
//   poses.txt       one scan per line, 12 numbers, row-major 3x4 [R | t]
//   poses_gt.txt    optional drift-free poses, same format
//   meta.txt        sensor id plus per-scan timestamps
//   scans/%06d.bin  float32 x y z intensity records
//   labels/%06d.label  optional uint32 ground-truth label per point
struct SessionData {
  Session session;
  std::optional<std::vector<Pose>> true_poses;
  std::optional<std::vector<std::vector<synth::PointLabel>>> labels;
  std::string sensor_id;
};

// Reads and structurally checks a session directory. Pose rows must be
// orthonormal within 1e-6 (they are re-projected to machine precision on
// load); scan files must be whole float32 quadruplets; label files, when
// present, must match their scan's point count. The directory basename
// becomes the session id.
SessionData read_session_dir(const std::string& dir);

// Writes a complete session directory; every file lands atomically.
void write_session_dir(const std::string& dir, const SessionData& data);

std::vector<Pose> read_pose_file(const std::string& path);
void write_pose_file(const std::string& path,
                     const std::vector<Pose>& poses);

}  // namespace ephmap
