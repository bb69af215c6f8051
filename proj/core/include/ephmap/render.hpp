#pragma once

#include "ephmap/scene.hpp"
#include "ephmap/types.hpp"

#include <vector>

namespace ephmap::synth {

struct LabeledSession {
  Session session;                  // poses as an odometry system reports them
  std::vector<Pose> true_poses;     // drift-free, world frame
  std::vector<std::vector<PointLabel>> labels;  // per scan, per point
};

// Pose along the scene trajectory at parameter u in [0, 1]: arc-length
// position on the waypoint polyline, yaw blended linearly inside each
// segment.
Pose trajectory_pose(const SceneSpec& scene, double u);

// Ray-casts every scan of the given 1-based session. Deterministic for a
// fixed (scene seed, session, scan) triple regardless of call order.
LabeledSession render_session(const SceneSpec& scene, int session_1based);

// Ground-truth surface points of one session, split by label. Static and
// dynamic points come from the world-frame hit points of the session's own
// scans, so they share the noise of the rendered data.
struct GroundTruthSplit {
  std::vector<Point3> static_points;
  std::vector<Point3> dynamic_points;     // parked, changes across sessions
  std::vector<Point3> transient_points;   // moving within the session
};

GroundTruthSplit split_ground_truth(const LabeledSession& rendered);

}  // namespace ephmap::synth
