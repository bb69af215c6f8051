#pragma once

#include "ephmap/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ephmap::synth {

// Ground-truth role of a surface, written alongside rendered scans.
// kStatic persists across all sessions; kDynamic is still within a session
// but changes between sessions (parked vehicles); kSessionTransient moves
// during the session itself (walkers).
enum class PointLabel : std::uint32_t {
  kStatic = 0,
  kDynamic = 1,
  kSessionTransient = 2,
};

const char* to_string(PointLabel label);
PointLabel parse_label(const std::string& token);

// Axis-aligned box, optionally yawed about its center. A zero size
// component renders as a 0.2 mm thin slab.
struct Primitive {
  std::string name;
  PointLabel label = PointLabel::kStatic;
  Point3 center = Point3::Zero();
  Point3 size = Point3::Zero();
  double yaw_deg = 0.0;
  // Empty = present in every session; otherwise 1-based session numbers.
  std::vector<int> sessions;

  bool present_in(int session_1based) const;
};

// A primitive translating linearly from start to end over each session it
// appears in (center overridden; start/end are center positions).
struct Actor {
  Primitive shape;  // label defaults to kSessionTransient
  Point3 start = Point3::Zero();
  Point3 end = Point3::Zero();
};

struct SensorModel {
  int azimuth_rays = 360;
  int elevation_rays = 32;
  double elevation_min_deg = -25.0;
  double elevation_max_deg = 3.0;
  double max_range = 80.0;
  double min_range = 0.1;
  double range_noise = 0.01;  // 1-sigma, meters
};

// Odometry corruption applied to reported poses from drift_from_session
// onward: every scan-to-scan motion picks up this extra nudge.
struct DriftModel {
  Point3 per_scan_translation = Point3::Zero();
  double per_scan_yaw_deg = 0.0;
  int drift_from_session = 2;  // 1-based; earlier sessions report true poses
};

struct Waypoint {
  Point3 position = Point3::Zero();
  double yaw_deg = 0.0;
};

struct SceneSpec {
  int sessions = 1;
  int scans_per_session = 20;
  double scan_period = 0.5;  // seconds
  std::uint64_t seed = 0;
  SensorModel sensor;
  DriftModel drift;
  std::vector<Waypoint> trajectory;  // traversed once per session
  std::vector<Primitive> primitives;
  std::vector<Actor> actors;

  void validate() const;  // throws ValidationError

  void save(const std::string& path) const;
  void write(std::ostream& out) const;
  static SceneSpec load(const std::string& path);
  static SceneSpec parse(std::istream& in, const std::string& origin);
};

// Built-in six-session parking lot: perimeter walls, parked cars whose
// stall occupancy follows a fixed per-session table, an interior wall that
// first appears in session 3, and two walkers crossing every session.
SceneSpec parking_lot_scenario();

// Stall occupancy used by the built-in lot, exposed so tests can point at
// specific stalls: stall 0 is vacated after session 2, stall 1 flips every
// session, stall 2 is always occupied.
bool parking_lot_stall_occupied(int stall, int session_1based);
Point3 parking_lot_stall_center(int stall);
constexpr int kParkingLotStalls = 5;

}  // namespace ephmap::synth
