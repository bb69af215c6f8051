#include "ephmap/scene.hpp"

#include "ephmap/config.hpp"
#include "ephmap/errors.hpp"
#include "ephmap/io_util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ephmap::synth {

const char* to_string(PointLabel label) {
  switch (label) {
    case PointLabel::kStatic: return "static";
    case PointLabel::kDynamic: return "dynamic";
    case PointLabel::kSessionTransient: return "session_transient";
  }
  return "unknown";
}

PointLabel parse_label(const std::string& token) {
  if (token == "static") return PointLabel::kStatic;
  if (token == "dynamic") return PointLabel::kDynamic;
  if (token == "session_transient") return PointLabel::kSessionTransient;
  throw ValidationError("unknown label '" + token + "'");
}

bool Primitive::present_in(int session_1based) const {
  if (sessions.empty()) return true;
  return std::find(sessions.begin(), sessions.end(), session_1based) !=
         sessions.end();
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

Point3 parse_point3(const std::string& value, const std::string& where) {
  const auto parts = split_ws(value);
  if (parts.size() != 3) {
    throw ValidationError(where + ": expected three numbers, got '" + value +
                          "'");
  }
  return {parse_double(parts[0], where), parse_double(parts[1], where),
          parse_double(parts[2], where)};
}

// "all", or comma-separated entries that are numbers or lo-hi ranges.
std::vector<int> parse_sessions(const std::string& value,
                                const std::string& where) {
  if (value == "all") return {};
  std::vector<int> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const std::size_t dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(static_cast<int>(parse_long(item, where)));
    } else {
      const int lo =
          static_cast<int>(parse_long(trim(item.substr(0, dash)), where));
      const int hi =
          static_cast<int>(parse_long(trim(item.substr(dash + 1)), where));
      if (hi < lo) throw ValidationError(where + ": bad range '" + item + "'");
      for (int v = lo; v <= hi; ++v) out.push_back(v);
    }
  }
  return out;
}

std::string sessions_to_string(const std::vector<int>& sessions) {
  if (sessions.empty()) return "all";
  std::string out;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(sessions[i]);
  }
  return out;
}

std::string point_to_string(const Point3& p) {
  return format_double(p.x()) + " " + format_double(p.y()) + " " +
         format_double(p.z());
}

}  // namespace

void SceneSpec::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  check(sessions >= 1, "sessions must be >= 1");
  check(scans_per_session >= 2, "scans_per_session must be >= 2");
  check(scan_period > 0.0, "scan_period must be > 0");
  check(trajectory.size() >= 2, "trajectory needs at least two waypoints");
  check(sensor.azimuth_rays >= 4, "sensor_azimuth_rays must be >= 4");
  check(sensor.elevation_rays >= 1, "sensor_elevation_rays must be >= 1");
  check(sensor.elevation_min_deg <= sensor.elevation_max_deg,
        "sensor elevation range is inverted");
  check(sensor.min_range > 0.0 && sensor.max_range > sensor.min_range,
        "sensor range interval is empty");
  check(sensor.range_noise >= 0.0, "sensor_range_noise must be >= 0");
  check(drift.drift_from_session >= 1, "drift_from_session must be >= 1");
  auto check_entity = [&](const Primitive& p, const std::string& kind) {
    check(!p.name.empty(), kind + " without a name");
    check(p.size.minCoeff() >= 0.0 && point_is_finite(p.size),
          kind + " '" + p.name + "' has a negative or non-finite size");
    check(point_is_finite(p.center),
          kind + " '" + p.name + "' has a non-finite center");
    for (int s : p.sessions) {
      check(s >= 1 && s <= sessions,
            kind + " '" + p.name + "' lists session " + std::to_string(s) +
                " outside 1.." + std::to_string(sessions));
    }
  };
  for (const Primitive& p : primitives) check_entity(p, "box");
  for (const Actor& a : actors) check_entity(a.shape, "actor");
  if (!problems.empty()) {
    std::string msg = "invalid scene:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
}

void SceneSpec::write(std::ostream& out) const {
  out << "sessions = " << sessions << "\n";
  out << "scans_per_session = " << scans_per_session << "\n";
  out << "scan_period = " << format_double(scan_period) << "\n";
  out << "seed = " << seed << "\n";
  out << "sensor_azimuth_rays = " << sensor.azimuth_rays << "\n";
  out << "sensor_elevation_rays = " << sensor.elevation_rays << "\n";
  out << "sensor_elevation_min_deg = " << format_double(sensor.elevation_min_deg)
      << "\n";
  out << "sensor_elevation_max_deg = " << format_double(sensor.elevation_max_deg)
      << "\n";
  out << "sensor_max_range = " << format_double(sensor.max_range) << "\n";
  out << "sensor_min_range = " << format_double(sensor.min_range) << "\n";
  out << "sensor_range_noise = " << format_double(sensor.range_noise) << "\n";
  out << "drift_translation = " << point_to_string(drift.per_scan_translation)
      << "\n";
  out << "drift_yaw_deg = " << format_double(drift.per_scan_yaw_deg) << "\n";
  out << "drift_from_session = " << drift.drift_from_session << "\n";
  for (const Waypoint& w : trajectory) {
    out << "waypoint = " << point_to_string(w.position) << " "
        << format_double(w.yaw_deg) << "\n";
  }
  auto write_shape = [&out](const Primitive& p) {
    out << "label = " << to_string(p.label) << "\n";
    out << "center = " << point_to_string(p.center) << "\n";
    out << "size = " << point_to_string(p.size) << "\n";
    out << "yaw_deg = " << format_double(p.yaw_deg) << "\n";
    out << "sessions = " << sessions_to_string(p.sessions) << "\n";
  };
  for (const Primitive& p : primitives) {
    out << "\n[box " << p.name << "]\n";
    write_shape(p);
  }
  for (const Actor& a : actors) {
    out << "\n[actor " << a.shape.name << "]\n";
    write_shape(a.shape);
    out << "start = " << point_to_string(a.start) << "\n";
    out << "end = " << point_to_string(a.end) << "\n";
  }
}

void SceneSpec::save(const std::string& path) const {
  atomic_write_text(path, [this](std::ostream& out) { write(out); });
}

SceneSpec SceneSpec::parse(std::istream& in, const std::string& origin) {
  SceneSpec scene;
  scene.trajectory.clear();

  Primitive* current_shape = nullptr;
  Actor* current_actor = nullptr;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    std::size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError(where + ": unterminated section header");
      }
      const auto parts = split_ws(line.substr(1, line.size() - 2));
      if (parts.size() != 2) {
        throw ValidationError(where +
                              ": section header must be [box name] or "
                              "[actor name]");
      }
      if (parts[0] == "box") {
        scene.primitives.push_back({});
        scene.primitives.back().name = parts[1];
        current_shape = &scene.primitives.back();
        current_actor = nullptr;
      } else if (parts[0] == "actor") {
        scene.actors.push_back({});
        scene.actors.back().shape.name = parts[1];
        scene.actors.back().shape.label = PointLabel::kSessionTransient;
        current_actor = &scene.actors.back();
        current_shape = &current_actor->shape;
      } else {
        throw ValidationError(where + ": unknown section '" + parts[0] + "'");
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(where + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (current_shape) {
      if (key == "label") {
        current_shape->label = parse_label(value);
      } else if (key == "center") {
        current_shape->center = parse_point3(value, where);
      } else if (key == "size") {
        current_shape->size = parse_point3(value, where);
      } else if (key == "yaw_deg") {
        current_shape->yaw_deg = parse_double(value, where);
      } else if (key == "sessions") {
        current_shape->sessions = parse_sessions(value, where);
      } else if (current_actor && key == "start") {
        current_actor->start = parse_point3(value, where);
      } else if (current_actor && key == "end") {
        current_actor->end = parse_point3(value, where);
      } else {
        throw ValidationError(where + ": unknown section key '" + key + "'");
      }
      continue;
    }

    if (key == "sessions") {
      scene.sessions = static_cast<int>(parse_long(value, where));
    } else if (key == "scans_per_session") {
      scene.scans_per_session = static_cast<int>(parse_long(value, where));
    } else if (key == "scan_period") {
      scene.scan_period = parse_double(value, where);
    } else if (key == "seed") {
      scene.seed = static_cast<std::uint64_t>(parse_long(value, where));
    } else if (key == "sensor_azimuth_rays") {
      scene.sensor.azimuth_rays = static_cast<int>(parse_long(value, where));
    } else if (key == "sensor_elevation_rays") {
      scene.sensor.elevation_rays = static_cast<int>(parse_long(value, where));
    } else if (key == "sensor_elevation_min_deg") {
      scene.sensor.elevation_min_deg = parse_double(value, where);
    } else if (key == "sensor_elevation_max_deg") {
      scene.sensor.elevation_max_deg = parse_double(value, where);
    } else if (key == "sensor_max_range") {
      scene.sensor.max_range = parse_double(value, where);
    } else if (key == "sensor_min_range") {
      scene.sensor.min_range = parse_double(value, where);
    } else if (key == "sensor_range_noise") {
      scene.sensor.range_noise = parse_double(value, where);
    } else if (key == "drift_translation") {
      scene.drift.per_scan_translation = parse_point3(value, where);
    } else if (key == "drift_yaw_deg") {
      scene.drift.per_scan_yaw_deg = parse_double(value, where);
    } else if (key == "drift_from_session") {
      scene.drift.drift_from_session =
          static_cast<int>(parse_long(value, where));
    } else if (key == "waypoint") {
      const auto parts = split_ws(value);
      if (parts.size() != 4) {
        throw ValidationError(where + ": waypoint needs 'x y z yaw_deg'");
      }
      Waypoint w;
      w.position = {parse_double(parts[0], where),
                    parse_double(parts[1], where),
                    parse_double(parts[2], where)};
      w.yaw_deg = parse_double(parts[3], where);
      scene.trajectory.push_back(w);
    } else {
      throw ValidationError(where + ": unknown key '" + key + "'");
    }
  }

  scene.validate();
  return scene;
}

SceneSpec SceneSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene: " + path);
  return parse(in, path);
}

namespace {

// Stall occupancy table, stalls x sessions (1-based sessions as columns).
// Stall 0 empties after session 2, stall 1 flips every session, stall 2
// never changes, the rest mix patterns so deltas carry varied traffic.
constexpr bool kStallTable[kParkingLotStalls][6] = {
    {true, true, false, false, false, false},
    {true, false, true, false, true, false},
    {true, true, true, true, true, true},
    {false, false, true, true, true, true},
    {true, false, false, true, true, false},
};

}  // namespace

bool parking_lot_stall_occupied(int stall, int session_1based) {
  if (stall < 0 || stall >= kParkingLotStalls) return false;
  if (session_1based < 1 || session_1based > 6) return false;
  return kStallTable[stall][session_1based - 1];
}

Point3 parking_lot_stall_center(int stall) {
  return {-11.0 + 5.5 * stall, -12.6, 1.05};
}

SceneSpec parking_lot_scenario() {
  SceneSpec scene;
  scene.sessions = 6;
  scene.scans_per_session = 20;
  scene.scan_period = 0.5;
  scene.seed = 42;
  scene.sensor.azimuth_rays = 240;
  scene.sensor.elevation_rays = 32;
  scene.sensor.elevation_min_deg = -16.0;
  scene.sensor.elevation_max_deg = 3.0;
  scene.sensor.max_range = 80.0;
  scene.sensor.range_noise = 0.01;
  scene.drift.per_scan_translation = {0.003, 0.001, 0.0};
  scene.drift.per_scan_yaw_deg = 0.02;
  scene.drift.drift_from_session = 2;

  scene.trajectory = {
      {{-10.0, -10.0, 1.8}, 0.0},
      {{10.0, -10.0, 1.8}, 0.0},
      {{10.0, 10.0, 1.8}, 90.0},
      {{-10.0, 10.0, 1.8}, 180.0},
      {{-10.0, -10.0, 1.8}, 270.0},
  };

  auto box = [&](const std::string& name, PointLabel label,
                 const Point3& center, const Point3& size,
                 std::vector<int> sessions = {}) {
    Primitive p;
    p.name = name;
    p.label = label;
    p.center = center;
    p.size = size;
    p.sessions = std::move(sessions);
    scene.primitives.push_back(p);
  };

  // Vertical structure only. Near-horizontal surfaces seen at grazing
  // incidence collect free-space evidence from rays skimming them, which
  // would dominate this sensor's low elevation fan. The perimeter walls
  // reach far enough down that every downward ray still terminates on
  // them, the way a lot on an open deck stays enclosed.
  box("wall_south", PointLabel::kStatic, {0.0, -14.0, -1.5}, {28.6, 0.3, 9.0});
  box("wall_north", PointLabel::kStatic, {0.0, 14.0, -1.5}, {28.6, 0.3, 9.0});
  box("wall_west", PointLabel::kStatic, {-14.0, 0.0, -1.5}, {0.3, 28.6, 9.0});
  box("wall_east", PointLabel::kStatic, {14.0, 0.0, -1.5}, {0.3, 28.6, 9.0});
  box("kiosk", PointLabel::kStatic, {-7.5, 6.0, 1.25}, {3.0, 2.0, 2.5});
  // Low interior wall built between sessions 2 and 3; rays graze its top,
  // so its points keep a mixed local belief instead of a saturated one.
  box("wall_added", PointLabel::kStatic, {0.0, 8.0, 0.6}, {16.0, 0.3, 1.2},
      {3, 4, 5, 6});

  for (int stall = 0; stall < kParkingLotStalls; ++stall) {
    std::vector<int> present;
    for (int s = 1; s <= 6; ++s) {
      if (parking_lot_stall_occupied(stall, s)) present.push_back(s);
    }
    if (present.empty()) continue;
    // Car roofs sit above the sensor mast, so only side faces are ever
    // sampled; a roof a hair below the mast height collects a handful of
    // grazing hits too sparse to classify with any confidence.
    box("car_stall_" + std::to_string(stall), PointLabel::kDynamic,
        parking_lot_stall_center(stall), {4.2, 1.8, 1.6}, std::move(present));
  }

  auto walker = [&](const std::string& name, const Point3& start,
                    const Point3& end) {
    Actor a;
    a.shape.name = name;
    a.shape.label = PointLabel::kSessionTransient;
    a.shape.size = {0.4, 0.4, 1.7};
    a.start = start;
    a.end = end;
    scene.actors.push_back(a);
  };
  walker("walker_a", {-12.0, -2.0, 1.0}, {12.0, -2.0, 1.0});
  walker("walker_b", {5.0, 6.5, 1.0}, {5.0, -9.0, 1.0});

  scene.validate();
  return scene;
}

}  // namespace ephmap::synth
