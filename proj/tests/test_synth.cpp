#include <doctest.h>

#include "ephmap/errors.hpp"
#include "ephmap/render.hpp"
#include "ephmap/scene.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

using namespace ephmap;
using namespace ephmap::synth;

namespace {

std::string temp_path(const std::string& stem) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path();
  return (dir / (stem + "_" + std::to_string(++counter))).string();
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& stem) : path(temp_path(stem)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

SceneSpec labeled_scene() {
  SceneSpec s;
  s.sessions = 2;
  s.scans_per_session = 5;
  s.seed = 77;
  s.sensor.azimuth_rays = 90;
  s.sensor.elevation_rays = 5;
  s.sensor.elevation_min_deg = -10.0;
  s.sensor.elevation_max_deg = 5.0;
  s.sensor.max_range = 50.0;
  s.sensor.range_noise = 0.0;
  s.trajectory = {{{-3.0, 0.0, 1.0}, 0.0}, {{3.0, 0.0, 1.0}, 0.0}};

  Primitive wall;
  wall.name = "wall";
  wall.label = PointLabel::kStatic;
  wall.center = {0.0, 8.0, 1.0};
  wall.size = {20.0, 0.3, 4.0};
  s.primitives.push_back(wall);

  Primitive parked;
  parked.name = "parked";
  parked.label = PointLabel::kDynamic;
  parked.center = {4.0, -5.0, 0.9};
  parked.size = {2.0, 1.0, 1.8};
  parked.sessions = {1};
  s.primitives.push_back(parked);

  Actor walker;
  walker.shape.name = "walker";
  walker.shape.label = PointLabel::kSessionTransient;
  walker.shape.size = {0.4, 0.4, 1.7};
  walker.start = {-2.0, -3.0, 0.85};
  walker.end = {2.0, -3.0, 0.85};
  s.actors.push_back(walker);
  return s;
}

bool inside_box(const Point3& p, const Point3& center, const Point3& size,
                double slack) {
  const Point3 d = p - center;
  return std::abs(d.x()) <= 0.5 * size.x() + slack &&
         std::abs(d.y()) <= 0.5 * size.y() + slack &&
         std::abs(d.z()) <= 0.5 * size.z() + slack;
}

}  // namespace

TEST_CASE("scene specs round-trip through their text form") {
  SceneSpec s = labeled_scene();
  s.scan_period = 0.37;
  s.sensor.range_noise = 0.013;
  s.sensor.elevation_min_deg = -12.5;
  s.sensor.elevation_max_deg = 3.25;
  s.drift.per_scan_translation = {0.004, -0.002, 0.001};
  s.drift.per_scan_yaw_deg = 0.065;
  s.drift.drift_from_session = 2;
  s.primitives[1].yaw_deg = 12.75;

  TempFile file("ephmap_test_scene");
  s.save(file.path);
  const SceneSpec r = SceneSpec::load(file.path);

  CHECK(r.sessions == s.sessions);
  CHECK(r.scans_per_session == s.scans_per_session);
  CHECK(r.scan_period == s.scan_period);
  CHECK(r.seed == s.seed);
  CHECK(r.sensor.azimuth_rays == s.sensor.azimuth_rays);
  CHECK(r.sensor.elevation_rays == s.sensor.elevation_rays);
  CHECK(r.sensor.elevation_min_deg == s.sensor.elevation_min_deg);
  CHECK(r.sensor.elevation_max_deg == s.sensor.elevation_max_deg);
  CHECK(r.sensor.max_range == s.sensor.max_range);
  CHECK(r.sensor.min_range == s.sensor.min_range);
  CHECK(r.sensor.range_noise == s.sensor.range_noise);
  CHECK(r.drift.per_scan_translation == s.drift.per_scan_translation);
  CHECK(r.drift.per_scan_yaw_deg == s.drift.per_scan_yaw_deg);
  CHECK(r.drift.drift_from_session == s.drift.drift_from_session);

  REQUIRE(r.trajectory.size() == s.trajectory.size());
  for (std::size_t i = 0; i < s.trajectory.size(); ++i) {
    CHECK(r.trajectory[i].position == s.trajectory[i].position);
    CHECK(r.trajectory[i].yaw_deg == s.trajectory[i].yaw_deg);
  }

  REQUIRE(r.primitives.size() == s.primitives.size());
  for (std::size_t i = 0; i < s.primitives.size(); ++i) {
    CHECK(r.primitives[i].name == s.primitives[i].name);
    CHECK(r.primitives[i].label == s.primitives[i].label);
    CHECK(r.primitives[i].center == s.primitives[i].center);
    CHECK(r.primitives[i].size == s.primitives[i].size);
    CHECK(r.primitives[i].yaw_deg == s.primitives[i].yaw_deg);
    CHECK(r.primitives[i].sessions == s.primitives[i].sessions);
  }

  REQUIRE(r.actors.size() == 1);
  CHECK(r.actors[0].shape.name == "walker");
  CHECK(r.actors[0].shape.label == PointLabel::kSessionTransient);
  CHECK(r.actors[0].start == s.actors[0].start);
  CHECK(r.actors[0].end == s.actors[0].end);
}

TEST_CASE("scene parsing accepts comments and reports bad lines") {
  std::istringstream good(
      "sessions = 2\n"
      "# a comment line\n"
      "scans_per_session = 3  # trailing comment\n"
      "waypoint = 0 0 1 0\n"
      "waypoint = 5 0 1 0\n"
      "\n"
      "[box wall]\n"
      "center = 0 8 1\n"
      "size = 20 0.3 4\n");
  const SceneSpec s = SceneSpec::parse(good, "good");
  CHECK(s.sessions == 2);
  CHECK(s.scans_per_session == 3);
  CHECK(s.primitives.size() == 1);

  auto expect_error = [](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    try {
      SceneSpec::parse(in, "bad");
      FAIL("expected a parse error for: " << text);
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error("nonsense = 1\n", "bad:1");
  expect_error("sessions 2\n", "expected 'key = value'");
  expect_error("[box wall\n", "unterminated");
  expect_error("[sphere s]\n", "unknown section");
  expect_error("waypoint = 1 2 3\n", "waypoint needs");
  expect_error("[box w]\nradius = 2\n", "unknown section key");
  expect_error("[box w]\nlabel = wobbly\n", "unknown label");

  CHECK_THROWS_AS(SceneSpec::load(temp_path("ephmap_test_noscene")), IoError);
}

TEST_CASE("scene validation collects every problem") {
  SceneSpec s = labeled_scene();
  s.sessions = 0;
  s.scans_per_session = 1;
  s.primitives[0].name.clear();
  s.primitives[1].size = {-1.0, 1.0, 1.0};
  try {
    s.validate();
    FAIL("expected validation to throw");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("sessions must be >= 1") != std::string::npos);
    CHECK(msg.find("scans_per_session must be >= 2") != std::string::npos);
    CHECK(msg.find("without a name") != std::string::npos);
    CHECK(msg.find("negative or non-finite size") != std::string::npos);
  }

  SceneSpec bad_ref = labeled_scene();
  bad_ref.primitives[1].sessions = {3};  // scene only has two sessions
  CHECK_THROWS_AS(bad_ref.validate(), ValidationError);

  SceneSpec inverted = labeled_scene();
  inverted.sensor.elevation_min_deg = 10.0;
  inverted.sensor.elevation_max_deg = -10.0;
  CHECK_THROWS_AS(inverted.validate(), ValidationError);
}

TEST_CASE("primitives without a session list appear everywhere") {
  Primitive p;
  p.sessions = {};
  CHECK(p.present_in(1));
  CHECK(p.present_in(9));
  p.sessions = {2, 4};
  CHECK(!p.present_in(1));
  CHECK(p.present_in(2));
  CHECK(!p.present_in(3));
  CHECK(p.present_in(4));
}

TEST_CASE("the built-in lot matches its stall helpers") {
  const SceneSpec lot = parking_lot_scenario();
  lot.validate();
  CHECK(lot.sessions == 6);
  CHECK(lot.scans_per_session >= 20);
  CHECK(!lot.actors.empty());

  // Stall 0 empties after session 2, stall 1 flips, stall 2 never changes.
  for (int session = 1; session <= 6; ++session) {
    CHECK(parking_lot_stall_occupied(0, session) == (session <= 2));
    CHECK(parking_lot_stall_occupied(1, session) == (session % 2 == 1));
    CHECK(parking_lot_stall_occupied(2, session));
  }

  // Each stall's car primitive lists exactly the occupied sessions.
  for (int stall = 0; stall < kParkingLotStalls; ++stall) {
    const std::string name = "car_stall_" + std::to_string(stall);
    const Primitive* car = nullptr;
    for (const Primitive& p : lot.primitives) {
      if (p.name == name) car = &p;
    }
    REQUIRE(car != nullptr);
    CHECK(car->label == PointLabel::kDynamic);
    CHECK(car->center == parking_lot_stall_center(stall));
    for (int session = 1; session <= 6; ++session) {
      CHECK(car->present_in(session) ==
            parking_lot_stall_occupied(stall, session));
    }
  }
  CHECK(parking_lot_stall_center(1).x() - parking_lot_stall_center(0).x() ==
        5.5);
}

TEST_CASE("rendering is deterministic for a fixed scene and session") {
  const SceneSpec s = labeled_scene();
  const LabeledSession a = render_session(s, 1);
  const LabeledSession b = render_session(s, 1);
  REQUIRE(a.session.scans.size() == b.session.scans.size());
  for (std::size_t i = 0; i < a.session.scans.size(); ++i) {
    const auto& pa = a.session.scans[i].points;
    const auto& pb = b.session.scans[i].points;
    REQUIRE(pa.size() == pb.size());
    for (std::size_t j = 0; j < pa.size(); ++j) {
      CHECK(pa[j] == pb[j]);
    }
    CHECK(a.labels[i] == b.labels[i]);
    CHECK(a.true_poses[i].translation == b.true_poses[i].translation);
  }
}

TEST_CASE("labels trace every point back to the right surface") {
  const SceneSpec s = labeled_scene();
  const LabeledSession r1 = render_session(s, 1);

  std::size_t statics = 0, dynamics = 0, transients = 0;
  const int last = s.scans_per_session - 1;
  for (int i = 0; i <= last; ++i) {
    const Scan& scan = r1.session.scans[i];
    const Pose& pose = r1.true_poses[i];
    const double u = static_cast<double>(i) / last;
    const Point3 walker_center =
        s.actors[0].start + u * (s.actors[0].end - s.actors[0].start);
    REQUIRE(scan.points.size() == r1.labels[i].size());
    for (std::size_t j = 0; j < scan.points.size(); ++j) {
      const Point3 world = pose * scan.points[j];
      switch (r1.labels[i][j]) {
        case PointLabel::kStatic:
          ++statics;
          CHECK(inside_box(world, s.primitives[0].center, s.primitives[0].size,
                           1e-6));
          break;
        case PointLabel::kDynamic:
          ++dynamics;
          CHECK(inside_box(world, s.primitives[1].center, s.primitives[1].size,
                           1e-6));
          break;
        case PointLabel::kSessionTransient:
          ++transients;
          CHECK(inside_box(world, walker_center, s.actors[0].shape.size,
                           1e-6));
          break;
      }
    }
  }
  CHECK(statics > 0);
  CHECK(dynamics > 0);
  CHECK(transients > 0);

  // The parked car is gone in session 2.
  const LabeledSession r2 = render_session(s, 2);
  for (const auto& labels : r2.labels) {
    for (PointLabel l : labels) CHECK(l != PointLabel::kDynamic);
  }
}

TEST_CASE("surfaces beyond the sensor range never produce points") {
  SceneSpec s = labeled_scene();
  s.primitives.clear();
  s.actors.clear();
  Primitive far;
  far.name = "far_wall";
  far.center = {90.0, 0.0, 1.0};
  far.size = {1.0, 40.0, 10.0};
  s.primitives.push_back(far);
  const LabeledSession r = render_session(s, 1);
  for (const Scan& scan : r.session.scans) CHECK(scan.points.empty());
}

TEST_CASE("reported poses drift only after the configured session") {
  SceneSpec s = labeled_scene();
  s.primitives.clear();
  s.actors.clear();
  Primitive wall;
  wall.name = "wall";
  wall.center = {0.0, 8.0, 1.0};
  wall.size = {20.0, 0.3, 4.0};
  s.primitives.push_back(wall);
  s.scans_per_session = 8;
  s.drift.per_scan_translation = {0.01, 0.0, 0.0};
  s.drift.drift_from_session = 2;

  const LabeledSession clean = render_session(s, 1);
  for (std::size_t i = 0; i < clean.true_poses.size(); ++i) {
    CHECK(clean.session.poses[i].translation ==
          clean.true_poses[i].translation);
  }

  const LabeledSession drifted = render_session(s, 2);
  CHECK(drifted.session.poses[0].translation ==
        drifted.true_poses[0].translation);
  // A straight run with zero yaw accumulates the nudge linearly.
  for (std::size_t i = 1; i < drifted.true_poses.size(); ++i) {
    const double off = (drifted.session.poses[i].translation -
                        drifted.true_poses[i].translation)
                           .norm();
    CHECK(off == doctest::Approx(0.01 * i).epsilon(1e-9));
  }

  SceneSpec zero = s;
  zero.drift.per_scan_translation = Point3::Zero();
  zero.drift.per_scan_yaw_deg = 0.0;
  zero.drift.drift_from_session = 1;
  const LabeledSession unmoved = render_session(zero, 2);
  for (std::size_t i = 0; i < unmoved.true_poses.size(); ++i) {
    CHECK(unmoved.session.poses[i].translation ==
          unmoved.true_poses[i].translation);
  }
}

TEST_CASE("trajectory interpolation follows arc length and blends yaw") {
  SceneSpec s;
  s.trajectory = {{{0.0, 0.0, 0.0}, 0.0}, {{10.0, 0.0, 0.0}, 90.0}};

  const Pose start = trajectory_pose(s, 0.0);
  CHECK(start.translation == Point3{0.0, 0.0, 0.0});
  CHECK(start.rotation(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const Pose mid = trajectory_pose(s, 0.5);
  CHECK(mid.translation.x() == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(mid.rotation(0, 0) ==
        doctest::Approx(std::cos(std::numbers::pi / 4.0)).epsilon(1e-12));

  const Pose end = trajectory_pose(s, 1.0);
  CHECK(end.translation.x() == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(end.rotation(1, 0) == doctest::Approx(1.0).epsilon(1e-12));

  // Outside parameters clamp to the ends.
  CHECK(trajectory_pose(s, -0.5).translation == start.translation);
  CHECK(trajectory_pose(s, 1.5).translation.x() ==
        doctest::Approx(10.0).epsilon(1e-12));

  // Arc length weighting across unequal segments.
  SceneSpec multi;
  multi.trajectory = {{{0.0, 0.0, 0.0}, 0.0},
                      {{1.0, 0.0, 0.0}, 0.0},
                      {{3.0, 0.0, 0.0}, 0.0}};
  CHECK(trajectory_pose(multi, 0.5).translation.x() ==
        doctest::Approx(1.5).epsilon(1e-12));

  SceneSpec lonely;
  lonely.trajectory = {{{0.0, 0.0, 0.0}, 0.0}};
  CHECK_THROWS_AS(trajectory_pose(lonely, 0.5), Error);
}

TEST_CASE("ground truth splitting transforms points into the world frame") {
  const SceneSpec s = labeled_scene();
  const LabeledSession r = render_session(s, 1);
  const GroundTruthSplit split = split_ground_truth(r);

  std::size_t statics = 0, dynamics = 0, transients = 0;
  for (const auto& labels : r.labels) {
    for (PointLabel l : labels) {
      if (l == PointLabel::kStatic) ++statics;
      else if (l == PointLabel::kDynamic) ++dynamics;
      else ++transients;
    }
  }
  CHECK(split.static_points.size() == statics);
  CHECK(split.dynamic_points.size() == dynamics);
  CHECK(split.transient_points.size() == transients);

  // First static-labeled point of the first scan, transformed by its pose.
  for (std::size_t j = 0; j < r.labels[0].size(); ++j) {
    if (r.labels[0][j] == PointLabel::kStatic) {
      const Point3 expected = r.true_poses[0] * r.session.scans[0].points[j];
      CHECK(split.static_points[0] == expected);
      break;
    }
  }
}

TEST_CASE("rendering rejects out-of-range sessions") {
  const SceneSpec s = labeled_scene();
  CHECK_THROWS_AS(render_session(s, 0), Error);
  CHECK_THROWS_AS(render_session(s, 3), Error);
}
