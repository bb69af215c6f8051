#include <doctest.h>

#include "ephmap/descriptor.hpp"
#include "ephmap/errors.hpp"
#include "ephmap/gicp.hpp"
#include "ephmap/propagation.hpp"
#include "ephmap/render.hpp"
#include "ephmap/scene.hpp"
#include "ephmap/types.hpp"
#include "ephmap/zipper.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace ephmap;

namespace {

double rotation_angle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

synth::SceneSpec room_scene(bool drifted) {
  synth::SceneSpec s;
  s.sessions = 2;
  s.scans_per_session = 24;
  s.seed = 910;
  s.sensor.azimuth_rays = 180;
  s.sensor.elevation_rays = 12;
  s.sensor.elevation_min_deg = -14.0;
  s.sensor.elevation_max_deg = 2.0;
  s.sensor.max_range = 60.0;
  s.drift.drift_from_session = drifted ? 2 : 3;
  if (drifted) {
    s.drift.per_scan_translation = {0.004, 0.003, 0.0};
    s.drift.per_scan_yaw_deg = 0.02;
  }
  s.trajectory = {
      {{-6.0, -4.5, 1.5}, 0.0},  {{6.0, -4.5, 1.5}, 0.0},
      {{6.0, 4.5, 1.5}, 90.0},   {{-6.0, 4.5, 1.5}, 180.0},
      {{-6.0, -4.5, 1.5}, 270.0},
  };
  auto box = [&](const char* name, const Point3& center, const Point3& size) {
    synth::Primitive p;
    p.name = name;
    p.label = synth::PointLabel::kStatic;
    p.center = center;
    p.size = size;
    s.primitives.push_back(p);
  };
  box("wall_west", {-9.0, 0.0, 0.0}, {0.3, 14.6, 7.0});
  box("wall_east", {9.0, 0.0, 0.0}, {0.3, 14.6, 7.0});
  box("wall_south", {0.0, -7.0, 0.0}, {18.0, 0.3, 7.0});
  box("wall_north", {0.0, 7.0, 0.0}, {18.0, 0.3, 7.0});
  box("kiosk", {-4.0, 2.5, 1.0}, {2.5, 1.5, 2.0});
  box("column", {3.5, -3.0, 1.0}, {1.0, 1.0, 2.0});
  return s;
}

struct RoomFixture {
  synth::SceneSpec scene;
  synth::LabeledSession first;
  synth::LabeledSession second;
  AttributedPointCloud map;
  AnchorSet anchors;
  PipelineConfig cfg;
};

RoomFixture make_fixture(bool drifted) {
  RoomFixture f;
  f.scene = room_scene(drifted);
  f.first = synth::render_session(f.scene, 1);
  f.second = synth::render_session(f.scene, 2);
  f.map = aggregate_session(f.first.session, f.first.true_poses, f.cfg, true);
  f.anchors = build_anchor_set(f.first.session, f.first.true_poses, f.cfg);
  return f;
}

const RoomFixture& clean_room() {
  static const RoomFixture fx = make_fixture(false);
  return fx;
}

const RoomFixture& drifted_room() {
  static const RoomFixture fx = make_fixture(true);
  return fx;
}

Scan sector_point_scan(double sector_center, double radius, double height) {
  const double theta =
      sector_center * 2.0 * std::numbers::pi / PolarDescriptor::kSectors;
  Scan scan;
  scan.points = {{radius * std::cos(theta), radius * std::sin(theta), height}};
  return scan;
}

}  // namespace

TEST_CASE("descriptor bins hold the max height per ring and sector") {
  Scan scan = sector_point_scan(15.5, 2.5, 0.7);
  scan.points.push_back(sector_point_scan(15.5, 2.5, 0.3).points[0]);
  const PolarDescriptor d = PolarDescriptor::from_scan(scan, 20.0);
  CHECK(d.occupied(2, 15));
  CHECK(d.bins(2, 15) == 0.7);
  CHECK(!d.occupied(2, 16));
  CHECK_THROWS_AS(PolarDescriptor::from_scan(scan, 0.0), Error);
}

TEST_CASE("out-of-range and on-sensor returns never enter the descriptor") {
  Scan scan;
  scan.points = {{25.0, 0.0, 1.0}, {1e-9, 0.0, 1.0}};
  const PolarDescriptor d = PolarDescriptor::from_scan(scan, 20.0);
  CHECK(!d.occupied.any());
}

TEST_CASE("column shift between descriptors reports the relative yaw") {
  // One occupied bin each, 30 sectors apart: the only shift with content on
  // both sides aligns them perfectly.
  const PolarDescriptor a =
      PolarDescriptor::from_scan(sector_point_scan(15.5, 2.5, 0.7), 20.0);
  const PolarDescriptor b =
      PolarDescriptor::from_scan(sector_point_scan(45.5, 2.5, 0.7), 20.0);
  int shift = -1;
  CHECK(PolarDescriptor::distance(a, b, &shift) == 0.0);
  CHECK(shift == 30);
}

TEST_CASE("empty descriptors compare at the maximum distance") {
  const PolarDescriptor empty;
  const PolarDescriptor full =
      PolarDescriptor::from_scan(sector_point_scan(3.5, 2.5, 0.7), 20.0);
  CHECK(PolarDescriptor::distance(empty, empty, nullptr) == 1.0);
  CHECK(PolarDescriptor::distance(full, empty, nullptr) == 1.0);
}

TEST_CASE("a rendered scan matches its yaw-rotated copy at the right shift") {
  const RoomFixture& fx = clean_room();
  const Scan& base = fx.first.session.scans[3];
  const PolarDescriptor a = PolarDescriptor::from_scan(base, fx.cfg.max_range);

  int self_shift = -1;
  CHECK(std::abs(PolarDescriptor::distance(a, a, &self_shift)) < 1e-12);
  CHECK(self_shift == 0);

  const int sectors_turned = 3;
  const Pose turn = Pose::from_yaw(sectors_turned * a.sector_width_rad());
  Scan rotated = base;
  for (Point3& p : rotated.points) p = turn.rotation * p;
  const PolarDescriptor b =
      PolarDescriptor::from_scan(rotated, fx.cfg.max_range);

  int shift = -1;
  const double d = PolarDescriptor::distance(a, b, &shift);
  // Rays that sit exactly on sector boundaries can hop a bin under the
  // rotated arithmetic, so the distance is tiny rather than zero.
  CHECK(d < 0.02);
  CHECK(shift == PolarDescriptor::kSectors - sectors_turned);
}

TEST_CASE("registration recovers the render pose from a perturbed guess") {
  const RoomFixture& fx = clean_room();
  const std::size_t idx = 5;
  const Scan& scan = fx.second.session.scans[idx];
  const Pose truth = fx.second.true_poses[idx];

  SUBCASE("starting at the truth") {
    const RegistrationResult res =
        weighted_gicp(scan.points, fx.map, truth);
    CHECK(res.converged);
    CHECK(res.inlier_fraction > 0.9);
    CHECK((res.transform.translation - truth.translation).norm() < 0.02);
    CHECK(rotation_angle(res.transform.rotation, truth.rotation) <
          0.2 * std::numbers::pi / 180.0);
  }

  SUBCASE("starting 0.18 m and 1.5 degrees away") {
    const Pose guess =
        Pose::from_yaw(1.5 * std::numbers::pi / 180.0, {0.15, -0.1, 0.0}) *
        truth;
    const RegistrationResult res = weighted_gicp(scan.points, fx.map, guess);
    CHECK(res.converged);
    CHECK((res.transform.translation - truth.translation).norm() < 0.02);
    CHECK(rotation_angle(res.transform.rotation, truth.rotation) <
          0.2 * std::numbers::pi / 180.0);
  }
}

TEST_CASE("uniform belief levels register bit-identically to unweighted") {
  const RoomFixture& fx = clean_room();
  const GicpSettings settings;
  const std::vector<Point3> source =
      decimate_points(fx.second.session.scans[8].points,
                      settings.decimation_cell);
  const Pose guess = fx.second.true_poses[8];

  AttributedPointCloud flat = fx.map;  // all beliefs 0.5 already
  AttributedPointCloud lower = fx.map;
  for (AttributedPoint& p : lower.points) p.eps_g = 0.2;

  const MapModel model_flat(flat, settings);
  const MapModel model_lower(lower, settings);
  for (std::size_t i = 0; i < model_flat.size(); ++i) {
    REQUIRE(model_flat.weight(i) == 1.0);
    REQUIRE(model_lower.weight(i) == 1.0);
  }

  const RegistrationResult a = register_scan(model_flat, source, guess, settings);
  const RegistrationResult b = register_scan(model_lower, source, guess, settings);
  CHECK(a.iterations == b.iterations);
  CHECK(a.final_cost == b.final_cost);
  for (int r = 0; r < 3; ++r) {
    CHECK(a.transform.translation(r) == b.transform.translation(r));
    for (int c = 0; c < 3; ++c) {
      CHECK(a.transform.rotation(r, c) == b.transform.rotation(r, c));
    }
  }
}

TEST_CASE("belief weights scale each correspondence's contribution") {
  // Symmetric grid in the z = 0 plane; the x > 0 half carries high
  // transiency, so its weights shrink by a known factor.
  AttributedPointCloud grid;
  for (int xi = -8; xi <= 8; ++xi) {
    for (int yi = -8; yi <= 8; ++yi) {
      AttributedPoint p;
      p.position = {0.25 * xi, 0.25 * yi, 0.0};
      p.eps_l = 0.5;
      p.eps_g = xi > 0 ? 0.98 : 0.5;
      grid.points.push_back(p);
    }
  }

  GicpSettings settings;
  // 13 neighbors close a full shell of the grid, keeping the two probe
  // neighborhoods exact mirror images.
  settings.covariance_knn = 13;
  const MapModel model(grid, settings);

  const std::vector<Point3> left = {{-1.0, 0.25, 0.05}};
  const std::vector<Point3> right = {{1.0, 0.25, 0.05}};
  const auto covs = regularized_covariances(left, 1, settings.plane_epsilon);

  const NormalEquations ne_left = accumulate_normal_equations(
      model, left, covs, Pose::identity(), settings);
  const NormalEquations ne_right = accumulate_normal_equations(
      model, right, covs, Pose::identity(), settings);

  REQUIRE(ne_left.matched == 1);
  REQUIRE(ne_right.matched == 1);
  CHECK(ne_left.cost > 0.0);
  const double expected_ratio = (1.0 - 0.98) / (1.0 - 0.5);
  CHECK(ne_right.cost / ne_left.cost ==
        doctest::Approx(expected_ratio).epsilon(1e-6));
  CHECK(ne_right.g.norm() / ne_left.g.norm() ==
        doctest::Approx(expected_ratio).epsilon(1e-6));
  CHECK(ne_right.h.norm() / ne_left.h.norm() ==
        doctest::Approx(expected_ratio).epsilon(1e-6));
}

TEST_CASE("plane neighborhoods get covariances flattened along the normal") {
  std::vector<Point3> plane;
  for (int xi = -6; xi <= 6; ++xi) {
    for (int yi = -6; yi <= 6; ++yi) {
      plane.push_back({0.2 * xi, 0.2 * yi, 0.0});
    }
  }
  const auto covs = regularized_covariances(plane, 20, 1e-3);
  REQUIRE(covs.size() == plane.size());
  // An interior point: normal must be the z axis with the forced spectrum.
  const std::size_t center = plane.size() / 2;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(covs[center]);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1e-3).epsilon(1e-9));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(es.eigenvalues()(2) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(es.eigenvectors().col(0).z()) > 0.999);
}

TEST_CASE("a pure line leaves a rotation unconstrained and is rejected") {
  AttributedPointCloud line;
  std::vector<Point3> source;
  for (int i = -50; i <= 50; ++i) {
    AttributedPoint p;
    p.position = {0.1 * i, 0.0, 0.0};
    line.points.push_back(p);
    if (i % 2 == 0) source.push_back(p.position);
  }
  const GicpSettings settings;
  const MapModel model(line, settings);
  bool thrown = false;
  try {
    register_scan(model, source, Pose::identity(), settings);
  } catch (const DegenerateGeometryError& e) {
    thrown = true;
    CHECK(e.condition < settings.min_condition);
  }
  CHECK(thrown);
}

TEST_CASE("registration rejects a source that matches nothing") {
  const RoomFixture& fx = clean_room();
  const GicpSettings settings;
  const MapModel model(fx.map, settings);
  std::vector<Point3> far;
  for (int i = 0; i < 60; ++i) {
    far.push_back({1000.0 + 0.1 * i, 1000.0, 0.0});
  }
  CHECK_THROWS_AS(register_scan(model, far, Pose::identity(), settings),
                  DegenerateGeometryError);
}

TEST_CASE("single-shot registration validates its inputs") {
  const RoomFixture& fx = clean_room();
  const std::vector<Point3> tiny(10, Point3{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(weighted_gicp(tiny, fx.map, Pose::identity()), Error);
  const AttributedPointCloud empty;
  CHECK_THROWS_AS(
      weighted_gicp(fx.second.session.scans[0].points, empty, Pose::identity()),
      Error);
}

TEST_CASE("decimation keeps the first point per cell in encounter order") {
  const std::vector<Point3> pts = {{0.05, 0.0, 0.0},
                                   {0.15, 0.0, 0.0},
                                   {0.25, 0.0, 0.0},
                                   {-0.05, 0.0, 0.0}};
  const std::vector<Point3> out = decimate_points(pts, 0.2);
  REQUIRE(out.size() == 3);
  CHECK(out[0].x() == 0.05);
  CHECK(out[1].x() == 0.25);
  CHECK(out[2].x() == -0.05);
  CHECK(decimate_points(pts, 0.0).size() == pts.size());
}

TEST_CASE("loop detection finds the revisited place") {
  const RoomFixture& fx = clean_room();
  const LoopCandidate cand =
      detect_loop(fx.anchors, fx.second.session, fx.cfg);
  CHECK(cand.descriptor_distance < 0.2);
  // Without drift both sessions share the world frame, so the seed must be
  // close to the identity.
  CHECK(cand.initial_transform.translation.norm() < 0.5);
  CHECK(rotation_angle(cand.initial_transform.rotation,
                       Eigen::Matrix3d::Identity()) < 0.11);
  // The matched anchor must sit near the matched session scan.
  const Pose& anchor_pose = fx.anchors.poses[cand.anchor_index];
  const Pose& scan_pose = fx.second.true_poses[cand.session_index];
  CHECK((anchor_pose.translation - scan_pose.translation).norm() < 1.5);
}

TEST_CASE("loop detection throws when nothing clears the gate") {
  const RoomFixture& fx = clean_room();
  CHECK_THROWS_AS(detect_loop(fx.anchors, fx.second.session, fx.cfg, 1e-12),
                  LoopNotFoundError);
  const AnchorSet no_anchors;
  CHECK_THROWS_AS(detect_loop(no_anchors, fx.second.session, fx.cfg),
                  LoopNotFoundError);
}

TEST_CASE("zipper alignment keeps a clean revisit in place") {
  const RoomFixture& fx = clean_room();
  const LoopCandidate seed =
      detect_loop(fx.anchors, fx.second.session, fx.cfg);
  const AlignedSession aligned =
      zipper_align(fx.map, fx.second.session, seed, fx.cfg);

  CHECK(aligned.failed_scans == 0);
  REQUIRE(aligned.refined_poses.size() == fx.second.true_poses.size());
  CHECK(aligned.forward_poses.size() == fx.second.true_poses.size());
  CHECK(aligned.diagnostics.size() >= fx.second.true_poses.size());
  for (std::size_t i = 0; i < aligned.refined_poses.size(); ++i) {
    const Pose& got = aligned.refined_poses[i];
    const Pose& want = fx.second.true_poses[i];
    CHECK((got.translation - want.translation).norm() < 0.03);
    CHECK(rotation_angle(got.rotation, want.rotation) <
          0.3 * std::numbers::pi / 180.0);
  }
  const std::string text = diagnostics_to_text(aligned.diagnostics);
  CHECK(std::count(text.begin(), text.end(), '\n') ==
        static_cast<long>(aligned.diagnostics.size()));
}

TEST_CASE("zipper alignment pulls a drifted session back onto the map") {
  const RoomFixture& fx = drifted_room();

  // The odometry drift must actually displace the reported poses. The loop
  // trajectory turns the per-scan nudge with it, so the net displacement
  // stays below the straight-line accumulation.
  double worst_reported = 0.0;
  for (std::size_t i = 0; i < fx.second.true_poses.size(); ++i) {
    worst_reported = std::max(
        worst_reported, (fx.second.session.poses[i].translation -
                         fx.second.true_poses[i].translation)
                            .norm());
  }
  CHECK(worst_reported > 0.04);

  const LoopCandidate seed =
      detect_loop(fx.anchors, fx.second.session, fx.cfg);
  const AlignedSession aligned =
      zipper_align(fx.map, fx.second.session, seed, fx.cfg);
  CHECK(aligned.failed_scans == 0);
  for (std::size_t i = 0; i < aligned.refined_poses.size(); ++i) {
    const Pose& got = aligned.refined_poses[i];
    const Pose& want = fx.second.true_poses[i];
    CHECK((got.translation - want.translation).norm() < 0.05);
    CHECK(rotation_angle(got.rotation, want.rotation) <
          0.5 * std::numbers::pi / 180.0);
  }
}

TEST_CASE("zipper alignment reports an unalignable session") {
  const RoomFixture& fx = clean_room();
  LoopCandidate bad;
  bad.session_index = 0;
  bad.initial_transform = Pose::from_yaw(0.0, {500.0, 0.0, 0.0});
  CHECK_THROWS_AS(zipper_align(fx.map, fx.second.session, bad, fx.cfg),
                  AlignmentError);

  const AttributedPointCloud empty;
  const LoopCandidate seed =
      detect_loop(fx.anchors, fx.second.session, fx.cfg);
  CHECK_THROWS_AS(zipper_align(empty, fx.second.session, seed, fx.cfg), Error);

  Session no_scans;
  CHECK_THROWS_AS(zipper_align(fx.map, no_scans, seed, fx.cfg), Error);

  Session mismatched = fx.second.session;
  mismatched.poses.pop_back();
  LoopCandidate seed0 = seed;
  seed0.session_index = 0;
  CHECK_THROWS_AS(zipper_align(fx.map, mismatched, seed0, fx.cfg), Error);
}
