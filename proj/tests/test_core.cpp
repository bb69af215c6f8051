#include "ephmap/config.hpp"
#include "ephmap/ephemerality.hpp"
#include "ephmap/errors.hpp"
#include "ephmap/propagation.hpp"
#include "ephmap/types.hpp"
#include "ephmap/validation.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

using namespace ephmap;

TEST_CASE("clamp keeps beliefs inside the saturation bounds") {
  CHECK(clamp_eph(0.5) == 0.5);
  CHECK(clamp_eph(0.0) == kEphMin);
  CHECK(clamp_eph(0.001) == kEphMin);
  CHECK(clamp_eph(1.0) == kEphMax);
  CHECK(clamp_eph(42.0) == kEphMax);
  CHECK(clamp_eph(kEphMin) == kEphMin);
  CHECK(clamp_eph(kEphMax) == kEphMax);
  CHECK_THROWS_AS(clamp_eph(std::numeric_limits<double>::quiet_NaN()),
                  Error);
  CHECK_THROWS_AS(clamp_eph(std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("fusion matches the direct odds-form expression on a grid") {
  for (int i = 1; i <= 99; ++i) {
    for (int j = 1; j <= 99; ++j) {
      const double prior = i / 100.0;
      const double evidence = j / 100.0;
      const double got = bayes_fuse(prior, evidence);
      if (j == 50) {
        CHECK(got == clamp_eph(prior));
        continue;
      }
      const double raw = (evidence * prior) /
                         (evidence * prior + (1.0 - evidence) * (1.0 - prior));
      const double expected = std::min(std::max(raw, 0.01), 0.99);
      CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("neutral evidence returns the prior bit for bit") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(kEphMin, kEphMax);
  for (int i = 0; i < 1000; ++i) {
    const double prior = dist(rng);
    CHECK(bayes_fuse(prior, 0.5) == prior);
  }
  CHECK(bayes_fuse(0.7, 0.5) == 0.7);
}

TEST_CASE("fusion worked examples") {
  CHECK(bayes_fuse(0.5, 0.9) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(bayes_fuse(0.9, 0.9) == doctest::Approx(0.81 / 0.82).epsilon(1e-12));
  CHECK(bayes_fuse(0.2, 0.5) == 0.2);
  CHECK(bayes_fuse(0.5, 0.99) == doctest::Approx(0.99).epsilon(1e-12));
  // Repeated confident evidence saturates at the upper bound.
  double p = 0.5;
  for (int i = 0; i < 50; ++i) p = bayes_fuse(p, 0.9);
  CHECK(p == kEphMax);
}

TEST_CASE("fusion moves the prior toward the evidence monotonically") {
  for (int i = 2; i <= 98; ++i) {
    const double prior = i / 100.0;
    CHECK(bayes_fuse(prior, 0.9) > prior);
    CHECK(bayes_fuse(prior, 0.1) < prior);
  }
  // Larger prior, same evidence: never a smaller posterior.
  for (int i = 1; i < 99; ++i) {
    CHECK(bayes_fuse((i + 1) / 100.0, 0.8) >= bayes_fuse(i / 100.0, 0.8));
  }
}

TEST_CASE("kernel endpoints") {
  PipelineConfig cfg;
  CHECK(propagation_kernel(0.0, RayKind::kOccupied, cfg) == 0.1);
  CHECK(propagation_kernel(0.0, RayKind::kFreeSpace, cfg) == 0.9);
  CHECK(propagation_kernel(1e9, RayKind::kOccupied, cfg) == 0.5);
  CHECK(propagation_kernel(1e9, RayKind::kFreeSpace, cfg) == 0.5);
}

TEST_CASE("kernel saturates exactly at the neutral belief") {
  PipelineConfig cfg;
  // Each branch meets 0.5 at sigma * sqrt(ln 5) and is clamped there.
  const double cross = std::sqrt(std::log(5.0));
  const double occ_at = cfg.sigma_o * cross;
  const double free_at = cfg.sigma_f * cross;
  CHECK(propagation_kernel(occ_at, RayKind::kOccupied, cfg) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(propagation_kernel(free_at, RayKind::kFreeSpace, cfg) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(propagation_kernel(occ_at + 1e-3, RayKind::kOccupied, cfg) == 0.5);
  CHECK(propagation_kernel(free_at + 1e-3, RayKind::kFreeSpace, cfg) == 0.5);
}

TEST_CASE("kernel shape near and far") {
  PipelineConfig cfg;
  // A surface hit close to an existing point argues persistence, free
  // space passing close argues transience.
  CHECK(propagation_kernel(0.01, RayKind::kOccupied, cfg) < 0.2);
  CHECK(propagation_kernel(0.05, RayKind::kFreeSpace, cfg) > 0.85);
  // Occupied rises, free falls, both toward 0.5.
  double prev_occ = propagation_kernel(0.0, RayKind::kOccupied, cfg);
  double prev_free = propagation_kernel(0.0, RayKind::kFreeSpace, cfg);
  for (int i = 1; i <= 100; ++i) {
    const double x = i * 0.01;
    const double occ = propagation_kernel(x, RayKind::kOccupied, cfg);
    const double fre = propagation_kernel(x, RayKind::kFreeSpace, cfg);
    CHECK(occ >= prev_occ);
    CHECK(fre <= prev_free);
    prev_occ = occ;
    prev_free = fre;
  }
}

TEST_CASE("default configuration is valid and hashes stably") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.hash() == PipelineConfig{}.hash());

  PipelineConfig other;
  other.tau_g = 0.8;
  CHECK(other.hash() != cfg.hash());
}

TEST_CASE("canonical text is sorted and round-trips through parse") {
  PipelineConfig cfg;
  cfg.knn = 8;
  cfg.sigma_f = 0.35;
  const std::string text = cfg.canonical();
  CHECK(text.rfind("alpha = ", 0) == 0);

  std::istringstream in(text);
  const PipelineConfig parsed = PipelineConfig::parse(in, "canonical");
  CHECK(parsed.hash() == cfg.hash());
  CHECK(parsed.knn == 8);
  CHECK(parsed.sigma_f == 0.35);
}

TEST_CASE("config parse rejects malformed input with file and line") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return PipelineConfig::parse(in, "test.cfg");
  };
  CHECK_THROWS_WITH_AS(parse("no_such_key = 1\n"),
                       doctest::Contains("test.cfg:1"), ValidationError);
  CHECK_THROWS_WITH_AS(parse("alpha = 0.5\nknn = banana\n"),
                       doctest::Contains("test.cfg:2"), ValidationError);
  CHECK_THROWS_AS(parse("alpha 0.5\n"), ValidationError);
  // Comments and blank lines pass through.
  CHECK_NOTHROW(parse("# comment\n\nalpha = 0.5\n"));
}

TEST_CASE("config validation collects every violation") {
  PipelineConfig cfg;
  cfg.alpha = -1.0;
  cfg.knn = 0;
  cfg.tau_l = 2.0;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("alpha") != std::string::npos);
    CHECK(msg.find("knn") != std::string::npos);
    CHECK(msg.find("tau_l") != std::string::npos);
  }
}

TEST_CASE("number formatting round-trips exactly") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = dist(rng);
    CHECK(parse_double(format_double(v), "roundtrip") == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("1.5x", "ctx"), ValidationError);
  CHECK_THROWS_AS(parse_double("", "ctx"), ValidationError);
}

TEST_CASE("yaw rotation convention is counterclockwise about +z") {
  const Pose p = Pose::from_yaw(M_PI / 2.0);
  const Point3 moved = p * Point3(1.0, 0.0, 0.0);
  CHECK(moved.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(moved.y() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(moved.z() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pose inverse and composition") {
  const Pose p = Pose::from_yaw(0.7, {1.0, -2.0, 3.0});
  const Pose ident = p * p.inverse();
  CHECK(ident.orthonormality_error() < 1e-12);
  CHECK(ident.translation.norm() < 1e-12);
  CHECK((ident.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);

  const Point3 x(0.3, 0.4, 0.5);
  CHECK((p.inverse() * (p * x) - x).norm() < 1e-12);
}

TEST_CASE("twist exponential and logarithm invert each other") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Vector6d xi;
    for (int k = 0; k < 6; ++k) xi[k] = dist(rng);
    // Keep the rotation magnitude away from the pi ambiguity.
    xi.tail<3>() *= 0.9 * M_PI / std::max(1.0, xi.tail<3>().norm() * 3.0);
    const Pose pose = se3_exp(xi);
    CHECK(pose.orthonormality_error() < 1e-9);
    const Vector6d back = se3_log(pose);
    CHECK((back - xi).norm() < 1e-9);
  }
  // Identity and tiny twists go through the small-angle path.
  CHECK(se3_log(Pose::identity()).norm() == 0.0);
  Vector6d tiny;
  tiny << 1e-12, 0, 0, 0, 0, 1e-13;
  CHECK((se3_log(se3_exp(tiny)) - tiny).norm() < 1e-15);
}

TEST_CASE("rotation log handles angles near pi") {
  const Eigen::Matrix3d r = so3_exp({0.0, 0.0, M_PI - 1e-7});
  const Eigen::Vector3d phi = so3_log(r);
  CHECK(phi.norm() == doctest::Approx(M_PI - 1e-7).epsilon(1e-9));
  CHECK(phi.z() > 0.0);
}

TEST_CASE("orthonormalization repairs a drifted rotation") {
  Pose p = Pose::from_yaw(0.4, {1, 2, 3});
  p.rotation(0, 1) += 1e-4;
  p.rotation(2, 0) -= 2e-4;
  CHECK(p.orthonormality_error() > 1e-5);
  const Pose fixed = orthonormalized(p);
  CHECK(fixed.orthonormality_error() < 1e-12);
  CHECK(fixed.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fixed.translation == p.translation);
}

namespace {

Session small_valid_session() {
  Session s;
  s.id = "s1";
  for (int i = 0; i < 3; ++i) {
    Scan scan;
    scan.timestamp = i * 0.5;
    scan.points = {{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 1.5}};
    s.scans.push_back(scan);
    s.poses.push_back(Pose::from_yaw(0.1 * i, {double(i), 0.0, 0.0}));
  }
  return s;
}

}  // namespace

TEST_CASE("session validation accepts a well-formed session") {
  const PipelineConfig cfg;
  CHECK(validate_session(small_valid_session(), cfg).ok());
  CHECK_NOTHROW(require_valid_session(small_valid_session(), cfg));
}

TEST_CASE("session validation reports each defect with its code") {
  const PipelineConfig cfg;
  auto has_code = [](const ValidationReport& r, const std::string& code) {
    for (const auto& i : r.issues) {
      if (i.code == code) return true;
    }
    return false;
  };

  CHECK(has_code(validate_session(Session{}, cfg), "empty_session"));

  Session s = small_valid_session();
  s.poses.pop_back();
  CHECK(has_code(validate_session(s, cfg), "pose_count_mismatch"));

  s = small_valid_session();
  s.scans[1].points.clear();
  CHECK(has_code(validate_session(s, cfg), "empty_scan"));

  s = small_valid_session();
  s.scans[2].timestamp = s.scans[1].timestamp;
  CHECK(has_code(validate_session(s, cfg), "timestamp_order"));

  s = small_valid_session();
  s.scans[0].points[1] = {1e6, 0.0, 0.0};
  CHECK(has_code(validate_session(s, cfg), "out_of_range"));

  s = small_valid_session();
  s.scans[0].points[0].x() = std::numeric_limits<double>::quiet_NaN();
  CHECK(has_code(validate_session(s, cfg), "nonfinite_point"));

  s = small_valid_session();
  s.poses[1].rotation(0, 0) = 2.0;
  CHECK(has_code(validate_session(s, cfg), "pose_not_rigid"));

  s = small_valid_session();
  s.scans[1].points.clear();
  s.poses[0].rotation(1, 1) = 0.0;
  CHECK_THROWS_AS(require_valid_session(s, cfg), ValidationError);
}
