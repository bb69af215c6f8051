#include "ephmap/render.hpp"

#include "ephmap/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace ephmap::synth {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kThinHalf = 1e-4;  // half-extent for zero-size slabs

struct PlacedBox {
  Point3 center;
  Point3 half;
  double cos_yaw = 1.0;
  double sin_yaw = 0.0;
  PointLabel label = PointLabel::kStatic;
};

PlacedBox place(const Primitive& p, const Point3& center_override,
                bool use_override) {
  PlacedBox b;
  b.center = use_override ? center_override : p.center;
  b.half = 0.5 * p.size;
  for (int k = 0; k < 3; ++k) b.half[k] = std::max(b.half[k], kThinHalf);
  const double yaw = p.yaw_deg * kDegToRad;
  b.cos_yaw = std::cos(yaw);
  b.sin_yaw = std::sin(yaw);
  b.label = p.label;
  return b;
}

// Slab test in the box frame; relies on IEEE inf semantics for
// axis-parallel rays.
bool intersect(const PlacedBox& b, const Point3& origin, const Point3& dir,
               double& t_hit) {
  const Point3 rel = origin - b.center;
  const Point3 o(b.cos_yaw * rel.x() + b.sin_yaw * rel.y(),
                 -b.sin_yaw * rel.x() + b.cos_yaw * rel.y(), rel.z());
  const Point3 d(b.cos_yaw * dir.x() + b.sin_yaw * dir.y(),
                 -b.sin_yaw * dir.x() + b.cos_yaw * dir.y(), dir.z());
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const double inv = 1.0 / d[k];
    double ta = (-b.half[k] - o[k]) * inv;
    double tb = (b.half[k] - o[k]) * inv;
    if (inv < 0.0) std::swap(ta, tb);
    if (std::isnan(ta) || std::isnan(tb)) {
      // Parallel ray outside the slab never hits; inside contributes
      // nothing to the interval.
      if (std::abs(o[k]) > b.half[k]) return false;
      continue;
    }
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  if (t1 < 0.0) return false;
  t_hit = t0 >= 0.0 ? t0 : t1;
  return true;
}

double segment_yaw_blend(double a, double b, double f) {
  return a + (b - a) * f;
}

}  // namespace

Pose trajectory_pose(const SceneSpec& scene, double u) {
  const auto& wps = scene.trajectory;
  if (wps.size() < 2) throw Error("trajectory_pose: need two waypoints");
  u = std::clamp(u, 0.0, 1.0);

  std::vector<double> cumulative(wps.size(), 0.0);
  for (std::size_t i = 1; i < wps.size(); ++i) {
    cumulative[i] = cumulative[i - 1] +
                    (wps[i].position - wps[i - 1].position).norm();
  }
  const double total = cumulative.back();
  if (total <= 0.0) {
    return Pose::from_yaw(wps.front().yaw_deg * kDegToRad,
                          wps.front().position);
  }
  const double s = u * total;
  std::size_t seg = 1;
  while (seg + 1 < wps.size() && cumulative[seg] < s) ++seg;
  const double seg_len = cumulative[seg] - cumulative[seg - 1];
  const double f =
      seg_len > 0.0 ? (s - cumulative[seg - 1]) / seg_len : 0.0;
  const Point3 pos = wps[seg - 1].position +
                     f * (wps[seg].position - wps[seg - 1].position);
  const double yaw =
      segment_yaw_blend(wps[seg - 1].yaw_deg, wps[seg].yaw_deg, f) * kDegToRad;
  return Pose::from_yaw(yaw, pos);
}

LabeledSession render_session(const SceneSpec& scene, int session_1based) {
  scene.validate();
  if (session_1based < 1 || session_1based > scene.sessions) {
    throw Error("render_session: session " + std::to_string(session_1based) +
                " outside 1.." + std::to_string(scene.sessions));
  }

  const int num_scans = scene.scans_per_session;
  LabeledSession out;
  out.session.id = "session_" + std::to_string(session_1based);
  out.session.scans.resize(num_scans);
  out.session.poses.resize(num_scans);
  out.true_poses.resize(num_scans);
  out.labels.resize(num_scans);

  std::vector<const Primitive*> static_shapes;
  for (const Primitive& p : scene.primitives) {
    if (p.present_in(session_1based)) static_shapes.push_back(&p);
  }
  std::vector<const Actor*> live_actors;
  for (const Actor& a : scene.actors) {
    if (a.shape.present_in(session_1based)) live_actors.push_back(&a);
  }

  const bool drifting =
      session_1based >= scene.drift.drift_from_session &&
      (scene.drift.per_scan_translation.norm() > 0.0 ||
       scene.drift.per_scan_yaw_deg != 0.0);
  const Pose drift_step = Pose::from_yaw(
      scene.drift.per_scan_yaw_deg * kDegToRad,
      scene.drift.per_scan_translation);

  for (int i = 0; i < num_scans; ++i) {
    const double u = static_cast<double>(i) /
                     static_cast<double>(num_scans - 1);
    const Pose pose = trajectory_pose(scene, u);
    out.true_poses[i] = pose;

    std::vector<PlacedBox> boxes;
    boxes.reserve(static_shapes.size() + live_actors.size());
    for (const Primitive* p : static_shapes) {
      boxes.push_back(place(*p, {}, false));
    }
    for (const Actor* a : live_actors) {
      const Point3 center = a->start + u * (a->end - a->start);
      boxes.push_back(place(a->shape, center, true));
    }

    // One generator per (seed, session, scan) so scans can be rendered in
    // any order or subset without changing their content.
    std::mt19937_64 rng(scene.seed * 0x9e3779b97f4a7c15ull +
                        static_cast<std::uint64_t>(session_1based) * 1000003ull +
                        static_cast<std::uint64_t>(i));
    std::normal_distribution<double> noise(0.0, scene.sensor.range_noise);

    Scan& scan = out.session.scans[i];
    scan.timestamp = i * scene.scan_period;
    std::vector<PointLabel>& labels = out.labels[i];

    const int n_el = scene.sensor.elevation_rays;
    const int n_az = scene.sensor.azimuth_rays;
    for (int e = 0; e < n_el; ++e) {
      const double el_deg =
          n_el == 1 ? scene.sensor.elevation_min_deg
                    : scene.sensor.elevation_min_deg +
                          (scene.sensor.elevation_max_deg -
                           scene.sensor.elevation_min_deg) *
                              e / (n_el - 1);
      const double el = el_deg * kDegToRad;
      const double cos_el = std::cos(el);
      const double sin_el = std::sin(el);
      for (int a = 0; a < n_az; ++a) {
        const double az = 2.0 * std::numbers::pi * a / n_az;
        const Point3 dir_sensor(cos_el * std::cos(az), cos_el * std::sin(az),
                                sin_el);
        const Point3 dir_world = pose.rotation * dir_sensor;
        const Point3 origin = pose.translation;

        double best_t = std::numeric_limits<double>::infinity();
        PointLabel best_label = PointLabel::kStatic;
        for (const PlacedBox& b : boxes) {
          double t = 0.0;
          if (intersect(b, origin, dir_world, t) &&
              t >= scene.sensor.min_range && t < best_t) {
            best_t = t;
            best_label = b.label;
          }
        }
        if (!std::isfinite(best_t) || best_t > scene.sensor.max_range) {
          continue;
        }
        double range = best_t;
        if (scene.sensor.range_noise > 0.0) {
          range = std::max(scene.sensor.min_range, range + noise(rng));
        }
        if (range > scene.sensor.max_range) range = scene.sensor.max_range;
        scan.points.push_back(range * dir_sensor);
        labels.push_back(best_label);
      }
    }
  }

  // Reported poses: exact until drift starts, then every relative motion
  // picks up the per-scan nudge.
  if (!drifting) {
    out.session.poses = out.true_poses;
  } else {
    out.session.poses[0] = out.true_poses[0];
    for (int i = 1; i < num_scans; ++i) {
      const Pose rel = out.true_poses[i - 1].inverse() * out.true_poses[i];
      out.session.poses[i] = out.session.poses[i - 1] * rel * drift_step;
    }
  }
  return out;
}

GroundTruthSplit split_ground_truth(const LabeledSession& rendered) {
  GroundTruthSplit split;
  for (std::size_t i = 0; i < rendered.session.scans.size(); ++i) {
    const Scan& scan = rendered.session.scans[i];
    const Pose& pose = rendered.true_poses[i];
    for (std::size_t j = 0; j < scan.points.size(); ++j) {
      const Point3 world = pose * scan.points[j];
      switch (rendered.labels[i][j]) {
        case PointLabel::kStatic:
          split.static_points.push_back(world);
          break;
        case PointLabel::kDynamic:
          split.dynamic_points.push_back(world);
          break;
        case PointLabel::kSessionTransient:
          split.transient_points.push_back(world);
          break;
      }
    }
  }
  return split;
}

}  // namespace ephmap::synth
