#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace ephmap {

using Point3 = Eigen::Vector3d;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

inline bool point_is_finite(const Point3& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

// Rigid transform. Rotation is kept orthonormal; raw 3x4 rows from disk are
// re-projected on load when they deviate.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose from_yaw(double yaw_rad,
                       const Eigen::Vector3d& t = Eigen::Vector3d::Zero());

  Point3 operator*(const Point3& p) const { return rotation * p + translation; }
  Pose operator*(const Pose& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }
  Pose inverse() const {
    Eigen::Matrix3d rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  // Max absolute entry of R^T R - I.
  double orthonormality_error() const;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);
// xi = [rho; phi], exp acts as p -> R p + V rho.
Pose se3_exp(const Vector6d& xi);
Vector6d se3_log(const Pose& pose);
// Nearest rotation (Frobenius) via SVD, det forced to +1.
Pose orthonormalized(const Pose& pose);

struct Scan {
  std::vector<Point3> points;  // sensor frame
  Point3 sensor_origin = Point3::Zero();
  double timestamp = 0.0;
};

struct Session {
  std::string id;
  std::vector<Scan> scans;
  std::vector<Pose> poses;  // sensor -> session frame, one per scan
  std::size_t size() const { return scans.size(); }
};

struct AttributedPoint {
  Point3 position = Point3::Zero();
  double eps_l = 0.5;  // within-session transiency
  double eps_g = 0.5;  // cross-session transiency
};

struct AttributedPointCloud {
  std::vector<AttributedPoint> points;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  std::vector<Point3> positions() const;
};

}  // namespace ephmap
