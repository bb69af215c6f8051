#include "ephmap/types.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace ephmap {

Pose Pose::from_yaw(double yaw_rad, const Eigen::Vector3d& t) {
  Pose p;
  const double c = std::cos(yaw_rad);
  const double s = std::sin(yaw_rad);
  p.rotation << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  p.translation = t;
  return p;
}

double Pose::orthonormality_error() const {
  Eigen::Matrix3d d =
      rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  return d.cwiseAbs().maxCoeff();
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d hat = skew(phi);
  if (theta < 1e-10) {
    return Eigen::Matrix3d::Identity() + hat + 0.5 * hat * hat;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + a * hat + b * hat * hat;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation) {
  const double tr = rotation.trace();
  const double cos_theta = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  Eigen::Vector3d axis(rotation(2, 1) - rotation(1, 2),
                       rotation(0, 2) - rotation(2, 0),
                       rotation(1, 0) - rotation(0, 1));
  if (theta < 1e-10) {
    return 0.5 * axis;
  }
  const double s = std::sin(theta);
  if (std::abs(s) > 1e-6) {
    return (0.5 * theta / s) * axis;
  }
  // Near pi the off-diagonal differences vanish; recover the axis from the
  // dominant diagonal term instead.
  Eigen::Matrix3d m = 0.5 * (rotation + Eigen::Matrix3d::Identity());
  int k = 0;
  m.diagonal().maxCoeff(&k);
  Eigen::Vector3d a = m.col(k) / std::sqrt(std::max(m(k, k), 1e-12));
  a.normalize();
  // Fix the sign using the skew part.
  Eigen::Vector3d sk(rotation(2, 1) - rotation(1, 2),
                     rotation(0, 2) - rotation(2, 0),
                     rotation(1, 0) - rotation(0, 1));
  if (sk.dot(a) < 0.0) a = -a;
  return theta * a;
}

Pose se3_exp(const Vector6d& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  const double theta = phi.norm();
  const Eigen::Matrix3d hat = skew(phi);
  Eigen::Matrix3d v;
  if (theta < 1e-10) {
    v = Eigen::Matrix3d::Identity() + 0.5 * hat + hat * hat / 6.0;
  } else {
    const double t2 = theta * theta;
    v = Eigen::Matrix3d::Identity() +
        ((1.0 - std::cos(theta)) / t2) * hat +
        ((theta - std::sin(theta)) / (t2 * theta)) * hat * hat;
  }
  Pose p;
  p.rotation = so3_exp(phi);
  p.translation = v * rho;
  return p;
}

Vector6d se3_log(const Pose& pose) {
  const Eigen::Vector3d phi = so3_log(pose.rotation);
  const double theta = phi.norm();
  const Eigen::Matrix3d hat = skew(phi);
  Eigen::Matrix3d v_inv;
  if (theta < 1e-10) {
    v_inv = Eigen::Matrix3d::Identity() - 0.5 * hat + hat * hat / 12.0;
  } else {
    const double half = 0.5 * theta;
    const double cot_half = std::cos(half) / std::sin(half);
    const double a = (1.0 - half * cot_half) / (theta * theta);
    v_inv = Eigen::Matrix3d::Identity() - 0.5 * hat + a * hat * hat;
  }
  Vector6d xi;
  xi.head<3>() = v_inv * pose.translation;
  xi.tail<3>() = phi;
  return xi;
}

Pose orthonormalized(const Pose& pose) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      pose.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return {r, pose.translation};
}

std::vector<Point3> AttributedPointCloud::positions() const {
  std::vector<Point3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.position);
  return out;
}

}  // namespace ephmap
