#include "ephmap/gicp.hpp"

#include "ephmap/errors.hpp"
#include "ephmap/parallel.hpp"
#include "ephmap/voxel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <unordered_set>

namespace ephmap {

std::vector<Eigen::Matrix3d> regularized_covariances(
    const std::vector<Point3>& points, int knn, double plane_epsilon) {
  const KdIndex index(points);
  std::vector<Eigen::Matrix3d> covs(points.size());
  const std::size_t k = static_cast<std::size_t>(knn);
  parallel_blocks(
      points.size(), kDefaultBlock,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<KdIndex::Neighbor> nbrs;
        for (std::size_t i = begin; i < end; ++i) {
          index.knn(points[i], k, nbrs);
          Point3 mean = Point3::Zero();
          for (const auto& nb : nbrs) mean += points[nb.index];
          mean /= static_cast<double>(nbrs.size());
          Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
          for (const auto& nb : nbrs) {
            const Point3 d = points[nb.index] - mean;
            c += d * d.transpose();
          }
          c /= static_cast<double>(nbrs.size());
          Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c);
          const Eigen::Matrix3d v = es.eigenvectors();
          // Ascending eigenvalues: col(0) is the local surface normal.
          // Forcing the spectrum to (eps, 1, 1) keeps every residual
          // plane-aware regardless of how flat the neighborhood is.
          Eigen::Vector3d lam(plane_epsilon, 1.0, 1.0);
          covs[i] = v * lam.asDiagonal() * v.transpose();
        }
      });
  return covs;
}

MapModel::MapModel(const AttributedPointCloud& map,
                   const GicpSettings& settings)
    : index_(map.positions()) {
  if (map.empty()) throw Error("MapModel: empty target map");
  covs_ = regularized_covariances(map.positions(), settings.covariance_knn,
                                  settings.plane_epsilon);
  weights_.resize(map.size());
  double max_w = 0.0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    weights_[i] = 1.0 - map.points[i].eps_g;
    max_w = std::max(max_w, weights_[i]);
  }
  if (max_w <= 0.0) throw Error("MapModel: all map weights are zero");
  for (double& w : weights_) w /= max_w;
}

NormalEquations accumulate_normal_equations(
    const MapModel& target, const std::vector<Point3>& source,
    const std::vector<Eigen::Matrix3d>& source_covs, const Pose& transform,
    const GicpSettings& settings) {
  if (source.size() != source_covs.size()) {
    throw Error("accumulate_normal_equations: source/covariance mismatch");
  }
  const std::size_t n = source.size();
  const std::size_t num_blocks = (n + kDefaultBlock - 1) / kDefaultBlock;
  std::vector<NormalEquations> partial(num_blocks);

  const Eigen::Matrix3d r = transform.rotation;
  parallel_blocks(
      n, kDefaultBlock, [&](std::size_t b, std::size_t begin, std::size_t end) {
        NormalEquations ne;
        for (std::size_t i = begin; i < end; ++i) {
          const Point3 q = transform * source[i];
          const auto nb = target.index().nearest(q);
          if (!nb || nb->distance > settings.correspondence_gate) continue;
          const Point3 d = q - target.index().point(nb->index);
          const Eigen::Matrix3d sigma =
              target.covariance(nb->index) + r * source_covs[i] * r.transpose();
          const Eigen::Matrix3d m = sigma.inverse();
          const double w = target.weight(nb->index);

          Eigen::Matrix<double, 3, 6> j;
          j.leftCols<3>() = Eigen::Matrix3d::Identity();
          j.rightCols<3>() = -skew(q);

          const Eigen::Matrix<double, 6, 3> jtm = j.transpose() * m;
          ne.h += w * (jtm * j);
          ne.g += w * (jtm * d);
          ne.cost += w * d.dot(m * d);
          ++ne.matched;
        }
        partial[b] = ne;
      });

  NormalEquations total;
  for (const NormalEquations& ne : partial) {
    total.h += ne.h;
    total.g += ne.g;
    total.cost += ne.cost;
    total.matched += ne.matched;
  }
  return total;
}

namespace {

Vector6d solve_checked(const Matrix6d& h, const Vector6d& g,
                       const GicpSettings& settings) {
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(h);
  const Vector6d lam = es.eigenvalues();
  const double lam_min = lam(0);
  const double lam_max = lam(5);
  if (!(lam_max > 0.0) || !(lam_min / lam_max > settings.min_condition)) {
    const double ratio = lam_max > 0.0 ? lam_min / lam_max : 0.0;
    throw DegenerateGeometryError(
        "registration geometry is degenerate (eigenvalue ratio " +
            format_double(ratio) + ", smallest " + format_double(lam_min) +
            "); the scan does not constrain all six degrees of freedom",
        ratio);
  }
  return es.eigenvectors() *
         (es.eigenvectors().transpose() * (-g)).cwiseQuotient(lam);
}

}  // namespace

RegistrationResult register_scan(const MapModel& target,
                                 const std::vector<Point3>& source,
                                 const Pose& initial_guess,
                                 const GicpSettings& settings) {
  std::vector<Eigen::Matrix3d> source_covs = regularized_covariances(
      source, settings.covariance_knn, settings.plane_epsilon);

  RegistrationResult result;
  result.transform = initial_guess;
  Pose best_transform = initial_guess;
  double best_cost = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    const NormalEquations ne = accumulate_normal_equations(
        target, source, source_covs, result.transform, settings);
    if (ne.matched < settings.min_correspondences) {
      throw DegenerateGeometryError(
          "only " + std::to_string(ne.matched) +
              " correspondences under the gate, cannot register",
          0.0);
    }
    if (ne.cost < best_cost) {
      best_cost = ne.cost;
      best_transform = result.transform;
      stall = 0;
    } else if (++stall >= settings.stall_iterations) {
      result.transform = best_transform;
      result.converged = true;
      break;
    }
    const Vector6d delta = solve_checked(ne.h, ne.g, settings);
    result.transform = se3_exp(delta) * result.transform;
    result.iterations = iter;
    if (delta.norm() < settings.convergence_delta) {
      result.converged = true;
      break;
    }
  }

  const NormalEquations final_ne = accumulate_normal_equations(
      target, source, source_covs, result.transform, settings);
  result.final_cost = final_ne.cost;
  result.inlier_fraction = source.empty()
                               ? 0.0
                               : static_cast<double>(final_ne.matched) /
                                     static_cast<double>(source.size());
  return result;
}

RegistrationResult weighted_gicp(const std::vector<Point3>& source,
                                 const AttributedPointCloud& target,
                                 const Pose& initial_guess,
                                 const GicpSettings& settings) {
  if (source.size() < 50) {
    throw Error("weighted_gicp: needs at least 50 source points, got " +
                std::to_string(source.size()));
  }
  if (target.empty()) throw Error("weighted_gicp: empty target map");
  const MapModel model(target, settings);
  return register_scan(model, source, initial_guess, settings);
}

std::vector<Point3> decimate_points(const std::vector<Point3>& points,
                                    double cell_size) {
  if (!(cell_size > 0.0)) return points;
  std::unordered_set<CellKey, CellKeyHash> seen;
  std::vector<Point3> out;
  out.reserve(points.size() / 4 + 1);
  for (const Point3& p : points) {
    if (seen.insert(cell_key(p, cell_size)).second) out.push_back(p);
  }
  return out;
}

}  // namespace ephmap
