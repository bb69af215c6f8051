#pragma once

#include "ephmap/config.hpp"
#include "ephmap/kdtree.hpp"
#include "ephmap/types.hpp"

#include <Eigen/Core>

#include <vector>

namespace ephmap {

struct GicpSettings {
  int max_iterations = 50;
  double convergence_delta = 1e-6;   // update norm ending iteration
  double correspondence_gate = 1.0;  // meters
  int covariance_knn = 20;
  double plane_epsilon = 1e-3;       // smallest regularized eigenvalue
  double decimation_cell = 0.2;      // scan thinning used by the aligner
  double min_condition = 1e-12;      // eigenvalue ratio treated as solvable
  std::size_t min_correspondences = 10;
  // Iterations without cost improvement before the best iterate is accepted;
  // correspondence flips can cycle forever without shrinking the update.
  int stall_iterations = 8;
};

struct RegistrationResult {
  Pose transform;  // source -> target
  bool converged = false;
  int iterations = 0;
  double final_cost = 0.0;
  double inlier_fraction = 0.0;  // gated matches / source size at the result
};

// Target map prepared for repeated registrations: neighbor index, per-point
// plane-regularized covariances, and per-point weights 1 - eps_g normalized
// by the largest weight. Uniform transiency therefore reduces to weight 1
// everywhere, which keeps the uniform case bit-identical to unweighted
// optimization.
class MapModel {
 public:
  MapModel(const AttributedPointCloud& map, const GicpSettings& settings);

  const KdIndex& index() const { return index_; }
  const Eigen::Matrix3d& covariance(std::size_t i) const { return covs_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::size_t size() const { return index_.size(); }

 private:
  KdIndex index_;
  std::vector<Eigen::Matrix3d> covs_;
  std::vector<double> weights_;
};

// One evaluation of the weighted objective at pose T: normal equations,
// cost, and gated-match count. Exposed for solver iterations and for tests
// probing how weights scale each point's contribution.
struct NormalEquations {
  Matrix6d h = Matrix6d::Zero();
  Vector6d g = Vector6d::Zero();
  double cost = 0.0;
  std::size_t matched = 0;
};

NormalEquations accumulate_normal_equations(const MapModel& target,
                                            const std::vector<Point3>& source,
                                            const std::vector<Eigen::Matrix3d>& source_covs,
                                            const Pose& transform,
                                            const GicpSettings& settings);

// Plane-regularized covariances for a raw point set (eigenvalues forced to
// plane_epsilon, 1, 1).
std::vector<Eigen::Matrix3d> regularized_covariances(
    const std::vector<Point3>& points, int knn, double plane_epsilon);

// Registers source against a prepared target model. Throws
// DegenerateGeometryError when the problem leaves directions unconstrained
// (with the observed eigenvalue ratio in the message) or when almost
// nothing matches.
RegistrationResult register_scan(const MapModel& target,
                                 const std::vector<Point3>& source,
                                 const Pose& initial_guess,
                                 const GicpSettings& settings);

// Convenience single-shot form: builds the model, computes source
// covariances, registers. Requires at least 50 source points.
RegistrationResult weighted_gicp(const std::vector<Point3>& source,
                                 const AttributedPointCloud& target,
                                 const Pose& initial_guess,
                                 const GicpSettings& settings = {});

// Keeps the first point seen in each cell, preserving encounter order.
std::vector<Point3> decimate_points(const std::vector<Point3>& points,
                                    double cell_size);

}  // namespace ephmap
