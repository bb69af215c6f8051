#pragma once

#include "ephmap/types.hpp"

#include <optional>
#include <vector>

namespace ephmap {

// Agreement between two clouds under nearest-neighbor pairing. A metric
// that has no defined value (no inliers, empty reference) is reported as
// absent rather than zero.
struct AlignmentMetrics {
  double acceptance = 0.0;            // inlier fraction of a against b
  std::optional<double> rmse;         // over the a->b inlier distances
  std::optional<double> chamfer;      // sum of both directions' inlier means
};

AlignmentMetrics alignment_metrics(const std::vector<Point3>& cloud_a,
                                   const std::vector<Point3>& cloud_b,
                                   double sigma_inlier);

// Quality of a cleaned map against labeled ground truth. Preservation: how
// much of the true static structure survived. Rejection: how much of the
// true transient structure is gone.
struct CleaningMetrics {
  std::optional<double> preservation;  // static points with a nearby survivor
  std::optional<double> rejection;     // transient points with none
  std::optional<double> f1;
};

CleaningMetrics cleaning_metrics(const std::vector<Point3>& cleaned,
                                 const std::vector<Point3>& truth_static,
                                 const std::vector<Point3>& truth_transient,
                                 double match_radius);

}  // namespace ephmap
