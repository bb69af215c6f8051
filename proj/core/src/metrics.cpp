#include "ephmap/metrics.hpp"

#include "ephmap/errors.hpp"
#include "ephmap/kdtree.hpp"
#include "ephmap/parallel.hpp"

#include <cmath>
#include <limits>

namespace ephmap {

namespace {

// Nearest-neighbor distance of every query against index, queried in
// parallel but reduced sequentially by the callers so sums stay
// associativity-stable.
std::vector<double> nn_distances(const std::vector<Point3>& queries,
                                 const KdIndex& index) {
  std::vector<double> dist(queries.size(),
                           std::numeric_limits<double>::infinity());
  if (index.empty()) return dist;
  parallel_blocks(queries.size(), kDefaultBlock,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i) {
                      dist[i] = index.nearest(queries[i])->distance;
                    }
                  });
  return dist;
}

struct DirectionalStats {
  std::size_t inliers = 0;
  double sum = 0.0;     // inlier distances
  double sum_sq = 0.0;  // squared inlier distances
};

DirectionalStats gated_stats(const std::vector<double>& dist, double gate) {
  DirectionalStats s;
  for (double d : dist) {
    if (d <= gate) {
      ++s.inliers;
      s.sum += d;
      s.sum_sq += d * d;
    }
  }
  return s;
}

}  // namespace

AlignmentMetrics alignment_metrics(const std::vector<Point3>& cloud_a,
                                   const std::vector<Point3>& cloud_b,
                                   double sigma_inlier) {
  if (cloud_a.empty() || cloud_b.empty()) {
    throw Error("alignment_metrics: both clouds must be nonempty");
  }
  if (!(sigma_inlier > 0.0)) {
    throw Error("alignment_metrics: sigma_inlier must be > 0");
  }

  const KdIndex index_a(cloud_a);
  const KdIndex index_b(cloud_b);
  const std::vector<double> ab = nn_distances(cloud_a, index_b);
  const std::vector<double> ba = nn_distances(cloud_b, index_a);
  const DirectionalStats sab = gated_stats(ab, sigma_inlier);
  const DirectionalStats sba = gated_stats(ba, sigma_inlier);

  AlignmentMetrics m;
  m.acceptance = static_cast<double>(sab.inliers) /
                 static_cast<double>(cloud_a.size());
  if (sab.inliers > 0) {
    m.rmse = std::sqrt(sab.sum_sq / static_cast<double>(sab.inliers));
  }
  if (sab.inliers > 0 && sba.inliers > 0) {
    m.chamfer = sab.sum / static_cast<double>(sab.inliers) +
                sba.sum / static_cast<double>(sba.inliers);
  }
  return m;
}

CleaningMetrics cleaning_metrics(const std::vector<Point3>& cleaned,
                                 const std::vector<Point3>& truth_static,
                                 const std::vector<Point3>& truth_transient,
                                 double match_radius) {
  if (!(match_radius > 0.0)) {
    throw Error("cleaning_metrics: match_radius must be > 0");
  }
  const KdIndex cleaned_index(cleaned);

  CleaningMetrics m;
  if (!truth_static.empty()) {
    const std::vector<double> d = nn_distances(truth_static, cleaned_index);
    std::size_t kept = 0;
    for (double x : d) {
      if (x <= match_radius) ++kept;
    }
    m.preservation = static_cast<double>(kept) /
                     static_cast<double>(truth_static.size());
  }
  if (!truth_transient.empty()) {
    const std::vector<double> d = nn_distances(truth_transient, cleaned_index);
    std::size_t gone = 0;
    for (double x : d) {
      if (!(x <= match_radius)) ++gone;
    }
    m.rejection = static_cast<double>(gone) /
                  static_cast<double>(truth_transient.size());
  }
  if (m.preservation && m.rejection) {
    const double p = *m.preservation;
    const double r = *m.rejection;
    m.f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return m;
}

}  // namespace ephmap
