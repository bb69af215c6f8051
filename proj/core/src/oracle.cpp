#include "ephmap/oracle.hpp"

#include "ephmap/ephemerality.hpp"
#include "ephmap/errors.hpp"
#include "ephmap/propagation.hpp"

#include <algorithm>
#include <cmath>

namespace ephmap::synth {

namespace {

struct Candidate {
  double d2;
  std::size_t index;
};

// All-pairs k nearest with the same (distance, index) ordering the tree
// guarantees.
std::vector<Candidate> linear_knn(const std::vector<Point3>& points,
                                  const Point3& query, std::size_t k) {
  std::vector<Candidate> all;
  all.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    all.push_back({(points[i] - query).squaredNorm(), i});
  }
  auto less = [](const Candidate& a, const Candidate& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    return a.index < b.index;
  };
  if (k >= all.size()) {
    std::sort(all.begin(), all.end(), less);
    return all;
  }
  std::partial_sort(all.begin(), all.begin() + k, all.end(), less);
  all.resize(k);
  return all;
}

}  // namespace

std::vector<double> oracle_ephemerality(const AttributedPointCloud& map,
                                        const RaySampleSet& rays,
                                        const PipelineConfig& cfg,
                                        int passes) {
  if (map.empty()) throw Error("oracle_ephemerality: empty map");
  if (map.size() > kOracleMaxPoints) {
    throw Error("oracle_ephemerality: map too large (" +
                std::to_string(map.size()) + " points, limit " +
                std::to_string(kOracleMaxPoints) + ")");
  }
  if (rays.sample_count() > kOracleMaxSamples) {
    throw Error("oracle_ephemerality: too many samples (" +
                std::to_string(rays.sample_count()) + ", limit " +
                std::to_string(kOracleMaxSamples) + ")");
  }
  if (passes < 1) throw Error("oracle_ephemerality: passes must be >= 1");
  if (rays.occupied.size() != rays.occupied_scan.size() ||
      rays.free.size() != rays.free_scan.size()) {
    throw Error("oracle_ephemerality: sample/scan-id length mismatch");
  }

  const std::vector<Point3> positions = map.positions();
  std::vector<double> eps(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) eps[i] = map.points[i].eps_l;

  std::uint32_t num_scans = 0;
  for (std::uint32_t id : rays.occupied_scan) {
    num_scans = std::max(num_scans, id + 1);
  }
  for (std::uint32_t id : rays.free_scan) {
    num_scans = std::max(num_scans, id + 1);
  }

  const std::size_t k = static_cast<std::size_t>(cfg.knn);
  auto apply = [&](const Point3& sample, RayKind kind) {
    for (const Candidate& c : linear_knn(positions, sample, k)) {
      const double f = propagation_kernel(std::sqrt(c.d2), kind, cfg);
      if (f == 0.5) continue;
      eps[c.index] = bayes_update_local(eps[c.index], f);
    }
  };

  for (int pass = 0; pass < passes; ++pass) {
    for (std::uint32_t scan = 0; scan < num_scans; ++scan) {
      for (std::size_t i = 0; i < rays.occupied.size(); ++i) {
        if (rays.occupied_scan[i] == scan) {
          apply(rays.occupied[i], RayKind::kOccupied);
        }
      }
      for (std::size_t i = 0; i < rays.free.size(); ++i) {
        if (rays.free_scan[i] == scan) {
          apply(rays.free[i], RayKind::kFreeSpace);
        }
      }
    }
  }
  return eps;
}

}  // namespace ephmap::synth
