#include "ephmap/propagation.hpp"

#include "ephmap/errors.hpp"
#include "ephmap/kdtree.hpp"
#include "ephmap/parallel.hpp"
#include "ephmap/voxel.hpp"

#include <algorithm>
#include <cmath>

namespace ephmap {

double propagation_kernel(double x, RayKind kind, const PipelineConfig& cfg) {
  if (!std::isfinite(x) || x < 0.0) {
    throw Error("propagation_kernel: distance must be finite and >= 0");
  }
  const double a = cfg.alpha;
  const double b = cfg.beta;
  if (kind == RayKind::kOccupied) {
    const double s = x / cfg.sigma_o;
    return std::min(a * (1.0 - std::exp(-s * s)) + b, a);
  }
  const double s = x / cfg.sigma_f;
  return std::max(a * (1.0 + std::exp(-s * s)) - b, a);
}

AttributedPointCloud aggregate_session(const Session& session,
                                       const std::vector<Pose>& poses,
                                       const PipelineConfig& cfg,
                                       bool compact) {
  if (session.scans.size() != poses.size()) {
    throw Error("aggregate_session: scan/pose count mismatch");
  }
  AttributedPointCloud cloud;
  std::size_t total = 0;
  for (const Scan& s : session.scans) total += s.points.size();
  cloud.points.reserve(total);
  for (std::size_t i = 0; i < session.scans.size(); ++i) {
    for (const Point3& p : session.scans[i].points) {
      cloud.points.push_back({poses[i] * p, 0.5, 0.5});
    }
  }
  if (compact) return voxel_downsample(cloud, cfg.voxel_size);
  return cloud;
}

namespace {

struct Segment {
  const std::vector<Point3>* samples;
  std::size_t begin;
  std::size_t end;
  RayKind kind;
};

// Contiguous [begin, end) range of each scan id inside a non-decreasing id
// array.
std::vector<std::pair<std::size_t, std::size_t>> scan_ranges(
    const std::vector<std::uint32_t>& ids, std::uint32_t num_scans) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges(
      num_scans, {0, 0});
  std::size_t i = 0;
  while (i < ids.size()) {
    std::size_t j = i;
    while (j < ids.size() && ids[j] == ids[i]) ++j;
    ranges[ids[i]] = {i, j};
    i = j;
  }
  return ranges;
}

constexpr std::size_t kKnnChunk = 65536;

}  // namespace

void propagate_ephemerality(AttributedPointCloud& map,
                            const RaySampleSet& rays,
                            const PipelineConfig& cfg, int passes) {
  if (map.empty()) throw Error("propagate_ephemerality: empty map");
  if (passes < 1) throw Error("propagate_ephemerality: passes must be >= 1");
  if (rays.occupied.size() != rays.occupied_scan.size() ||
      rays.free.size() != rays.free_scan.size()) {
    throw Error("propagate_ephemerality: sample/scan-id length mismatch");
  }
  if (rays.sample_count() == 0) return;

  const KdIndex index(map.positions());
  const std::size_t k = static_cast<std::size_t>(cfg.knn);

  std::uint32_t num_scans = 0;
  for (std::uint32_t id : rays.occupied_scan) num_scans = std::max(num_scans, id + 1);
  for (std::uint32_t id : rays.free_scan) num_scans = std::max(num_scans, id + 1);

  const auto occ_ranges = scan_ranges(rays.occupied_scan, num_scans);
  const auto free_ranges = scan_ranges(rays.free_scan, num_scans);

  std::vector<Segment> schedule;
  schedule.reserve(2 * num_scans);
  for (std::uint32_t s = 0; s < num_scans; ++s) {
    schedule.push_back({&rays.occupied, occ_ranges[s].first,
                        occ_ranges[s].second, RayKind::kOccupied});
    schedule.push_back({&rays.free, free_ranges[s].first,
                        free_ranges[s].second, RayKind::kFreeSpace});
  }

  // Neighbor slots for one chunk; counts[i] covers sets smaller than k.
  std::vector<KdIndex::Neighbor> neighbors(kKnnChunk * k);
  std::vector<std::uint32_t> counts(kKnnChunk);

  for (int pass = 0; pass < passes; ++pass) {
    for (const Segment& seg : schedule) {
      for (std::size_t chunk = seg.begin; chunk < seg.end;
           chunk += kKnnChunk) {
        const std::size_t chunk_end = std::min(seg.end, chunk + kKnnChunk);
        const std::size_t n = chunk_end - chunk;
        parallel_blocks(n, kDefaultBlock,
                        [&](std::size_t, std::size_t b, std::size_t e) {
                          std::vector<KdIndex::Neighbor> local;
                          for (std::size_t i = b; i < e; ++i) {
                            index.knn((*seg.samples)[chunk + i], k, local);
                            counts[i] = static_cast<std::uint32_t>(local.size());
                            std::copy(local.begin(), local.end(),
                                      neighbors.begin() + i * k);
                          }
                        });
        for (std::size_t i = 0; i < n; ++i) {
          for (std::uint32_t j = 0; j < counts[i]; ++j) {
            const KdIndex::Neighbor& nb = neighbors[i * k + j];
            const double f = propagation_kernel(nb.distance, seg.kind, cfg);
            if (f == 0.5) continue;  // exact no-op, skip the fuse
            double& eps = map.points[nb.index].eps_l;
            eps = bayes_update_local(eps, f);
          }
        }
      }
    }
  }
}

std::pair<AttributedPointCloud, AttributedPointCloud> extract_static(
    const AttributedPointCloud& map, double tau_l) {
  AttributedPointCloud kept;
  AttributedPointCloud removed;
  kept.frame_id = map.frame_id;
  removed.frame_id = map.frame_id;
  for (const AttributedPoint& p : map.points) {
    (p.eps_l < tau_l ? kept : removed).points.push_back(p);
  }
  return {std::move(kept), std::move(removed)};
}

}  // namespace ephmap
