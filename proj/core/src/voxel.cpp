#include "ephmap/voxel.hpp"

#include "ephmap/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ephmap {

CellKey cell_key(const Point3& p, double cell_size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size))};
}

AttributedPointCloud voxel_downsample(const AttributedPointCloud& cloud,
                                      double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw Error("voxel_downsample: cell_size must be finite and > 0");
  }
  AttributedPointCloud out;
  out.frame_id = cloud.frame_id;
  if (cloud.empty()) return out;

  struct Tagged {
    CellKey key;
    std::uint64_t index;
  };
  std::vector<Tagged> tagged;
  tagged.reserve(cloud.size());
  for (std::uint64_t i = 0; i < cloud.size(); ++i) {
    tagged.push_back({cell_key(cloud.points[i].position, cell_size), i});
  }
  std::sort(tagged.begin(), tagged.end(), [](const Tagged& a, const Tagged& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.index < b.index;
  });

  out.points.reserve(tagged.size());
  std::size_t i = 0;
  while (i < tagged.size()) {
    std::size_t j = i;
    Point3 sum = Point3::Zero();
    double eps_l = 0.0;
    double eps_g = 0.0;
    while (j < tagged.size() && tagged[j].key == tagged[i].key) {
      const AttributedPoint& p = cloud.points[tagged[j].index];
      sum += p.position;
      eps_l = std::max(eps_l, p.eps_l);
      eps_g = std::max(eps_g, p.eps_g);
      ++j;
    }
    out.points.push_back(
        {sum / static_cast<double>(j - i), eps_l, eps_g});
    i = j;
  }
  return out;
}

}  // namespace ephmap
