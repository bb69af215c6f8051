#pragma once

#include "ephmap/types.hpp"

#include <cstdint>
#include <functional>

namespace ephmap {

struct CellKey {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  friend bool operator==(const CellKey&, const CellKey&) = default;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::size_t h = 1469598103934665603ull;
    auto mix = [&h](std::int64_t v) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) +
           (h >> 2);
    };
    mix(k.x);
    mix(k.y);
    mix(k.z);
    return h;
  }
};

CellKey cell_key(const Point3& p, double cell_size);

// One output point per occupied cell: the centroid of the members, with each
// transiency channel aggregated by max so a cell stays suspicious if any
// member was. Output is sorted by cell key.
AttributedPointCloud voxel_downsample(const AttributedPointCloud& cloud,
                                      double cell_size);

}  // namespace ephmap
