#pragma once

#include "ephmap/config.hpp"
#include "ephmap/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ephmap {

// Persistent map snapshot. Binary little-endian layout:
//   bytes 0-7   magic "EPHMAPV1"
//   u32         version (1)
//   u64         config hash
//   u32         lineage entry count, then per entry u32 length + bytes
//   u64         point count
//   payload     per point: f32 x, y, z, eps_l, eps_g
// Positions and beliefs are stored at float32; loading widens them exactly,
// so a load-save round trip is byte-identical.
struct MapArchive {
  std::uint64_t config_hash = 0;
  std::vector<std::string> lineage;  // session ids, oldest first
  AttributedPointCloud cloud;
};

void save_archive(const std::string& path, const MapArchive& archive);
MapArchive load_archive(const std::string& path);

// The quantization applied at save time, exposed so in-memory values can be
// compared against what a reader will see.
inline double archive_round(double v) {
  return static_cast<double>(static_cast<float>(v));
}

}  // namespace ephmap
