#pragma once

#include "ephmap/types.hpp"
#include "ephmap/voxel.hpp"

#include <iosfwd>
#include <string>
#include <unordered_set>
#include <vector>

namespace ephmap {

// Coarse occupancy record of where a session actually observed, used to
// separate "point disappeared" from "area never revisited". Marked from ray
// endpoints and free-space samples.
inline constexpr double kCoverageCell = 1.0;

class CoverageGrid {
 public:
  CoverageGrid() = default;  // invalid until given a cell size
  explicit CoverageGrid(double cell_size);

  bool valid() const { return cell_ > 0.0; }
  double cell_size() const { return cell_; }
  std::size_t cell_count() const { return cells_.size(); }

  void mark(const Point3& p);
  void mark_cell(const CellKey& key);
  bool covers(const Point3& p) const;

  // Sorted cell keys, for serialization and tests.
  std::vector<CellKey> sorted_cells() const;

  void save(const std::string& path) const;
  void write(std::ostream& out) const;
  static CoverageGrid load(const std::string& path);
  static CoverageGrid read(std::istream& in, const std::string& origin);

 private:
  double cell_ = 0.0;
  std::unordered_set<CellKey, CellKeyHash> cells_;
};

// Grid marked at every position in the list. An empty list yields a valid,
// empty grid that covers nothing.
CoverageGrid build_coverage(const std::vector<Point3>& samples,
                            double cell_size = kCoverageCell);

// Union of two grids with the same cell size.
CoverageGrid merge_coverage(const CoverageGrid& a, const CoverageGrid& b);

}  // namespace ephmap
