#pragma once

#include "ephmap/types.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace ephmap {

// Exact 3-d kd-tree over a fixed point set. Queries are read-only and safe
// to run concurrently. Results are ordered by (distance, index) so ties are
// broken the same way as a linear scan, which keeps every consumer
// reproducible and lets brute-force checks demand bitwise equality.
class KdIndex {
 public:
  KdIndex() = default;
  explicit KdIndex(std::vector<Point3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

  struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
  };

  // k nearest neighbors ordered by (distance, index). A query that
  // coincides with an indexed point returns that point at distance 0.
  // k larger than the set returns everything, sorted.
  std::vector<Neighbor> knn(const Point3& query, std::size_t k) const;

  // Appends to out instead of allocating; out is cleared first.
  void knn(const Point3& query, std::size_t k,
           std::vector<Neighbor>& out) const;

  std::optional<Neighbor> nearest(const Point3& query) const;

  // Number of indexed points with distance <= radius, optionally skipping
  // one index (used for neighborhoods that exclude the point itself).
  std::size_t radius_count(const Point3& query, double radius,
                           std::ptrdiff_t exclude = -1) const;

 private:
  struct Node {
    double split = 0.0;
    int axis = -1;  // -1 marks a leaf
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;  // permutation grouped by leaf
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;

  static constexpr std::uint32_t kLeafSize = 16;
};

}  // namespace ephmap
