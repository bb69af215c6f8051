#include "ephmap/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ephmap {

namespace {

struct HeapEntry {
  double d2;
  std::uint32_t index;
};

// Lexicographic (distance^2, index); the heap keeps the largest on top so
// the front is always the entry a better candidate has to beat.
inline bool entry_less(const HeapEntry& a, const HeapEntry& b) {
  if (a.d2 != b.d2) return a.d2 < b.d2;
  return a.index < b.index;
}

}  // namespace

KdIndex::KdIndex(std::vector<Point3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::uint32_t KdIndex::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;

  const std::uint32_t count = end - begin;
  if (count > kLeafSize) {
    Point3 lo = points_[order_[begin]];
    Point3 hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] > lo[axis]) {
      const std::uint32_t mid = begin + count / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid,
                       order_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) {
                         return points_[a][axis] < points_[b][axis];
                       });
      node.axis = axis;
      node.split = points_[order_[mid]][axis];
      const std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
      nodes_.push_back(node);
      const std::uint32_t left = build(begin, mid);
      const std::uint32_t right = build(mid, end);
      nodes_[id].left = left;
      nodes_[id].right = right;
      return id;
    }
    // Zero extent on every axis: all points coincide, keep as one leaf.
  }

  const std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(node);
  return id;
}

void KdIndex::knn(const Point3& query, std::size_t k,
                  std::vector<Neighbor>& out) const {
  out.clear();
  if (k == 0 || points_.empty()) return;

  std::vector<HeapEntry> heap;
  heap.reserve(k);

  auto consider = [&](std::uint32_t idx) {
    const double d2 = (points_[idx] - query).squaredNorm();
    const HeapEntry cand{d2, idx};
    if (heap.size() < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), entry_less);
    } else if (entry_less(cand, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), entry_less);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), entry_less);
    }
  };

  // Iterative depth-first descent, nearer child first. A subtree is skipped
  // only when its splitting plane is strictly farther than the current worst
  // candidate; on an exact tie it is still visited so equal-distance points
  // with smaller indices are never missed.
  struct Visit {
    std::uint32_t node;
    double bound_d2;
  };
  std::vector<Visit> stack;
  stack.push_back({root_, 0.0});
  while (!stack.empty()) {
    const Visit visit = stack.back();
    stack.pop_back();
    if (heap.size() == k && visit.bound_d2 > heap.front().d2) continue;
    const Node& node = nodes_[visit.node];
    if (node.axis >= 0) {
      const double delta = query[node.axis] - node.split;
      const std::uint32_t near = delta < 0.0 ? node.left : node.right;
      const std::uint32_t far = delta < 0.0 ? node.right : node.left;
      stack.push_back({far, std::max(visit.bound_d2, delta * delta)});
      stack.push_back({near, visit.bound_d2});
      continue;
    }
    for (std::uint32_t i = node.begin; i < node.end; ++i) consider(order_[i]);
  }

  std::sort(heap.begin(), heap.end(), entry_less);
  out.reserve(heap.size());
  for (const auto& e : heap) {
    out.push_back({e.index, std::sqrt(e.d2)});
  }
}

std::vector<KdIndex::Neighbor> KdIndex::knn(const Point3& query,
                                            std::size_t k) const {
  std::vector<Neighbor> out;
  knn(query, k, out);
  return out;
}

std::optional<KdIndex::Neighbor> KdIndex::nearest(const Point3& query) const {
  std::vector<Neighbor> out;
  knn(query, 1, out);
  if (out.empty()) return std::nullopt;
  return out.front();
}

std::size_t KdIndex::radius_count(const Point3& query, double radius,
                                  std::ptrdiff_t exclude) const {
  if (points_.empty() || radius < 0.0) return 0;
  const double r2 = radius * radius;
  std::size_t count = 0;

  std::vector<std::uint32_t> stack;
  stack.push_back(root_);
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.axis >= 0) {
      const double delta = query[node.axis] - node.split;
      const std::uint32_t near = delta < 0.0 ? node.left : node.right;
      const std::uint32_t far = delta < 0.0 ? node.right : node.left;
      if (delta * delta <= r2) stack.push_back(far);
      stack.push_back(near);
      continue;
    }
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      if (static_cast<std::ptrdiff_t>(idx) == exclude) continue;
      if ((points_[idx] - query).squaredNorm() <= r2) ++count;
    }
  }
  return count;
}

}  // namespace ephmap
