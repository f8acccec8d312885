#include "tlsdeform/kdtree.hpp"

#include "tlsdeform/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

namespace tlsdeform {

namespace {

constexpr std::uint32_t kLeafSize = 12;

bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

struct NeighborLess {
  bool operator()(const Neighbor& a, const Neighbor& b) const { return neighbor_less(a, b); }
};

}  // namespace

KdTree::KdTree(std::span<const Eigen::Vector3d> points)
    : points_(points.begin(), points.end()), order_(points.size()) {
  if (points_.size() > std::numeric_limits<std::uint32_t>::max())
    throw Error("KdTree: too many points");
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = points_[order_[begin]];
  Eigen::Vector3d hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident; keep as a leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Neighbor> KdTree::knn(const Eigen::Vector3d& query, std::size_t k) const {
  std::vector<Neighbor> result;
  if (k == 0 || nodes_.empty()) return result;
  k = std::min(k, points_.size());

  // Max-heap on (dist2, index): top is the current worst kept neighbor.
  std::priority_queue<Neighbor, std::vector<Neighbor>, NeighborLess> heap;
  auto worst = [&] {
    return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().dist2;
  };

  auto visit = [&](auto&& self, std::int32_t id) -> void {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        Neighbor cand{idx, (points_[idx] - query).squaredNorm()};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (neighbor_less(cand, heap.top())) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0 ? node.left : node.right;
    const std::int32_t far = diff < 0 ? node.right : node.left;
    self(self, near);
    // Equal distance may still hold a lower index, so only prune strictly.
    if (diff * diff <= worst()) self(self, far);
  };
  visit(visit, 0);

  result.resize(heap.size());
  for (std::size_t i = result.size(); i-- > 0;) {
    result[i] = heap.top();
    heap.pop();
  }
  return result;
}

Neighbor KdTree::nearest(const Eigen::Vector3d& query) const {
  if (nodes_.empty()) throw Error("KdTree::nearest on empty tree");
  return knn(query, 1).front();
}

std::vector<std::size_t> KdTree::radius(const Eigen::Vector3d& query, double radius) const {
  std::vector<std::size_t> result;
  if (nodes_.empty()) return result;
  const double r2 = radius * radius;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i)
        if ((points_[order_[i]] - query).squaredNorm() <= r2) result.push_back(order_[i]);
      continue;
    }
    const double diff = query[node.axis] - node.split;
    if (diff <= radius) stack.push_back(node.left);
    if (diff >= -radius) stack.push_back(node.right);
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace tlsdeform
