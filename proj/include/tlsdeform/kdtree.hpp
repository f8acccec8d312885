#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tlsdeform {

struct Neighbor {
  std::size_t index;
  double dist2;
};

/// Exact KD-tree over 3D points.
///
/// Neighbor orderings are total: by squared distance, then by point index.
/// Two trees over the same points therefore always agree with a brute-force
/// sort, including at distance ties on the k-th neighbor.
class KdTree {
 public:
  explicit KdTree(std::span<const Eigen::Vector3d> points);

  std::size_t size() const { return points_.size(); }
  const Eigen::Vector3d& point(std::size_t i) const { return points_[i]; }

  /// The k nearest points, sorted ascending. Returns fewer if the tree is smaller.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, std::size_t k) const;

  Neighbor nearest(const Eigen::Vector3d& query) const;

  /// All points with distance <= radius, sorted by index.
  std::vector<std::size_t> radius(const Eigen::Vector3d& query, double radius) const;

 private:
  struct Node {
    // Leaves: [begin, end) into order_. Inner nodes: split axis/value and children.
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace tlsdeform
