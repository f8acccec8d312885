#include "tlsdeform/preprocess.hpp"

#include "tlsdeform/error.hpp"
#include "tlsdeform/kdtree.hpp"

#include <array>
#include <cmath>
#include <unordered_map>

namespace tlsdeform {

namespace {

using VoxelKey = std::array<std::int64_t, 3>;

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::size_t h = 1469598103934665603ull;
    for (auto v : k) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

struct VoxelAccumulator {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  double r = 0, g = 0, b = 0;
  std::size_t count = 0;
};

std::uint8_t rounded_channel(double sum, std::size_t count) {
  return static_cast<std::uint8_t>(std::lround(sum / static_cast<double>(count)));
}

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, const VoxelGridParams& params) {
  if (cloud.empty()) throw Error("voxel_downsample: empty cloud");
  if (!(params.cell_size > 0)) throw Error("voxel_downsample: cell_size must be positive");

  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slot_of;
  std::vector<VoxelAccumulator> voxels;
  for (const auto& p : cloud) {
    VoxelKey key;
    for (int k = 0; k < 3; ++k)
      key[k] = static_cast<std::int64_t>(std::floor(p.position[k] / params.cell_size));
    auto [it, inserted] = slot_of.try_emplace(key, voxels.size());
    if (inserted) voxels.emplace_back();
    auto& acc = voxels[it->second];
    acc.sum += p.position;
    acc.r += p.r;
    acc.g += p.g;
    acc.b += p.b;
    ++acc.count;
  }

  std::vector<ColorPoint> out;
  out.reserve(voxels.size());
  for (const auto& acc : voxels) {
    ColorPoint p;
    p.position = acc.sum / static_cast<double>(acc.count);
    p.r = rounded_channel(acc.r, acc.count);
    p.g = rounded_channel(acc.g, acc.count);
    p.b = rounded_channel(acc.b, acc.count);
    out.push_back(p);
  }
  return PointCloud(std::move(out));
}

std::vector<double> mean_neighbor_distances(const PointCloud& cloud, std::size_t k) {
  const auto positions = cloud.positions();
  const KdTree tree(positions);
  std::vector<double> mean_dist(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    // k + 1 because the query point is its own nearest neighbor.
    const auto nbrs = tree.knn(positions[i], k + 1);
    double sum = 0;
    std::size_t used = 0;
    for (const auto& n : nbrs) {
      if (n.index == i || used == k) continue;
      sum += std::sqrt(n.dist2);
      ++used;
    }
    mean_dist[i] = sum / static_cast<double>(used);
  }
  return mean_dist;
}

OutlierResult remove_statistical_outliers(const PointCloud& cloud, const OutlierParams& params) {
  if (params.neighbor_count < 1) throw Error("remove_statistical_outliers: neighbor_count < 1");
  if (!(params.std_multiplier > 0))
    throw Error("remove_statistical_outliers: std_multiplier must be positive");
  if (cloud.size() <= params.neighbor_count)
    throw Error("remove_statistical_outliers: cloud has " + std::to_string(cloud.size()) +
                " points, needs more than neighbor_count = " +
                std::to_string(params.neighbor_count));

  const auto d = mean_neighbor_distances(cloud, params.neighbor_count);
  const double n = static_cast<double>(d.size());
  double mean = 0;
  for (double v : d) mean += v;
  mean /= n;
  double var = 0;
  for (double v : d) var += (v - mean) * (v - mean);
  const double stddev = std::sqrt(var / n);
  // Round-off slack so a zero-variance cloud never loses points.
  const double threshold = mean + params.std_multiplier * stddev + 1e-12 * mean;

  OutlierResult result;
  for (std::size_t i = 0; i < d.size(); ++i) {
    (d[i] > threshold ? result.removed_indices : result.kept_indices).push_back(i);
  }
  result.kept = cloud.select(result.kept_indices);
  return result;
}

}  // namespace tlsdeform
