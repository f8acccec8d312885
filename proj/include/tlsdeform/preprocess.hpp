#pragma once

#include "tlsdeform/cloud.hpp"

#include <cstddef>
#include <vector>

namespace tlsdeform {

struct VoxelGridParams {
  double cell_size = 0.02;
};

struct OutlierParams {
  std::size_t neighbor_count = 8;
  double std_multiplier = 2.0;
};

/// One point per occupied voxel: centroid position, rounded mean color.
/// Output order follows the first occurrence of each voxel in the input.
PointCloud voxel_downsample(const PointCloud& cloud, const VoxelGridParams& params);

struct OutlierResult {
  PointCloud kept;
  std::vector<std::size_t> kept_indices;
  std::vector<std::size_t> removed_indices;
};

/// Drops points whose mean distance to their k nearest neighbors exceeds
/// mean + std_multiplier * stddev over the whole cloud.
OutlierResult remove_statistical_outliers(const PointCloud& cloud, const OutlierParams& params);

/// Per-point mean distance to the k nearest neighbors (self excluded).
std::vector<double> mean_neighbor_distances(const PointCloud& cloud, std::size_t k);

}  // namespace tlsdeform
