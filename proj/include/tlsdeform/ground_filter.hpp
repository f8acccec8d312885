#pragma once

#include "tlsdeform/cloud.hpp"
#include "tlsdeform/delaunay.hpp"

#include <cstddef>
#include <vector>

namespace tlsdeform {

struct GroundParams {
  double max_slope_deg = 30.0;
  double max_edge_len = 1.0;
  double seed_percentile = 0.05;
};

struct GroundLabeling {
  std::vector<std::size_t> ground_indices;     // ascending
  std::vector<std::size_t> nonground_indices;  // ascending
};

/// Slope of a triangle's plane against horizontal, in degrees.
double triangle_slope_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                          const Eigen::Vector3d& c);

/// Ground = flood fill over gentle, short-edged triangles, seeded from those
/// touching the lowest seed_percentile of elevations. A point is ground iff it
/// is a vertex of a ground triangle.
GroundLabeling classify_ground(const PointCloud& cloud, const TriangleMesh& mesh,
                               const GroundParams& params);

/// delaunay_xy followed by classify_ground.
GroundLabeling segment_ground(const PointCloud& cloud, const GroundParams& params);

}  // namespace tlsdeform
