#pragma once

#include "tlsdeform/cloud.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace tlsdeform {

/// 2.5D Delaunay triangulation of a cloud's XY projection. Vertex ids are
/// cloud indices; Z stays with the cloud.
struct TriangleMesh {
  static constexpr std::int64_t kNoNeighbor = -1;

  /// Cloud indices that became mesh vertices, ascending. Points whose XY
  /// duplicates an earlier vertex are left out.
  std::vector<std::size_t> vertices;
  /// Counter-clockwise in XY.
  std::vector<std::array<std::size_t, 3>> triangles;
  /// adjacency[t][k]: triangle across the edge opposite triangles[t][k], or kNoNeighbor.
  std::vector<std::array<std::int64_t, 3>> adjacency;
};

/// Throws if fewer than 3 points or all XY projections are collinear.
/// Cocircular ties are resolved so each ambiguous diagonal touches the
/// lowest-index vertex of its quadrilateral.
TriangleMesh delaunay_xy(const PointCloud& cloud);

}  // namespace tlsdeform
