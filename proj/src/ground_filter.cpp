#include "tlsdeform/ground_filter.hpp"

#include "tlsdeform/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tlsdeform {

double triangle_slope_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                          const Eigen::Vector3d& c) {
  const Eigen::Vector3d normal = (b - a).cross(c - a);
  const double len = normal.norm();
  if (len == 0.0) return 90.0;
  const double cos_tilt = std::clamp(std::abs(normal.z()) / len, 0.0, 1.0);
  return std::acos(cos_tilt) * 180.0 / std::numbers::pi;
}

GroundLabeling classify_ground(const PointCloud& cloud, const TriangleMesh& mesh,
                               const GroundParams& params) {
  if (!(params.max_slope_deg > 0 && params.max_slope_deg < 90))
    throw Error("classify_ground: max_slope_deg must lie in (0, 90)");
  if (!(params.max_edge_len > 0)) throw Error("classify_ground: max_edge_len must be positive");
  if (!(params.seed_percentile > 0 && params.seed_percentile < 1))
    throw Error("classify_ground: seed_percentile must lie in (0, 1)");
  if (mesh.triangles.empty()) throw Error("classify_ground: empty mesh");

  const std::size_t n_tri = mesh.triangles.size();
  std::vector<char> candidate(n_tri, 0);
  for (std::size_t t = 0; t < n_tri; ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector3d& a = cloud[tri[0]].position;
    const Eigen::Vector3d& b = cloud[tri[1]].position;
    const Eigen::Vector3d& c = cloud[tri[2]].position;
    const double longest = std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
    candidate[t] = triangle_slope_deg(a, b, c) <= params.max_slope_deg &&
                   longest <= params.max_edge_len;
  }

  std::vector<double> heights;
  heights.reserve(mesh.vertices.size());
  for (std::size_t v : mesh.vertices) heights.push_back(cloud[v].position.z());
  const std::size_t rank = std::min(
      heights.size() - 1,
      static_cast<std::size_t>(params.seed_percentile * static_cast<double>(heights.size())));
  std::nth_element(heights.begin(), heights.begin() + rank, heights.end());
  const double seed_z = heights[rank];

  std::vector<char> ground_tri(n_tri, 0);
  std::vector<std::size_t> frontier;
  for (std::size_t t = 0; t < n_tri; ++t) {
    if (!candidate[t]) continue;
    for (std::size_t v : mesh.triangles[t]) {
      if (cloud[v].position.z() <= seed_z) {
        ground_tri[t] = 1;
        frontier.push_back(t);
        break;
      }
    }
  }
  if (frontier.empty()) throw Error("classify_ground: no seed triangle (no detectable ground)");

  while (!frontier.empty()) {
    const std::size_t t = frontier.back();
    frontier.pop_back();
    for (std::int64_t nb : mesh.adjacency[t]) {
      if (nb == TriangleMesh::kNoNeighbor) continue;
      const auto u = static_cast<std::size_t>(nb);
      if (candidate[u] && !ground_tri[u]) {
        ground_tri[u] = 1;
        frontier.push_back(u);
      }
    }
  }

  std::vector<char> is_ground(cloud.size(), 0);
  for (std::size_t t = 0; t < n_tri; ++t)
    if (ground_tri[t])
      for (std::size_t v : mesh.triangles[t]) is_ground[v] = 1;

  GroundLabeling labeling;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    (is_ground[i] ? labeling.ground_indices : labeling.nonground_indices).push_back(i);
  return labeling;
}

GroundLabeling segment_ground(const PointCloud& cloud, const GroundParams& params) {
  return classify_ground(cloud, delaunay_xy(cloud), params);
}

}  // namespace tlsdeform
