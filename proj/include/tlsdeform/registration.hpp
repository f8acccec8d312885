#pragma once

#include "tlsdeform/cloud.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace tlsdeform {

/// Proper rigid motion p -> rotation * p + translation.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  /// (*this) after `first`: p -> this(first(p)).
  RigidTransform compose(const RigidTransform& first) const {
    return {rotation * first.rotation, rotation * first.translation + translation};
  }

  RigidTransform inverse() const {
    const Eigen::Matrix3d rt = rotation.transpose();
    return {rt, -rt * translation};
  }

  /// Orthonormal with determinant +1, both within tol.
  bool is_valid(double tol = 1e-9) const;
};

/// Rotation angle (radians) of a.rotation^T * b.rotation.
double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

struct IcpParams {
  std::size_t max_iterations = 50;
  double convergence_tol = 1e-6;
  double max_correspondence_dist = 0.5;
};

/// RMSE values are truncated: a source point whose nearest target lies beyond
/// max_correspondence_dist contributes that distance instead. This is the
/// quantity gated ICP provably never increases.
struct IcpResult {
  RigidTransform transform;
  double final_rmse = 0.0;
  std::size_t iterations_used = 0;
  std::vector<double> rmse_history;  // one entry per iteration, non-increasing
  double inlier_rmse = 0.0;          // RMSE over the gated pairs only
  double inlier_fraction = 0.0;      // share of source points inside the gate
};

/// Least-squares rigid fit of source onto target (SVD of the cross-covariance,
/// reflection corrected). Throws on size mismatch, < 3 pairs, or collinear sources.
RigidTransform estimate_rigid_transform(std::span<const Eigen::Vector3d> source,
                                        std::span<const Eigen::Vector3d> target);

/// Point-to-point ICP of source onto target. The returned transform maps
/// source coordinates into the target frame.
IcpResult icp_register(const PointCloud& source, const PointCloud& target,
                       const IcpParams& params = {});

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& tf);

PointCloud merge(std::span<const PointCloud> clouds);

}  // namespace tlsdeform
