#include "tlsdeform/registration.hpp"

#include "tlsdeform/error.hpp"
#include "tlsdeform/kdtree.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace tlsdeform {

bool RigidTransform::is_valid(double tol) const {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol && translation.allFinite();
}

double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d rel = a.transpose() * b;
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near zero; recover the small angle from the skew part.
  const Eigen::Vector3d skew(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(skew.norm() / 2.0, c);
}

RigidTransform estimate_rigid_transform(std::span<const Eigen::Vector3d> source,
                                        std::span<const Eigen::Vector3d> target) {
  if (source.size() != target.size())
    throw Error("estimate_rigid_transform: length mismatch (" + std::to_string(source.size()) +
                " vs " + std::to_string(target.size()) + ")");
  if (source.size() < 3) throw Error("estimate_rigid_transform: need at least 3 pairs");

  const double n = static_cast<double>(source.size());
  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d dst_mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    src_mean += source[i];
    dst_mean += target[i];
  }
  src_mean /= n;
  dst_mean /= n;

  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d src_scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Eigen::Vector3d s = source[i] - src_mean;
    cross += s * (target[i] - dst_mean).transpose();
    src_scatter += s * s.transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> scatter_svd(src_scatter);
  const Eigen::Vector3d spread = scatter_svd.singularValues();
  if (spread(1) <= 1e-12 * std::max(spread(0), 1e-300))
    throw Error("estimate_rigid_transform: degenerate (collinear) source points");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((v * u.transpose()).determinant() < 0) d(2, 2) = -1.0;

  RigidTransform tf;
  tf.rotation = v * d * u.transpose();
  tf.translation = dst_mean - tf.rotation * src_mean;
  return tf;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& tf) {
  std::vector<ColorPoint> out(cloud.points());
  for (auto& p : out) p.position = tf.apply(p.position);
  return PointCloud(std::move(out));
}

PointCloud merge(std::span<const PointCloud> clouds) {
  if (clouds.empty()) throw Error("merge: no clouds given");
  std::vector<ColorPoint> out;
  std::size_t total = 0;
  for (const auto& c : clouds) total += c.size();
  out.reserve(total);
  for (const auto& c : clouds) out.insert(out.end(), c.begin(), c.end());
  return PointCloud(std::move(out));
}

namespace {

struct Correspondences {
  std::vector<Eigen::Vector3d> source;
  std::vector<Eigen::Vector3d> target;
  double rmse = 0.0;          // truncated: gated-out points count as max_dist
  double inlier_rmse = 0.0;
};

Correspondences match(const std::vector<Eigen::Vector3d>& source, const RigidTransform& tf,
                      const KdTree& target_tree, double max_dist) {
  Correspondences c;
  const double max_d2 = max_dist * max_dist;
  double sum = 0.0;
  for (const auto& p : source) {
    const Eigen::Vector3d moved = tf.apply(p);
    const Neighbor n = target_tree.nearest(moved);
    if (n.dist2 > max_d2) continue;
    c.source.push_back(moved);
    c.target.push_back(target_tree.point(n.index));
    sum += n.dist2;
  }
  const double outside = static_cast<double>(source.size() - c.source.size());
  c.rmse = std::sqrt((sum + outside * max_d2) / static_cast<double>(source.size()));
  if (!c.source.empty()) c.inlier_rmse = std::sqrt(sum / static_cast<double>(c.source.size()));
  return c;
}

}  // namespace

IcpResult icp_register(const PointCloud& source, const PointCloud& target,
                       const IcpParams& params) {
  if (source.empty() || target.empty()) throw Error("icp_register: empty cloud");
  if (params.max_iterations < 1 || !(params.convergence_tol > 0) ||
      !(params.max_correspondence_dist > 0))
    throw Error("icp_register: parameters must be positive");

  const auto src = source.positions();
  const auto dst = target.positions();
  const KdTree tree(dst);

  IcpResult result;
  Correspondences current = match(src, result.transform, tree, params.max_correspondence_dist);
  if (current.source.empty())
    throw Error("icp_register: no correspondences within max_correspondence_dist");

  while (result.iterations_used < params.max_iterations) {
    ++result.iterations_used;
    const double previous = current.rmse;
    if (current.source.size() < 3) {
      result.rmse_history.push_back(previous);
      break;
    }
    RigidTransform step;
    try {
      step = estimate_rigid_transform(current.source, current.target);
    } catch (const Error&) {
      result.rmse_history.push_back(previous);
      break;
    }
    const RigidTransform candidate = step.compose(result.transform);
    Correspondences next = match(src, candidate, tree, params.max_correspondence_dist);
    // The truncated error cannot rise under a gated step except by round-off;
    // such a step is rejected and ends the loop.
    if (next.source.empty() || next.rmse > previous) {
      result.rmse_history.push_back(previous);
      break;
    }
    result.transform = candidate;
    current = std::move(next);
    result.rmse_history.push_back(current.rmse);
    if (previous - current.rmse < params.convergence_tol) break;
  }
  result.final_rmse = result.rmse_history.back();
  result.inlier_rmse = current.inlier_rmse;
  result.inlier_fraction =
      static_cast<double>(current.source.size()) / static_cast<double>(src.size());
  return result;
}

}  // namespace tlsdeform
