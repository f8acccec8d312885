#pragma once

#include "tlsdeform/cloud.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tlsdeform {

/// Plane n . p = offset with unit normal n.
struct PlaneModel {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
  std::vector<std::size_t> inlier_indices;
  double inlier_tol = 0.0;

  double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) - offset; }
};

/// Plane through three points, or nullopt when they are (nearly) collinear.
std::optional<PlaneModel> plane_through(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                        const Eigen::Vector3d& c);

/// Deterministic stream of 3-index samples driving RANSAC. Uses the fully
/// specified mt19937_64 engine so draws are identical on every platform.
class PlaneSampler {
 public:
  PlaneSampler(std::size_t point_count, std::uint64_t seed);
  /// May contain repeated indices; such samples count as degenerate.
  std::array<std::size_t, 3> next();

 private:
  std::size_t count_;
  std::mt19937_64 engine_;
};

/// Best-of-N RANSAC plane, refit by least squares to its inliers. The refit
/// is kept only if it does not lose inliers relative to the best candidate.
PlaneModel ransac_plane(const PointCloud& cloud, double inlier_tol, std::size_t iterations,
                        std::uint64_t seed);

/// Least-squares plane through points (smallest covariance eigenvector).
PlaneModel fit_plane_least_squares(std::span<const Eigen::Vector3d> points);

/// Wall-local frame: u along the wall, v up the wall, w out of the wall.
struct WallFrame {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v_axis = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d w_axis = Eigen::Vector3d::UnitY();

  Eigen::Vector3d to_local(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d d = p - origin;
    return {u_axis.dot(d), v_axis.dot(d), w_axis.dot(d)};
  }
  Eigen::Vector3d to_world(const Eigen::Vector3d& uvw) const {
    return origin + uvw.x() * u_axis + uvw.y() * v_axis + uvw.z() * w_axis;
  }
};

/// Builds the frame for a fitted wall plane. The w axis points away from the
/// cloud centroid (outward); when the centroid sits on the plane, toward the
/// side with fewer off-plane points. Throws for near-horizontal planes.
WallFrame build_wall_frame(const PlaneModel& plane, const PointCloud& cloud);

struct WallSlice {
  std::size_t index = 0;
  double v_min = 0.0;
  double v_max = 0.0;
  std::vector<Eigen::Vector2d> points;  // (u, w)
};

/// Splits [min v, max v] into equal bands; the top band is closed above.
std::vector<WallSlice> slice_wall(std::span<const Eigen::Vector3d> wall_points,
                                  std::size_t n_slices);

/// Line w = slope * u + intercept in a slice.
struct SliceFit {
  double slope_m = 0.0;
  double intercept_c = 0.0;
  std::size_t point_count = 0;
  double residual_sq_sum = 0.0;

  double at(double u) const { return slope_m * u + intercept_c; }
};

/// Ordinary least squares of w on u. Throws when fewer than two distinct u.
SliceFit fit_slice_line(const WallSlice& slice);

struct SliceDeviation {
  std::size_t index = 0;
  bool fitted = false;
  std::vector<double> deviations;  // signed, one per u-grid position
  std::vector<double> squared;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  bool flagged = false;
};

/// Deviation of every slice line from the reference (index 0) line on a
/// shared u grid. A slice is flagged iff its max |deviation| > threshold.
std::vector<SliceDeviation> compare_slices(std::span<const std::optional<SliceFit>> fits,
                                           std::span<const double> u_grid,
                                           double horizontal_threshold);

/// `count` evenly spaced positions over the central `fraction` of [u_lo, u_hi].
std::vector<double> make_u_grid(double u_lo, double u_hi, std::size_t count, double fraction);

struct AxialResult {
  double measured_height = 0.0;
  double nominal_height = 0.0;
  double shortening = 0.0;
  bool flagged = false;
};

AxialResult check_axial_shortening(std::span<const WallSlice> slices, double nominal_height,
                                   double axial_threshold);

struct AnalysisConfig {
  std::size_t n_slices = 15;
  double horizontal_threshold = 0.05;
  double axial_threshold = 0.03;
  std::optional<double> nominal_height;
  double ransac_inlier_tol = 0.02;
  std::size_t ransac_iterations = 500;
  std::uint64_t seed = 0;
  /// Building points farther than this from the wall plane are not wall points.
  double wall_band = 0.15;
  /// Optional column selection, in u measured from the wall's low-u edge.
  std::optional<double> u_min;
  std::optional<double> u_max;
  std::size_t grid_points = 50;
  double grid_fraction = 0.9;
};

struct SliceRecord {
  std::size_t index = 0;
  double v_min = 0.0;
  double v_max = 0.0;
  std::size_t point_count = 0;
  std::optional<SliceFit> fit;
  SliceDeviation deviation;
};

struct DeformationReport {
  PlaneModel plane;
  WallFrame frame;
  std::size_t wall_point_count = 0;
  std::vector<double> u_grid;
  std::vector<SliceRecord> slices;
  double horizontal_threshold = 0.0;
  double axial_threshold = 0.0;
  double wall_height_measured = 0.0;
  std::optional<AxialResult> axial;
  double global_max_deviation = 0.0;
  /// Mean of per-slice mean |deviation| over fitted non-reference slices.
  double global_mean_deviation = 0.0;
  std::size_t flagged_count = 0;
  std::vector<std::string> warnings;
};

DeformationReport analyze_wall(const PointCloud& building_points, const AnalysisConfig& config);

}  // namespace tlsdeform
