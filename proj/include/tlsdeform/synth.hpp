#pragma once

#include "tlsdeform/cloud.hpp"
#include "tlsdeform/registration.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tlsdeform::synth {

struct NoDeformation {};

/// Cosine-tapered bump in height, constant along the wall.
struct Bulge {
  double amplitude = 0.075;
  double center_height = 12.5;
  double width = 8.0;  // full width of the bump in height
};

/// The wall above a base course is displaced outward by a uniform amount
/// relative to the base course.
struct Lean {
  double amplitude = 0.035;
  /// Height of the undisplaced base course; <= 0 means wall height / 15.
  double base_height = 0.0;
};

/// Piecewise-linear offset table of (height, offset) pairs, sorted by height.
/// Held constant beyond the first and last entries.
struct CustomProfile {
  std::vector<std::pair<double, double>> table;
};

using DeformationProfile = std::variant<NoDeformation, Bulge, Lean, CustomProfile>;

/// Outward offset of the wall surface at height v above the wall base.
double evaluate_profile(const DeformationProfile& profile, double v, double wall_height);

/// Parses "none", "bulge:A:C:W", "lean:A[:BASE]" or "custom:h=o,h=o,...".
DeformationProfile parse_profile(const std::string& text);
std::string format_profile(const DeformationProfile& profile);

struct WallSpec {
  Eigen::Vector2d start{-5.0, 0.0};  // base of the wall's left end, XY
  double yaw_deg = 0.0;              // direction along the wall from +X
  double length = 10.0;
  double height = 25.0;
};

struct Region {
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
  bool empty() const { return !(x_max > x_min && y_max > y_min); }
};

struct SceneSpec {
  double ground_width = 16.0;  // along X, centered on the origin
  double ground_depth = 14.0;  // along Y, centered on the origin
  WallSpec wall;
  double noise_sigma = 0.003;
  DeformationProfile deformation = NoDeformation{};
  std::size_t tree_count = 5;
  /// Where tree and lamppost bases may go; empty means the whole ground.
  Region object_region;
  std::size_t lamppost_count = 3;
  double point_density = 400.0;  // points per square meter of surface
  std::uint64_t rng_seed = 42;
};

/// Generator labels: the three object classes plus ground.
enum class SceneLabel : int { Building = 0, Tree = 1, LampPost = 2, Ground = 3 };

struct LabeledCloud {
  PointCloud cloud;
  std::vector<SceneLabel> labels;
  std::vector<double> true_deformation;  // injected outward offset, zero off the wall
  /// Wall-local coordinates of wall points (along, height); NaN elsewhere.
  std::vector<Eigen::Vector2d> wall_uv;
  Eigen::Vector3d wall_normal = Eigen::Vector3d::UnitY();

  std::vector<int> label_ids() const;
};

LabeledCloud generate_scene(const SceneSpec& spec);

struct ScanPair {
  PointCloud first;
  PointCloud second;  // perturbed
  std::vector<std::size_t> first_indices;
  std::vector<std::size_t> second_indices;
  /// Maps the perturbed second scan back into the scene frame.
  RigidTransform alignment;
};

/// Splits the scene along X into two scans sharing overlap_fraction of the
/// points, then moves the second scan by a yaw of perturb_yaw_deg about its
/// centroid followed by perturb_shift.
ScanPair split_scans(const LabeledCloud& labeled, double overlap_fraction,
                     double perturb_yaw_deg = 0.0,
                     const Eigen::Vector3d& perturb_shift = Eigen::Vector3d::Zero());

/// Rotation about +Z by the given angle through `center`, then translation.
RigidTransform yaw_about(const Eigen::Vector3d& center, double yaw_deg,
                         const Eigen::Vector3d& shift);

}  // namespace tlsdeform::synth
