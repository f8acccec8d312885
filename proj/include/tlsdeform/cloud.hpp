#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tlsdeform {

/// A scanned point: position in meters plus 8-bit RGB color.
struct ColorPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const ColorPoint&) const = default;
};

/// Ordered, immutable collection of colored points.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<ColorPoint> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  const ColorPoint& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<ColorPoint>& points() const { return points_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  /// Copies out just the coordinates, in cloud order.
  std::vector<Eigen::Vector3d> positions() const;

  /// Sub-cloud made of the given indices, in the order given.
  PointCloud select(std::span<const std::size_t> indices) const;

  bool operator==(const PointCloud&) const = default;

 private:
  std::vector<ColorPoint> points_;
};

struct BoundingBox {
  Eigen::Vector3d min;
  Eigen::Vector3d max;

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

BoundingBox bounding_box(const PointCloud& cloud);

/// Reads whitespace-delimited "x y z r g b" lines. '#' lines and blank lines
/// are skipped; extra trailing columns are ignored.
PointCloud read_xyzrgb(const std::filesystem::path& path);

/// Writes one "x y z r g b" line per point, coordinates with 6 decimals.
void write_xyzrgb(const PointCloud& cloud, const std::filesystem::path& path);

/// Labeled variant: a 7th integer column carries a class id.
struct LabeledPoints {
  PointCloud cloud;
  std::vector<int> labels;
};

LabeledPoints read_labeled_xyzrgb(const std::filesystem::path& path);
void write_labeled_xyzrgb(const PointCloud& cloud, std::span<const int> labels,
                          const std::filesystem::path& path);

}  // namespace tlsdeform
