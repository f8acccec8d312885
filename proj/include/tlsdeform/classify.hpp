#pragma once

#include "tlsdeform/cloud.hpp"
#include "tlsdeform/ground_filter.hpp"
#include "tlsdeform/kdtree.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace tlsdeform {

enum class ClassLabel : int { Building = 0, Tree = 1, LampPost = 2 };

inline constexpr std::array<ClassLabel, 3> kAllClasses{ClassLabel::Building, ClassLabel::Tree,
                                                       ClassLabel::LampPost};

/// Label id used for ground points in labeled files (object classes are 0-2).
inline constexpr int kGroundLabelId = 3;

std::string_view to_string(ClassLabel label);
std::optional<ClassLabel> label_from_id(int id);

struct PointFeatures {
  double height = 0.0;     // meters above local ground
  double intensity = 0.0;  // RGB luminance in [0, 1]
  double curvature = 0.0;  // smallest covariance eigenvalue over the sum, [0, 1]
};

struct FeatureParams {
  double neighborhood_radius = 0.3;
  double ground_radius = 2.0;
  /// Local ground medians are evaluated once per XY cell of this size.
  double ground_cell = 0.25;
};

double luminance(const ColorPoint& p);

/// Surface variation of the neighborhood; 0 when fewer than 3 neighbors.
double surface_variation(std::span<const Eigen::Vector3d> neighborhood);

/// One feature record per cloud point.
std::vector<PointFeatures> compute_features(const PointCloud& cloud, const GroundLabeling& ground,
                                            const FeatureParams& params = {});

/// Majority-vote KNN over standardized features. Immutable after construction.
class KnnModel {
 public:
  /// Feature scales default to each feature's training standard deviation
  /// (1 where that is zero).
  KnnModel(std::vector<PointFeatures> features, std::vector<ClassLabel> labels, std::size_t k);

  std::size_t k() const { return k_; }
  std::size_t size() const { return labels_.size(); }
  const std::array<double, 3>& feature_scales() const { return scales_; }
  const std::vector<PointFeatures>& training_features() const { return features_; }
  const std::vector<ClassLabel>& training_labels() const { return labels_; }

  Eigen::Vector3d scaled(const PointFeatures& f) const;

  ClassLabel classify(const PointFeatures& query) const;

  /// Resolves the vote among an ordered neighbor list. Exposed so independent
  /// neighbor searches can share the voting rule.
  ClassLabel vote(std::span<const Neighbor> neighbors) const;

 private:
  std::vector<PointFeatures> features_;
  std::vector<ClassLabel> labels_;
  std::size_t k_;
  std::array<double, 3> scales_{1.0, 1.0, 1.0};
  std::optional<KdTree> tree_;
};

ClassLabel knn_classify(const KnnModel& model, const PointFeatures& query);

struct VegetationRule {
  int min_green = 80;
};

/// Building points with green-dominant color become Tree; nothing else changes.
std::vector<ClassLabel> refine_buildings_rgb(const PointCloud& cloud,
                                             std::span<const ClassLabel> labels,
                                             const VegetationRule& rule = {});

/// Builds a model from a labeled cloud (label ids 0-2 objects, 3 ground).
/// Ground comes from the label-3 points when present, otherwise from the
/// ground filter.
KnnModel train_knn_model(const LabeledPoints& training, std::size_t k,
                         const FeatureParams& features = {}, const GroundParams& ground = {});

}  // namespace tlsdeform
