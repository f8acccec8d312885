#include "tlsdeform/classify.hpp"

#include "tlsdeform/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace tlsdeform {

std::string_view to_string(ClassLabel label) {
  switch (label) {
    case ClassLabel::Building:
      return "building";
    case ClassLabel::Tree:
      return "tree";
    case ClassLabel::LampPost:
      return "lamppost";
  }
  return "unknown";
}

std::optional<ClassLabel> label_from_id(int id) {
  if (id < 0 || id > 2) return std::nullopt;
  return static_cast<ClassLabel>(id);
}

double luminance(const ColorPoint& p) {
  return (0.299 * p.r + 0.587 * p.g + 0.114 * p.b) / 255.0;
}

double surface_variation(std::span<const Eigen::Vector3d> neighborhood) {
  if (neighborhood.size() < 3) return 0.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : neighborhood) mean += p;
  mean /= static_cast<double>(neighborhood.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : neighborhood) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(neighborhood.size());
  const Eigen::Vector3d eig =
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cov, Eigen::EigenvaluesOnly).eigenvalues();
  const double sum = eig.sum();
  if (!(sum > 0)) return 0.0;
  return std::clamp(eig(0) / sum, 0.0, 1.0);
}

namespace {

double median_of(std::vector<double>& values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = (m + *std::max_element(values.begin(), values.begin() + mid)) / 2.0;
  }
  return m;
}

struct CellKeyHash {
  std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& k) const {
    return std::hash<std::int64_t>()(k.first * 73856093) ^ std::hash<std::int64_t>()(k.second);
  }
};

}  // namespace

std::vector<PointFeatures> compute_features(const PointCloud& cloud, const GroundLabeling& ground,
                                            const FeatureParams& params) {
  if (!(params.neighborhood_radius > 0)) throw Error("compute_features: radius must be positive");
  if (ground.ground_indices.empty()) throw Error("compute_features: empty ground set");

  std::vector<Eigen::Vector3d> ground_xy;
  std::vector<double> ground_z;
  ground_xy.reserve(ground.ground_indices.size());
  for (std::size_t i : ground.ground_indices) {
    const auto& p = cloud[i].position;
    ground_xy.emplace_back(p.x(), p.y(), 0.0);
    ground_z.push_back(p.z());
  }
  std::vector<double> scratch = ground_z;
  const double global_median = median_of(scratch);
  const KdTree ground_tree(ground_xy);

  std::unordered_map<std::pair<std::int64_t, std::int64_t>, double, CellKeyHash> cell_median;
  auto local_ground = [&](const Eigen::Vector3d& p) {
    const std::pair<std::int64_t, std::int64_t> key{
        static_cast<std::int64_t>(std::floor(p.x() / params.ground_cell)),
        static_cast<std::int64_t>(std::floor(p.y() / params.ground_cell))};
    if (auto it = cell_median.find(key); it != cell_median.end()) return it->second;
    const Eigen::Vector3d center((static_cast<double>(key.first) + 0.5) * params.ground_cell,
                                 (static_cast<double>(key.second) + 0.5) * params.ground_cell,
                                 0.0);
    const auto hits = ground_tree.radius(center, params.ground_radius);
    double m = global_median;
    if (!hits.empty()) {
      std::vector<double> zs;
      zs.reserve(hits.size());
      for (std::size_t h : hits) zs.push_back(ground_z[h]);
      m = median_of(zs);
    }
    cell_median.emplace(key, m);
    return m;
  };

  const auto positions = cloud.positions();
  const KdTree tree(positions);
  std::vector<PointFeatures> features(cloud.size());
  std::vector<Eigen::Vector3d> neighborhood;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = positions[i];
    neighborhood.clear();
    for (std::size_t j : tree.radius(p, params.neighborhood_radius))
      neighborhood.push_back(positions[j]);
    features[i].height = p.z() - local_ground(p);
    features[i].intensity = luminance(cloud[i]);
    features[i].curvature = surface_variation(neighborhood);
  }
  return features;
}

KnnModel::KnnModel(std::vector<PointFeatures> features, std::vector<ClassLabel> labels,
                   std::size_t k)
    : features_(std::move(features)), labels_(std::move(labels)), k_(k) {
  if (k_ < 1) throw Error("KnnModel: k must be at least 1");
  if (features_.size() != labels_.size())
    throw Error("KnnModel: features and labels differ in length");
  if (features_.size() < k_)
    throw Error("KnnModel: k = " + std::to_string(k_) + " exceeds training size " +
                std::to_string(features_.size()));

  const double n = static_cast<double>(features_.size());
  std::array<double, 3> mean{0, 0, 0};
  for (const auto& f : features_) {
    mean[0] += f.height;
    mean[1] += f.intensity;
    mean[2] += f.curvature;
  }
  for (double& m : mean) m /= n;
  std::array<double, 3> var{0, 0, 0};
  for (const auto& f : features_) {
    const double d[3] = {f.height - mean[0], f.intensity - mean[1], f.curvature - mean[2]};
    for (int j = 0; j < 3; ++j) var[j] += d[j] * d[j];
  }
  for (int j = 0; j < 3; ++j) {
    const double sd = std::sqrt(var[j] / n);
    scales_[j] = sd > 0 ? sd : 1.0;
  }

  std::vector<Eigen::Vector3d> scaled_points;
  scaled_points.reserve(features_.size());
  for (const auto& f : features_) scaled_points.push_back(scaled(f));
  tree_.emplace(scaled_points);
}

Eigen::Vector3d KnnModel::scaled(const PointFeatures& f) const {
  return {f.height / scales_[0], f.intensity / scales_[1], f.curvature / scales_[2]};
}

ClassLabel KnnModel::vote(std::span<const Neighbor> neighbors) const {
  std::array<int, 3> votes{0, 0, 0};
  std::array<double, 3> summed{0, 0, 0};
  for (const auto& n : neighbors) {
    const int c = static_cast<int>(labels_[n.index]);
    ++votes[c];
    summed[c] += std::sqrt(n.dist2);
  }
  int best = 0;
  for (int c = 1; c < 3; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && summed[c] < summed[best]))
      best = c;
  }
  return static_cast<ClassLabel>(best);
}

ClassLabel KnnModel::classify(const PointFeatures& query) const {
  const auto neighbors = tree_->knn(scaled(query), k_);
  return vote(neighbors);
}

ClassLabel knn_classify(const KnnModel& model, const PointFeatures& query) {
  return model.classify(query);
}

std::vector<ClassLabel> refine_buildings_rgb(const PointCloud& cloud,
                                             std::span<const ClassLabel> labels,
                                             const VegetationRule& rule) {
  if (labels.size() != cloud.size())
    throw Error("refine_buildings_rgb: " + std::to_string(labels.size()) + " labels for " +
                std::to_string(cloud.size()) + " points");
  std::vector<ClassLabel> out(labels.begin(), labels.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& p = cloud[i];
    if (out[i] == ClassLabel::Building && p.g > p.r && p.g > p.b && p.g >= rule.min_green)
      out[i] = ClassLabel::Tree;
  }
  return out;
}

KnnModel train_knn_model(const LabeledPoints& training, std::size_t k,
                         const FeatureParams& feature_params, const GroundParams& ground_params) {
  const auto& cloud = training.cloud;
  if (training.labels.size() != cloud.size())
    throw Error("train_knn_model: label count does not match point count");

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int id = training.labels[i];
    if (id != kGroundLabelId && !label_from_id(id))
      throw Error("train_knn_model: point " + std::to_string(i) + " has unknown label id " +
                  std::to_string(id));
  }

  GroundLabeling ground;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    (training.labels[i] == kGroundLabelId ? ground.ground_indices : ground.nonground_indices)
        .push_back(i);
  if (ground.ground_indices.empty()) ground = segment_ground(cloud, ground_params);

  const auto all = compute_features(cloud, ground, feature_params);
  std::vector<PointFeatures> features;
  std::vector<ClassLabel> labels;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (auto label = label_from_id(training.labels[i])) {
      features.push_back(all[i]);
      labels.push_back(*label);
    }
  }
  return KnnModel(std::move(features), std::move(labels), k);
}

}  // namespace tlsdeform
