#include "tlsdeform/synth.hpp"

#include "tlsdeform/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace tlsdeform::synth {

double evaluate_profile(const DeformationProfile& profile, double v, double wall_height) {
  struct Visitor {
    double v, height;
    double operator()(const NoDeformation&) const { return 0.0; }
    double operator()(const Bulge& b) const {
      const double half = 0.5 * b.width;
      const double d = std::abs(v - b.center_height);
      if (d >= half) return 0.0;
      return b.amplitude * 0.5 * (1.0 + std::cos(std::numbers::pi * d / half));
    }
    double operator()(const Lean& l) const {
      const double base = l.base_height > 0 ? l.base_height : height / 15.0;
      return v >= base ? l.amplitude : 0.0;
    }
    double operator()(const CustomProfile& c) const {
      const auto& t = c.table;
      if (t.empty()) return 0.0;
      if (v <= t.front().first) return t.front().second;
      if (v >= t.back().first) return t.back().second;
      auto hi = std::upper_bound(t.begin(), t.end(), v,
                                 [](double x, const auto& e) { return x < e.first; });
      auto lo = hi - 1;
      const double span = hi->first - lo->first;
      const double f = span > 0 ? (v - lo->first) / span : 0.0;
      return lo->second + f * (hi->second - lo->second);
    }
  };
  return std::visit(Visitor{v, wall_height}, profile);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& s, const std::string& context) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(v))
    throw Error("bad number '" + s + "' in deformation profile '" + context + "'");
  return v;
}

}  // namespace

DeformationProfile parse_profile(const std::string& text) {
  if (text.empty()) throw Error("empty deformation profile");
  const auto parts = split(text, ':');
  if (parts[0] == "none") {
    if (parts.size() > 1) throw Error("deformation 'none' takes no parameters");
    return NoDeformation{};
  }
  if (parts[0] == "bulge") {
    if (parts.size() != 4) throw Error("expected bulge:AMPLITUDE:CENTER:WIDTH, got '" + text + "'");
    Bulge b{to_double(parts[1], text), to_double(parts[2], text), to_double(parts[3], text)};
    if (!(b.width > 0)) throw Error("bulge width must be positive");
    return b;
  }
  if (parts[0] == "lean") {
    if (parts.size() < 2 || parts.size() > 3)
      throw Error("expected lean:AMPLITUDE[:BASE_HEIGHT], got '" + text + "'");
    Lean l{to_double(parts[1], text), parts.size() == 3 ? to_double(parts[2], text) : 0.0};
    return l;
  }
  if (parts[0] == "custom") {
    if (parts.size() != 2) throw Error("expected custom:H=O,H=O,..., got '" + text + "'");
    CustomProfile c;
    for (const auto& entry : split(parts[1], ',')) {
      const auto kv = split(entry, '=');
      if (kv.size() != 2) throw Error("bad custom profile entry '" + entry + "'");
      c.table.emplace_back(to_double(kv[0], text), to_double(kv[1], text));
    }
    if (c.table.empty()) throw Error("custom profile needs at least one entry");
    std::sort(c.table.begin(), c.table.end());
    return c;
  }
  throw Error("unknown deformation profile '" + parts[0] + "'");
}

namespace {

// Shortest text that parses back to the same double.
struct Num {
  double v;
  friend std::ostream& operator<<(std::ostream& os, Num n) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, n.v);
    return os.write(buf, res.ptr - buf);
  }
};

}  // namespace

std::string format_profile(const DeformationProfile& profile) {
  std::ostringstream out;
  if (std::holds_alternative<NoDeformation>(profile)) {
    out << "none";
  } else if (const auto* b = std::get_if<Bulge>(&profile)) {
    out << "bulge:" << Num{b->amplitude} << ':' << Num{b->center_height} << ':' << Num{b->width};
  } else if (const auto* l = std::get_if<Lean>(&profile)) {
    out << "lean:" << Num{l->amplitude};
    if (l->base_height > 0) out << ':' << Num{l->base_height};
  } else if (const auto* c = std::get_if<CustomProfile>(&profile)) {
    out << "custom:";
    for (std::size_t i = 0; i < c->table.size(); ++i)
      out << (i ? "," : "") << Num{c->table[i].first} << '=' << Num{c->table[i].second};
  }
  return out.str();
}

std::vector<int> LabeledCloud::label_ids() const {
  std::vector<int> ids;
  ids.reserve(labels.size());
  for (auto l : labels) ids.push_back(static_cast<int>(l));
  return ids;
}

namespace {

struct ColorModel {
  double r, g, b, spread;
};

constexpr ColorModel kGroundColor{122, 106, 86, 14};
constexpr ColorModel kWallColor{172, 164, 156, 12};
constexpr ColorModel kLampColor{58, 60, 66, 7};

class SceneBuilder {
 public:
  explicit SceneBuilder(const SceneSpec& spec) : spec_(spec), rng_(spec.rng_seed) {}

  LabeledCloud build();

 private:
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double noise() {
    return spec_.noise_sigma > 0 ? std::normal_distribution<double>(0.0, spec_.noise_sigma)(rng_)
                                 : 0.0;
  }
  std::uint8_t channel(double mean, double spread) {
    const double v = std::normal_distribution<double>(mean, spread)(rng_);
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  /// Correlated gray-ish colors: one shared shade plus small per-channel jitter.
  void paint(ColorPoint& p, const ColorModel& c) {
    const double shade = std::normal_distribution<double>(0.0, c.spread)(rng_);
    p.r = channel(c.r + shade, c.spread / 8);
    p.g = channel(c.g + shade, c.spread / 8);
    p.b = channel(c.b + shade, c.spread / 8);
  }
  void add(const Eigen::Vector3d& pos, SceneLabel label, const ColorModel& color,
           double deformation = 0.0, Eigen::Vector2d uv = Eigen::Vector2d::Constant(kNaN)) {
    ColorPoint p;
    p.position = pos;
    paint(p, color);
    add_point(p, label, deformation, uv);
  }
  void add_point(const ColorPoint& p, SceneLabel label, double deformation,
                 Eigen::Vector2d uv = Eigen::Vector2d::Constant(kNaN)) {
    points_.push_back(p);
    out_.labels.push_back(label);
    out_.true_deformation.push_back(deformation);
    out_.wall_uv.push_back(uv);
  }
  std::size_t count_for_area(double area) const {
    return static_cast<std::size_t>(std::llround(area * spec_.point_density));
  }
  double distance_to_wall(const Eigen::Vector2d& xy) const;
  std::vector<Eigen::Vector2d> place_objects(std::size_t count, double wall_clearance,
                                             double spacing, std::vector<Eigen::Vector2d>& taken);

  void add_ground();
  void add_wall();
  void add_tree(const Eigen::Vector2d& base);
  void add_lamppost(const Eigen::Vector2d& base);

  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  const SceneSpec& spec_;
  std::mt19937_64 rng_;
  std::vector<ColorPoint> points_;
  LabeledCloud out_;
  Eigen::Vector2d wall_dir_;
};

double SceneBuilder::distance_to_wall(const Eigen::Vector2d& xy) const {
  const Eigen::Vector2d d = xy - spec_.wall.start;
  const double t = std::clamp(d.dot(wall_dir_), 0.0, spec_.wall.length);
  return (d - t * wall_dir_).norm();
}

std::vector<Eigen::Vector2d> SceneBuilder::place_objects(std::size_t count, double wall_clearance,
                                                         double spacing,
                                                         std::vector<Eigen::Vector2d>& taken) {
  Region region = spec_.object_region;
  if (region.empty()) {
    region = {-spec_.ground_width / 2 + 1.5, spec_.ground_width / 2 - 1.5,
              -spec_.ground_depth / 2 + 1.5, spec_.ground_depth / 2 - 1.5};
  }
  std::vector<Eigen::Vector2d> placed;
  for (std::size_t i = 0; i < count; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < 2000 && !ok; ++attempt) {
      const Eigen::Vector2d xy(uniform(region.x_min, region.x_max),
                               uniform(region.y_min, region.y_max));
      if (distance_to_wall(xy) < wall_clearance) continue;
      ok = std::all_of(taken.begin(), taken.end(),
                       [&](const Eigen::Vector2d& o) { return (o - xy).norm() >= spacing; });
      if (ok) {
        taken.push_back(xy);
        placed.push_back(xy);
      }
    }
    if (!ok) throw Error("generate_scene: no room to place object " + std::to_string(i + 1));
  }
  return placed;
}

void SceneBuilder::add_ground() {
  const std::size_t n = count_for_area(spec_.ground_width * spec_.ground_depth);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = uniform(-spec_.ground_width / 2, spec_.ground_width / 2);
    const double y = uniform(-spec_.ground_depth / 2, spec_.ground_depth / 2);
    add({x, y, noise()}, SceneLabel::Ground, kGroundColor);
  }
}

void SceneBuilder::add_wall() {
  const auto& w = spec_.wall;
  const Eigen::Vector3d dir(wall_dir_.x(), wall_dir_.y(), 0.0);
  const Eigen::Vector3d normal = out_.wall_normal;
  const Eigen::Vector3d base(w.start.x(), w.start.y(), 0.0);
  const std::size_t n = count_for_area(w.length * w.height);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform(0.0, w.length);
    const double v = uniform(0.0, w.height);
    const double offset = evaluate_profile(spec_.deformation, v, w.height);
    const Eigen::Vector3d pos =
        base + u * dir + v * Eigen::Vector3d::UnitZ() + (offset + noise()) * normal;
    add(pos, SceneLabel::Building, kWallColor, offset, {u, v});
  }
}

void SceneBuilder::add_tree(const Eigen::Vector2d& base) {
  const double rxy = uniform(1.0, 1.4);
  const double rz = uniform(1.4, 1.9);
  const double center_z = uniform(4.0, 6.0);
  // Point budget from the ellipsoid's surface area (Knud Thomsen), sampled
  // through the volume so neighborhoods are volumetric.
  const double p = 1.6075;
  const double ap = std::pow(rxy, p);
  const double bp = std::pow(rz, p);
  const double area =
      4.0 * std::numbers::pi * std::pow((ap * ap + 2.0 * ap * bp) / 3.0, 1.0 / p);
  const std::size_t n = count_for_area(area);
  const ColorModel leaf{uniform(50, 80), uniform(125, 165), uniform(40, 65), 18};
  for (std::size_t i = 0; i < n;) {
    const Eigen::Vector3d q(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
    if (q.squaredNorm() > 1.0) continue;
    ++i;
    ColorPoint pt;
    pt.position = {base.x() + q.x() * rxy, base.y() + q.y() * rxy, center_z + q.z() * rz};
    pt.r = channel(leaf.r, leaf.spread);
    pt.g = channel(leaf.g, leaf.spread);
    pt.b = channel(leaf.b, leaf.spread);
    add_point(pt, SceneLabel::Tree, 0.0);
  }
}

void SceneBuilder::add_lamppost(const Eigen::Vector2d& base) {
  const double radius = 0.08;
  const double height = uniform(4.0, 6.0);
  const std::size_t n = count_for_area(2.0 * std::numbers::pi * radius * height);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = uniform(0.0, 2.0 * std::numbers::pi);
    const double z = uniform(0.0, height);
    const double r = radius + noise();
    add({base.x() + r * std::cos(a), base.y() + r * std::sin(a), z}, SceneLabel::LampPost,
        kLampColor);
  }
}

LabeledCloud SceneBuilder::build() {
  const auto& w = spec_.wall;
  if (!(spec_.ground_width > 0 && spec_.ground_depth > 0 && w.length > 0 && w.height > 0))
    throw Error("generate_scene: scene dimensions must be positive");
  if (!(spec_.point_density > 0)) throw Error("generate_scene: point density must be positive");
  if (!(spec_.noise_sigma >= 0)) throw Error("generate_scene: noise sigma must be non-negative");

  const double yaw = w.yaw_deg * std::numbers::pi / 180.0;
  wall_dir_ = {std::cos(yaw), std::sin(yaw)};
  out_.wall_normal = {-wall_dir_.y(), wall_dir_.x(), 0.0};

  add_ground();
  add_wall();
  std::vector<Eigen::Vector2d> taken;
  for (const auto& xy : place_objects(spec_.tree_count, 3.5, 3.2, taken)) add_tree(xy);
  for (const auto& xy : place_objects(spec_.lamppost_count, 2.0, 2.0, taken)) add_lamppost(xy);

  out_.cloud = PointCloud(std::move(points_));
  return std::move(out_);
}

}  // namespace

LabeledCloud generate_scene(const SceneSpec& spec) { return SceneBuilder(spec).build(); }

RigidTransform yaw_about(const Eigen::Vector3d& center, double yaw_deg,
                         const Eigen::Vector3d& shift) {
  RigidTransform tf;
  tf.rotation =
      Eigen::AngleAxisd(yaw_deg * std::numbers::pi / 180.0, Eigen::Vector3d::UnitZ()).matrix();
  tf.translation = center - tf.rotation * center + shift;
  return tf;
}

ScanPair split_scans(const LabeledCloud& labeled, double overlap_fraction, double perturb_yaw_deg,
                     const Eigen::Vector3d& perturb_shift) {
  if (!(overlap_fraction > 0 && overlap_fraction < 1))
    throw Error("split_scans: overlap_fraction must lie in (0, 1)");
  const auto& cloud = labeled.cloud;
  const std::size_t n = cloud.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cloud[a].position.x() < cloud[b].position.x();
  });
  const auto first_end =
      static_cast<std::size_t>(std::ceil(static_cast<double>(n) * (1.0 + overlap_fraction) / 2.0));
  const auto second_begin =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - overlap_fraction) / 2.0));
  if (std::min(first_end, n) <= second_begin + 2)
    throw Error("split_scans: overlap too small to leave shared points");

  ScanPair pair;
  pair.first_indices.assign(order.begin(), order.begin() + std::min(first_end, n));
  pair.second_indices.assign(order.begin() + second_begin, order.end());
  std::sort(pair.first_indices.begin(), pair.first_indices.end());
  std::sort(pair.second_indices.begin(), pair.second_indices.end());
  pair.first = cloud.select(pair.first_indices);
  const PointCloud second = cloud.select(pair.second_indices);

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : second) centroid += p.position;
  centroid /= static_cast<double>(second.size());
  const RigidTransform perturbation = yaw_about(centroid, perturb_yaw_deg, perturb_shift);
  pair.second = apply_transform(second, perturbation);
  pair.alignment = perturbation.inverse();
  return pair;
}

}  // namespace tlsdeform::synth
