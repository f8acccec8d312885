#include "test_support.hpp"

#include "tlsdeform/error.hpp"
#include "tlsdeform/registration.hpp"
#include "tlsdeform/synth.hpp"
#include "tlsdeform/wall_deform.hpp"

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include <limits>

#include <algorithm>
#include <cmath>

using namespace tlsdeform;

namespace {

double angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::acos(std::min(1.0, std::abs(a.normalized().dot(b.normalized())))) * 180.0 / M_PI;
}

PointCloud building_points(const synth::LabeledCloud& scene) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < scene.labels.size(); ++i)
    if (scene.labels[i] == synth::SceneLabel::Building) idx.push_back(i);
  return scene.cloud.select(idx);
}

synth::LabeledCloud wall_scene(synth::DeformationProfile profile, double sigma, double density,
                               std::uint64_t seed) {
  synth::SceneSpec spec;
  spec.deformation = std::move(profile);
  spec.noise_sigma = sigma;
  spec.point_density = density;
  spec.tree_count = 0;
  spec.lamppost_count = 0;
  spec.rng_seed = seed;
  return synth::generate_scene(spec);
}

WallSlice slice_of(const std::vector<Eigen::Vector2d>& uw) {
  WallSlice s;
  s.v_min = 0;
  s.v_max = 1;
  s.points = uw;
  return s;
}

// Normal equations [Suu Su; Su n][m c]^T = [Suw Sw]^T, solved by Cramer's rule
// in extended precision.
std::pair<double, double> normal_equations(const std::vector<Eigen::Vector2d>& uw) {
  long double su = 0, sw = 0, suu = 0, suw = 0, n = uw.size();
  for (const auto& p : uw) {
    su += p.x();
    sw += p.y();
    suu += (long double)p.x() * p.x();
    suw += (long double)p.x() * p.y();
  }
  const long double det = suu * n - su * su;
  return {static_cast<double>((suw * n - su * sw) / det),
          static_cast<double>((suu * sw - su * suw) / det)};
}

}  // namespace

// ---- RANSAC ----

TEST(RansacPlane, ExactPlane) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 100; ++i) pts.emplace_back(u(rng), u(rng), 5.0);
  const auto plane = ransac_plane(testing_support::cloud_from(pts), 0.01, 50, 3);
  EXPECT_NEAR(std::abs(plane.normal.z()), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(plane.offset), 5.0, 1e-9);
  EXPECT_NEAR(plane.offset * plane.normal.z(), 5.0, 1e-9);
  EXPECT_EQ(plane.inlier_indices.size(), 100u);
}

namespace {

PointCloud plane_with_outliers(std::uint64_t seed, Eigen::Vector3d normal, std::size_t n_plane,
                               std::size_t n_out) {
  normal.normalize();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5, 5);
  const Eigen::Vector3d a = normal.unitOrthogonal();
  const Eigen::Vector3d b = normal.cross(a);
  std::vector<Eigen::Vector3d> pts;
  for (std::size_t i = 0; i < n_plane; ++i) pts.push_back(u(rng) * a + u(rng) * b + 0.3 * normal);
  for (std::size_t i = 0; i < n_out; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  std::shuffle(pts.begin(), pts.end(), rng);
  return testing_support::cloud_from(pts);
}

}  // namespace

TEST(RansacPlane, ThirtyPercentOutliers) {
  const Eigen::Vector3d truth = Eigen::Vector3d(0.3, -0.8, 0.2).normalized();
  const auto cloud = plane_with_outliers(2, truth, 700, 300);
  const auto plane = ransac_plane(cloud, 0.01, 500, 17);
  EXPECT_LT(angle_deg(plane.normal, truth), 0.5);
  EXPECT_NEAR(plane.normal.norm(), 1.0, 1e-9);
  for (std::size_t i : plane.inlier_indices)
    EXPECT_LE(std::abs(plane.signed_distance(cloud[i].position)), 0.01);
}

TEST(RansacPlane, CandidateReplayOracle) {
  const auto cloud = plane_with_outliers(3, {0.1, 0.2, 1.0}, 400, 300);
  const auto pts = cloud.positions();
  const double tol = 0.01;
  const std::size_t iterations = 200;
  const std::uint64_t seed = 99;
  const auto plane = ransac_plane(cloud, tol, iterations, seed);

  PlaneSampler sampler(cloud.size(), seed);
  std::size_t best = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto s = sampler.next();
    const auto candidate = plane_through(pts[s[0]], pts[s[1]], pts[s[2]]);
    if (!candidate || s[0] == s[1] || s[1] == s[2] || s[0] == s[2]) continue;
    std::size_t count = 0;
    for (const auto& p : pts) count += std::abs(candidate->signed_distance(p)) <= tol;
    best = std::max(best, count);
  }
  EXPECT_GT(best, 0u);
  EXPECT_GE(plane.inlier_indices.size(), best);
}

TEST(RansacPlane, BitReproducible) {
  const auto cloud = plane_with_outliers(4, {1, 0, 0.1}, 500, 200);
  const auto a = ransac_plane(cloud, 0.01, 300, 5);
  const auto b = ransac_plane(cloud, 0.01, 300, 5);
  EXPECT_EQ(a.normal, b.normal);
  EXPECT_EQ(a.offset, b.offset);
  EXPECT_EQ(a.inlier_indices, b.inlier_indices);
}

TEST(RansacPlane, Errors) {
  EXPECT_THROW(ransac_plane(testing_support::cloud_from({{0, 0, 0}, {1, 0, 0}}), 0.01, 10, 1),
               Error);
  std::vector<Eigen::Vector3d> line;
  for (int i = 0; i < 20; ++i) line.emplace_back(i, 2 * i, 3 * i);
  EXPECT_THROW(ransac_plane(testing_support::cloud_from(line), 0.01, 50, 1), Error);
  EXPECT_THROW(ransac_plane(testing_support::random_cloud(10, 1), 0.01, 0, 1), Error);
}

TEST(PlaneSampler, DeterministicStream) {
  PlaneSampler a(1000, 7), b(1000, 7);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    for (auto v : x) EXPECT_LT(v, 1000u);
  }
}

// ---- Wall frame ----

TEST(WallFrame, AxisAlignedWall) {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) pts.emplace_back(0.0, 0.5 * i, 0.5 * j + 1.0);
  pts.emplace_back(-3.0, 2.0, 0.0);  // building interior side: w should point to +x
  const auto cloud = testing_support::cloud_from(pts);
  PlaneModel plane;
  plane.normal = {-1, 0, 0};
  plane.offset = 0;
  plane.inlier_tol = 0.01;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) plane.inlier_indices.push_back(i);
  const auto f = build_wall_frame(plane, cloud);
  EXPECT_LT((f.v_axis - Eigen::Vector3d(0, 0, 1)).norm(), 1e-12);
  EXPECT_NEAR(std::abs(f.u_axis.y()), 1.0, 1e-12);
  EXPECT_LT((f.w_axis - Eigen::Vector3d(1, 0, 0)).norm(), 1e-12);
  EXPECT_NEAR(f.origin.z(), 1.0, 1e-12);
}

TEST(WallFrame, TiltedWallOrthonormalAndRoundTrip) {
  const Eigen::Vector3d n =
      Eigen::AngleAxisd(10.0 * M_PI / 180.0, Eigen::Vector3d::UnitX()) * Eigen::Vector3d(0, 1, 0);
  const auto cloud = plane_with_outliers(5, n, 500, 0);
  const auto plane = ransac_plane(cloud, 0.01, 100, 1);
  const auto f = build_wall_frame(plane, cloud);
  const Eigen::Vector3d axes[3] = {f.u_axis, f.v_axis, f.w_axis};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(axes[i].dot(axes[j]), i == j ? 1.0 : 0.0, 1e-9);
  EXPECT_GT(f.v_axis.z(), 0.0);
  EXPECT_LT((f.u_axis - f.v_axis.cross(f.w_axis)).norm(), 1e-12);
  double worst = 0;
  for (std::size_t i : plane.inlier_indices) {
    const auto& p = cloud[i].position;
    worst = std::max(worst, (f.to_world(f.to_local(p)) - p).norm());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(WallFrame, HorizontalPlaneRejected) {
  PlaneModel floor;
  floor.normal = Eigen::Vector3d(0.1, 0, 1).normalized();
  const auto cloud = testing_support::random_cloud(10, 1);
  floor.inlier_indices = {0, 1, 2};
  EXPECT_THROW(build_wall_frame(floor, cloud), Error);
}

TEST(WallFrame, OutwardIsAwayFromSceneBulk) {
  const auto scene = wall_scene(synth::NoDeformation{}, 0.003, 40, 1);
  const auto building = building_points(scene);
  const auto plane = ransac_plane(building, 0.02, 300, 1);
  // Wall-only cloud: centroid is on the plane, so the sparser side decides.
  const auto f = build_wall_frame(plane, building);
  EXPECT_GT(std::abs(f.w_axis.dot(scene.wall_normal)), 1.0 - 1e-6);
}

// ---- Slicing ----

TEST(SliceWall, TwentyFiveMetersFifteenBands) {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i <= 250; ++i) pts.emplace_back(0.0, 0.1 * i, 0.0);
  const auto slices = slice_wall(pts, 15);
  ASSERT_EQ(slices.size(), 15u);
  for (const auto& s : slices) EXPECT_NEAR(s.v_max - s.v_min, 25.0 / 15.0, 1e-12);
  EXPECT_NEAR(slices.back().v_max, 25.0, 1e-12);
  EXPECT_FALSE(slices.back().points.empty());
}

TEST(SliceWall, PartitionOfRandomHeights) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> v(-3, 40);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 5000; ++i) pts.emplace_back(v(rng), v(rng), v(rng));
  for (std::size_t n : {2u, 7u, 15u}) {
    const auto slices = slice_wall(pts, n);
    ASSERT_EQ(slices.size(), n);
    std::size_t total = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& s = slices[k];
      EXPECT_EQ(s.index, k);
      EXPECT_LT(s.v_min, s.v_max);
      total += s.points.size();
    }
    EXPECT_EQ(total, pts.size());
    // Each point lands in exactly the band holding its v.
    for (const auto& p : pts) {
      std::size_t hits = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const auto& s = slices[k];
        const bool inside = p.y() >= s.v_min && (p.y() < s.v_max || (k + 1 == n && p.y() <= s.v_max));
        hits += inside;
      }
      EXPECT_EQ(hits, 1u);
    }
  }
}

TEST(SliceWall, Errors) {
  const std::vector<Eigen::Vector3d> pts{{0, 0, 0}, {0, 1, 0}};
  EXPECT_THROW(slice_wall(pts, 1), Error);
  EXPECT_THROW(slice_wall(std::span<const Eigen::Vector3d>{}, 15), Error);
}

// ---- Line fits ----

TEST(FitSliceLine, ExactLine) {
  std::vector<Eigen::Vector2d> uw;
  for (int i = 0; i < 10; ++i) uw.emplace_back(i * 0.5, 0.02 * i * 0.5 + 0.01);
  const auto fit = fit_slice_line(slice_of(uw));
  EXPECT_NEAR(fit.slope_m, 0.02, 1e-15);
  EXPECT_NEAR(fit.intercept_c, 0.01, 1e-15);
  EXPECT_NEAR(fit.residual_sq_sum, 0.0, 1e-28);
  EXPECT_EQ(fit.point_count, 10u);
}

TEST(FitSliceLine, FlatSlice) {
  const auto fit = fit_slice_line(slice_of({{0, 0}, {1, 0}, {3, 0}}));
  EXPECT_EQ(fit.slope_m, 0.0);
  EXPECT_EQ(fit.intercept_c, 0.0);
}

TEST(FitSliceLine, MatchesNormalEquations) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5, 5);
  std::normal_distribution<double> noise(0, 0.01);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Eigen::Vector2d> uw;
    const double m = 0.05 * u(rng), c = 0.1 * u(rng);
    for (int i = 0; i < 50; ++i) {
      const double x = u(rng);
      uw.emplace_back(x, m * x + c + noise(rng));
    }
    const auto fit = fit_slice_line(slice_of(uw));
    const auto [om, oc] = normal_equations(uw);
    EXPECT_NEAR(fit.slope_m, om, 1e-12);
    EXPECT_NEAR(fit.intercept_c, oc, 1e-12);
    double rss = 0;
    for (const auto& p : uw) rss += std::pow(p.y() - (om * p.x() + oc), 2);
    EXPECT_NEAR(fit.residual_sq_sum, rss, 1e-12);
    EXPECT_GE(fit.residual_sq_sum, 0.0);
  }
}

TEST(FitSliceLine, Degenerate) {
  EXPECT_THROW(fit_slice_line(slice_of({{1, 0}, {1, 2}, {1, 5}})), Error);
  EXPECT_THROW(fit_slice_line(slice_of({{1, 0}})), Error);
}

// ---- Comparison ----

TEST(CompareSlices, IdenticalOffsetAndBoundary) {
  const std::vector<double> grid{-1, 0, 1, 2};
  SliceFit ref;
  ref.slope_m = 0.0;
  ref.intercept_c = 0.0;
  ref.point_count = 10;
  SliceFit same = ref;
  SliceFit offset = ref;
  offset.intercept_c = 0.06;
  SliceFit boundary = ref;
  boundary.intercept_c = 0.05;
  const std::vector<std::optional<SliceFit>> fits{ref, same, offset, boundary, std::nullopt};
  const auto dev = compare_slices(fits, grid, 0.05);
  ASSERT_EQ(dev.size(), 5u);
  for (double d : dev[0].deviations) EXPECT_EQ(d, 0.0);
  EXPECT_FALSE(dev[0].flagged);
  EXPECT_EQ(dev[1].max_abs, 0.0);
  EXPECT_FALSE(dev[1].flagged);
  for (double d : dev[2].deviations) EXPECT_NEAR(d, 0.06, 1e-15);
  EXPECT_TRUE(dev[2].flagged);
  EXPECT_EQ(dev[3].max_abs, 0.05);
  EXPECT_FALSE(dev[3].flagged);
  EXPECT_FALSE(dev[4].fitted);
  EXPECT_FALSE(dev[4].flagged);
  for (std::size_t j = 0; j < grid.size(); ++j)
    EXPECT_DOUBLE_EQ(dev[2].squared[j], dev[2].deviations[j] * dev[2].deviations[j]);
}

TEST(CompareSlices, SlopedDeviation) {
  SliceFit ref, tilted;
  ref.intercept_c = 1.0;
  tilted.slope_m = 0.01;
  tilted.intercept_c = 1.0;
  const std::vector<double> grid{0, 2, 4};
  const std::vector<std::optional<SliceFit>> fits{ref, tilted};
  const auto dev = compare_slices(fits, grid, 0.05);
  EXPECT_NEAR(dev[1].max_abs, 0.04, 1e-15);
  EXPECT_NEAR(dev[1].mean_abs, 0.02, 1e-15);
}

TEST(CompareSlices, MissingReference) {
  const std::vector<double> grid{0, 1};
  const std::vector<std::optional<SliceFit>> fits{std::nullopt, SliceFit{}};
  EXPECT_THROW(compare_slices(fits, grid, 0.05), Error);
  const std::vector<std::optional<SliceFit>> ok{SliceFit{}};
  EXPECT_THROW(compare_slices(ok, std::span<const double>{}, 0.05), Error);
}

TEST(CompareSlices, LoweringThresholdNeverUnflags) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  std::vector<std::optional<SliceFit>> fits;
  for (int i = 0; i < 30; ++i) {
    SliceFit f;
    f.slope_m = 0.01 * u(rng);
    f.intercept_c = u(rng);
    fits.push_back(f);
  }
  const auto grid = make_u_grid(-5, 5, 50, 0.9);
  std::vector<bool> previous(fits.size(), false);
  for (double t : {0.2, 0.1, 0.07, 0.05, 0.03, 0.01, 0.001}) {
    const auto dev = compare_slices(fits, grid, t);
    for (std::size_t i = 0; i < fits.size(); ++i) {
      if (previous[i]) EXPECT_TRUE(dev[i].flagged);
      previous[i] = dev[i].flagged;
    }
  }
}

TEST(MakeUGrid, CentralFraction) {
  const auto g = make_u_grid(0, 10, 50, 0.9);
  ASSERT_EQ(g.size(), 50u);
  EXPECT_NEAR(g.front(), 0.5, 1e-12);
  EXPECT_NEAR(g.back(), 9.5, 1e-12);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 9.0 / 49.0, 1e-12);
}

// ---- Axial ----

TEST(AxialShortening, Cases) {
  std::vector<WallSlice> slices(3);
  slices[0].v_min = 0.0;
  slices[2].v_max = 25.0;
  const auto same = check_axial_shortening(slices, 25.0, 0.03);
  EXPECT_FALSE(same.flagged);
  EXPECT_EQ(same.measured_height, 25.0);

  slices[2].v_max = 24.96;
  const auto short_wall = check_axial_shortening(slices, 25.0, 0.03);
  EXPECT_TRUE(short_wall.flagged);
  EXPECT_NEAR(short_wall.shortening, 0.04, 1e-12);

  EXPECT_THROW(check_axial_shortening(slices, 0.0, 0.03), Error);
  EXPECT_THROW(check_axial_shortening(std::span<const WallSlice>{}, 25.0, 0.03), Error);
}

// ---- End to end on generator walls ----

TEST(AnalyzeWall, NoiselessFlatWallHasZeroDeviation) {
  const auto scene = wall_scene(synth::NoDeformation{}, 0.0, 60, 2);
  AnalysisConfig config;
  config.seed = 1;
  const auto report = analyze_wall(building_points(scene), config);
  ASSERT_EQ(report.slices.size(), 15u);
  for (const auto& s : report.slices) {
    ASSERT_TRUE(s.fit.has_value());
    EXPECT_LT(s.deviation.max_abs, 1e-9);
  }
  for (double d : report.slices[0].deviation.deviations) EXPECT_EQ(d, 0.0);
  EXPECT_EQ(report.flagged_count, 0u);
  for (std::size_t i : report.plane.inlier_indices)
    EXPECT_LT(std::abs(report.plane.signed_distance(building_points(scene)[i].position)), 1e-9);
}

TEST(AnalyzeWall, UndeformedNoisyWall) {
  const auto scene = wall_scene(synth::NoDeformation{}, 0.003, 100, 3);
  AnalysisConfig config;
  config.seed = 2;
  const auto report = analyze_wall(building_points(scene), config);
  EXPECT_LT(report.global_max_deviation, 0.01);
  EXPECT_EQ(report.flagged_count, 0u);
  std::size_t total = 0;
  for (const auto& s : report.slices) total += s.point_count;
  EXPECT_EQ(total, report.wall_point_count);
}

TEST(AnalyzeWall, BulgeMagnitudeAndFlags) {
  const synth::Bulge bulge{0.075, 12.5, 8.0};
  const auto scene = wall_scene(bulge, 0.003, 100, 4);
  AnalysisConfig config;
  config.seed = 3;
  const auto report = analyze_wall(building_points(scene), config);
  EXPECT_GE(report.global_max_deviation, 0.065);
  EXPECT_LE(report.global_max_deviation, 0.085);
  for (const auto& s : report.slices) {
    // Band-averaged injected profile decides which slices should flag.
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < scene.labels.size(); ++i) {
      const double v = scene.wall_uv[i].y();
      if (scene.labels[i] != synth::SceneLabel::Building) continue;
      if (v >= s.v_min && (v < s.v_max || s.index + 1 == report.slices.size())) {
        sum += scene.true_deformation[i];
        ++n;
      }
    }
    EXPECT_EQ(s.deviation.flagged, sum / n > 0.05) << "slice " << s.index;
  }
}

TEST(AnalyzeWall, LeanMeanDeviation) {
  const auto scene = wall_scene(synth::Lean{0.035, 0.0}, 0.003, 100, 5);
  AnalysisConfig config;
  config.seed = 4;
  // At the default 2 cm tolerance a tilted plane spans the whole 3.5 cm step.
  const auto tilted = analyze_wall(building_points(scene), config);
  EXPECT_LT(tilted.global_mean_deviation, 0.025);
  config.ransac_inlier_tol = 0.01;
  const auto report = analyze_wall(building_points(scene), config);
  EXPECT_GE(report.global_mean_deviation, 0.025);
  EXPECT_LE(report.global_mean_deviation, 0.045);
}

TEST(AnalyzeWall, AxialCheckFromConfig) {
  const auto scene = wall_scene(synth::NoDeformation{}, 0.003, 40, 6);
  AnalysisConfig config;
  config.seed = 1;
  config.nominal_height = 25.1;
  const auto report = analyze_wall(building_points(scene), config);
  ASSERT_TRUE(report.axial.has_value());
  EXPECT_TRUE(report.axial->flagged);
  EXPECT_NEAR(report.axial->measured_height, 25.0, 0.02);
  config.nominal_height = 25.0;
  EXPECT_FALSE(analyze_wall(building_points(scene), config).axial->flagged);
}

TEST(AnalyzeWall, EmptySlicesBecomeWarnings) {
  const auto scene = wall_scene(synth::NoDeformation{}, 0.003, 60, 7);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < scene.labels.size(); ++i) {
    const double v = scene.wall_uv[i].y();
    if (scene.labels[i] == synth::SceneLabel::Building && (v < 10.0 || v > 15.0)) keep.push_back(i);
  }
  AnalysisConfig config;
  config.seed = 1;
  const auto report = analyze_wall(scene.cloud.select(keep), config);
  std::size_t unfitted = 0;
  for (const auto& s : report.slices) unfitted += !s.fit.has_value();
  EXPECT_GT(unfitted, 0u);
  EXPECT_EQ(report.warnings.size(), unfitted);
  EXPECT_EQ(report.flagged_count, 0u);
}

TEST(AnalyzeWall, ColumnSelection) {
  const auto scene = wall_scene(synth::NoDeformation{}, 0.003, 60, 8);
  AnalysisConfig config;
  config.seed = 1;
  const auto full = analyze_wall(building_points(scene), config);
  config.u_min = 2.0;
  config.u_max = 6.0;
  const auto building = building_points(scene);
  const auto column = analyze_wall(building, config);
  EXPECT_LT(column.wall_point_count, full.wall_point_count);
  double edge = std::numeric_limits<double>::infinity();
  for (std::size_t i : column.plane.inlier_indices)
    edge = std::min(edge, column.frame.u_axis.dot(building[i].position - column.frame.origin));
  EXPECT_GE(column.u_grid.front() - edge, 2.0);
  EXPECT_LE(column.u_grid.back() - edge, 6.0);
}

TEST(AnalyzeWall, InvariantUnderYawAndTranslation) {
  const auto scene = wall_scene(synth::Bulge{0.075, 12.5, 8.0}, 0.003, 60, 9);
  const auto building = building_points(scene);
  AnalysisConfig config;
  config.seed = 11;
  const auto base = analyze_wall(building, config);
  for (double yaw : {17.0, 90.0, 200.0}) {
    const auto tf = synth::yaw_about({1, 2, 0}, yaw, {30.0, -12.0, 4.0});
    const auto moved = analyze_wall(apply_transform(building, tf), config);
    ASSERT_EQ(moved.slices.size(), base.slices.size());
    for (std::size_t i = 0; i < base.slices.size(); ++i)
      EXPECT_NEAR(moved.slices[i].deviation.max_abs, base.slices[i].deviation.max_abs, 1e-6);
  }
}

TEST(AnalyzeWall, ReproducibleForSeed) {
  const auto scene = wall_scene(synth::Bulge{0.075, 12.5, 8.0}, 0.003, 40, 10);
  AnalysisConfig config;
  config.seed = 5;
  const auto a = analyze_wall(building_points(scene), config);
  const auto b = analyze_wall(building_points(scene), config);
  EXPECT_EQ(a.plane.normal, b.plane.normal);
  for (std::size_t i = 0; i < a.slices.size(); ++i)
    EXPECT_EQ(a.slices[i].deviation.deviations, b.slices[i].deviation.deviations);
}
