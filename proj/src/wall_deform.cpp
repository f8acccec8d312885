#include "tlsdeform/wall_deform.hpp"

#include "tlsdeform/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tlsdeform {

std::optional<PlaneModel> plane_through(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                        const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a;
  const Eigen::Vector3d ac = c - a;
  const Eigen::Vector3d n = ab.cross(ac);
  const double len = n.norm();
  if (!(len > 1e-12 * ab.norm() * ac.norm()) || len == 0.0) return std::nullopt;
  PlaneModel plane;
  plane.normal = n / len;
  plane.offset = plane.normal.dot(a);
  return plane;
}

PlaneSampler::PlaneSampler(std::size_t point_count, std::uint64_t seed)
    : count_(point_count), engine_(seed) {
  if (point_count == 0) throw Error("PlaneSampler: no points");
}

std::array<std::size_t, 3> PlaneSampler::next() {
  std::array<std::size_t, 3> s;
  for (auto& i : s) i = static_cast<std::size_t>(engine_() % count_);
  return s;
}

PlaneModel fit_plane_least_squares(std::span<const Eigen::Vector3d> points) {
  if (points.size() < 3) throw Error("fit_plane_least_squares: need at least 3 points");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  PlaneModel plane;
  plane.normal = solver.eigenvectors().col(0).normalized();
  plane.offset = plane.normal.dot(mean);
  return plane;
}

namespace {

std::vector<std::size_t> collect_inliers(const std::vector<Eigen::Vector3d>& pts,
                                         const PlaneModel& plane, double tol) {
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (std::abs(plane.signed_distance(pts[i])) <= tol) inliers.push_back(i);
  return inliers;
}

std::size_t count_inliers(const std::vector<Eigen::Vector3d>& pts, const PlaneModel& plane,
                          double tol) {
  std::size_t count = 0;
  for (const auto& p : pts) count += std::abs(plane.signed_distance(p)) <= tol;
  return count;
}

}  // namespace

PlaneModel ransac_plane(const PointCloud& cloud, double inlier_tol, std::size_t iterations,
                        std::uint64_t seed) {
  if (cloud.size() < 3) throw Error("ransac_plane: need at least 3 points");
  if (iterations < 1) throw Error("ransac_plane: iterations must be at least 1");
  if (!(inlier_tol > 0)) throw Error("ransac_plane: inlier_tol must be positive");

  const auto pts = cloud.positions();
  PlaneSampler sampler(pts.size(), seed);
  std::optional<PlaneModel> best;
  std::size_t best_count = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto s = sampler.next();
    if (s[0] == s[1] || s[1] == s[2] || s[0] == s[2]) continue;
    auto candidate = plane_through(pts[s[0]], pts[s[1]], pts[s[2]]);
    if (!candidate) continue;
    const std::size_t count = count_inliers(pts, *candidate, inlier_tol);
    // Strict improvement only: ties keep the earliest candidate.
    if (!best || count > best_count) {
      best = std::move(candidate);
      best_count = count;
    }
  }
  if (!best) throw Error("ransac_plane: every sample was degenerate");

  best->inlier_tol = inlier_tol;
  best->inlier_indices = collect_inliers(pts, *best, inlier_tol);
  if (best->inlier_indices.size() < 3) return *best;

  std::vector<Eigen::Vector3d> inlier_pts;
  inlier_pts.reserve(best->inlier_indices.size());
  for (std::size_t i : best->inlier_indices) inlier_pts.push_back(pts[i]);
  PlaneModel refit = fit_plane_least_squares(inlier_pts);
  if (refit.normal.dot(best->normal) < 0) {
    refit.normal = -refit.normal;
    refit.offset = -refit.offset;
  }
  refit.inlier_tol = inlier_tol;
  refit.inlier_indices = collect_inliers(pts, refit, inlier_tol);
  if (refit.inlier_indices.size() < best->inlier_indices.size()) return *best;
  return refit;
}

WallFrame build_wall_frame(const PlaneModel& plane, const PointCloud& cloud) {
  const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(plane.normal.dot(up)) > 0.9)
    throw Error("build_wall_frame: plane is near-horizontal, not a wall");
  if (plane.inlier_indices.empty()) throw Error("build_wall_frame: plane has no inliers");

  Eigen::Vector3d normal = plane.normal.normalized();
  double offset = plane.offset;

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  std::size_t above = 0, below = 0;
  for (const auto& p : cloud) {
    centroid += p.position;
    const double d = normal.dot(p.position) - offset;
    above += d > plane.inlier_tol;
    below += d < -plane.inlier_tol;
  }
  centroid /= static_cast<double>(std::max<std::size_t>(cloud.size(), 1));
  const double centroid_side = normal.dot(centroid) - offset;
  bool flip = false;
  if (std::abs(centroid_side) > plane.inlier_tol) {
    flip = centroid_side > 0;
  } else if (above != below) {
    flip = above > below;
  }
  if (flip) {
    normal = -normal;
    offset = -offset;
  }

  WallFrame frame;
  frame.w_axis = normal;
  frame.v_axis = (up - up.dot(normal) * normal).normalized();
  frame.u_axis = frame.v_axis.cross(frame.w_axis).normalized();

  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i : plane.inlier_indices) {
    const double v = frame.v_axis.dot(cloud[i].position);
    if (v < lowest) {
      lowest = v;
      frame.origin = cloud[i].position;
    }
  }
  return frame;
}

std::vector<WallSlice> slice_wall(std::span<const Eigen::Vector3d> wall_points,
                                  std::size_t n_slices) {
  if (wall_points.empty()) throw Error("slice_wall: no wall points");
  if (n_slices < 2) throw Error("slice_wall: need at least 2 slices");

  double lo = wall_points.front().y(), hi = lo;
  for (const auto& p : wall_points) {
    lo = std::min(lo, p.y());
    hi = std::max(hi, p.y());
  }
  const double band = (hi - lo) / static_cast<double>(n_slices);

  std::vector<WallSlice> slices(n_slices);
  for (std::size_t i = 0; i < n_slices; ++i) {
    slices[i].index = i;
    slices[i].v_min = lo + band * static_cast<double>(i);
    slices[i].v_max = i + 1 == n_slices ? hi : lo + band * static_cast<double>(i + 1);
  }
  for (const auto& p : wall_points) {
    std::size_t k = band > 0 ? static_cast<std::size_t>((p.y() - lo) / band) : 0;
    k = std::min(k, n_slices - 1);
    // Guard the band edges against round-off in (v - lo) / band.
    while (k > 0 && p.y() < slices[k].v_min) --k;
    while (k + 1 < n_slices && p.y() >= slices[k + 1].v_min) ++k;
    slices[k].points.emplace_back(p.x(), p.z());
  }
  return slices;
}

SliceFit fit_slice_line(const WallSlice& slice) {
  const auto& pts = slice.points;
  if (pts.size() < 2)
    throw Error("fit_slice_line: slice " + std::to_string(slice.index) + " has fewer than 2 points");
  const double n = static_cast<double>(pts.size());
  double mu = 0, mw = 0;
  for (const auto& p : pts) {
    mu += p.x();
    mw += p.y();
  }
  mu /= n;
  mw /= n;
  double suu = 0, suw = 0;
  for (const auto& p : pts) {
    suu += (p.x() - mu) * (p.x() - mu);
    suw += (p.x() - mu) * (p.y() - mw);
  }
  if (!(suu > 0))
    throw Error("fit_slice_line: slice " + std::to_string(slice.index) +
                " has no spread in u (vertical degenerate)");
  SliceFit fit;
  fit.slope_m = suw / suu;
  fit.intercept_c = mw - fit.slope_m * mu;
  fit.point_count = pts.size();
  for (const auto& p : pts) {
    const double r = p.y() - fit.at(p.x());
    fit.residual_sq_sum += r * r;
  }
  return fit;
}

std::vector<double> make_u_grid(double u_lo, double u_hi, std::size_t count, double fraction) {
  if (count == 0) throw Error("make_u_grid: count must be positive");
  if (!(fraction > 0 && fraction <= 1)) throw Error("make_u_grid: fraction must lie in (0, 1]");
  const double mid = 0.5 * (u_lo + u_hi);
  const double half = 0.5 * (u_hi - u_lo) * fraction;
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = mid;
    return grid;
  }
  for (std::size_t j = 0; j < count; ++j)
    grid[j] = mid - half + 2.0 * half * static_cast<double>(j) / static_cast<double>(count - 1);
  return grid;
}

std::vector<SliceDeviation> compare_slices(std::span<const std::optional<SliceFit>> fits,
                                           std::span<const double> u_grid,
                                           double horizontal_threshold) {
  if (fits.empty() || !fits[0]) throw Error("compare_slices: missing reference fit (slice 0)");
  if (u_grid.empty()) throw Error("compare_slices: empty u grid");
  if (!(horizontal_threshold >= 0)) throw Error("compare_slices: negative threshold");

  const SliceFit& ref = *fits[0];
  std::vector<SliceDeviation> out(fits.size());
  for (std::size_t i = 0; i < fits.size(); ++i) {
    SliceDeviation& d = out[i];
    d.index = i;
    if (!fits[i]) continue;
    d.fitted = true;
    d.deviations.reserve(u_grid.size());
    double sum = 0;
    for (double u : u_grid) {
      const double dev = i == 0 ? 0.0 : fits[i]->at(u) - ref.at(u);
      d.deviations.push_back(dev);
      d.squared.push_back(dev * dev);
      d.max_abs = std::max(d.max_abs, std::abs(dev));
      sum += std::abs(dev);
    }
    d.mean_abs = sum / static_cast<double>(u_grid.size());
    d.flagged = d.max_abs > horizontal_threshold;
  }
  return out;
}

AxialResult check_axial_shortening(std::span<const WallSlice> slices, double nominal_height,
                                   double axial_threshold) {
  if (slices.empty()) throw Error("check_axial_shortening: no slices");
  if (!(nominal_height > 0)) throw Error("check_axial_shortening: nominal height must be positive");
  if (!(axial_threshold >= 0)) throw Error("check_axial_shortening: negative threshold");
  AxialResult r;
  r.nominal_height = nominal_height;
  r.measured_height = slices.back().v_max - slices.front().v_min;
  r.shortening = nominal_height - r.measured_height;
  r.flagged = r.shortening > axial_threshold;
  return r;
}

DeformationReport analyze_wall(const PointCloud& building_points, const AnalysisConfig& config) {
  if (!(config.wall_band > 0)) throw Error("analyze_wall: wall_band must be positive");

  DeformationReport report;
  report.horizontal_threshold = config.horizontal_threshold;
  report.axial_threshold = config.axial_threshold;
  report.plane = ransac_plane(building_points, config.ransac_inlier_tol,
                              config.ransac_iterations, config.seed);
  report.frame = build_wall_frame(report.plane, building_points);

  // Column extent: the inliers' u range, optionally narrowed by the caller.
  // u_min / u_max are offsets from the wall's low-u edge.
  double u_lo = std::numeric_limits<double>::infinity();
  double u_hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i : report.plane.inlier_indices) {
    const double u = report.frame.u_axis.dot(building_points[i].position - report.frame.origin);
    u_lo = std::min(u_lo, u);
    u_hi = std::max(u_hi, u);
  }
  const double edge = u_lo;
  if (config.u_min) u_lo = std::max(u_lo, edge + *config.u_min);
  if (config.u_max) u_hi = std::min(u_hi, edge + *config.u_max);
  if (!(u_lo < u_hi)) throw Error("analyze_wall: selected column is empty");

  std::vector<Eigen::Vector3d> wall;
  wall.reserve(building_points.size());
  for (const auto& p : building_points) {
    const Eigen::Vector3d uvw = report.frame.to_local(p.position);
    if (std::abs(uvw.z()) <= config.wall_band && uvw.x() >= u_lo && uvw.x() <= u_hi)
      wall.push_back(uvw);
  }
  report.wall_point_count = wall.size();

  const auto slices = slice_wall(wall, config.n_slices);
  std::vector<std::optional<SliceFit>> fits(slices.size());
  for (const auto& s : slices) {
    try {
      fits[s.index] = fit_slice_line(s);
    } catch (const Error& e) {
      report.warnings.push_back(std::string("slice excluded: ") + e.what());
    }
  }

  const auto& ref_points = slices.front().points;
  if (!fits[0]) throw Error("analyze_wall: reference slice could not be fitted");
  double ref_lo = ref_points.front().x(), ref_hi = ref_lo;
  for (const auto& p : ref_points) {
    ref_lo = std::min(ref_lo, p.x());
    ref_hi = std::max(ref_hi, p.x());
  }
  report.u_grid = make_u_grid(ref_lo, ref_hi, config.grid_points, config.grid_fraction);
  const auto deviations = compare_slices(fits, report.u_grid, config.horizontal_threshold);

  for (const auto& s : slices) {
    if (!fits[s.index] || s.points.empty()) continue;
    double lo = s.points.front().x(), hi = lo;
    for (const auto& p : s.points) {
      lo = std::min(lo, p.x());
      hi = std::max(hi, p.x());
    }
    if (report.u_grid.front() < lo || report.u_grid.back() > hi)
      report.warnings.push_back("slice " + std::to_string(s.index) +
                                ": u grid extends beyond the slice's points");
  }

  std::size_t mean_terms = 0;
  for (const auto& s : slices) {
    SliceRecord rec;
    rec.index = s.index;
    rec.v_min = s.v_min;
    rec.v_max = s.v_max;
    rec.point_count = s.points.size();
    rec.fit = fits[s.index];
    rec.deviation = deviations[s.index];
    report.global_max_deviation = std::max(report.global_max_deviation, rec.deviation.max_abs);
    if (s.index > 0 && rec.deviation.fitted) {
      report.global_mean_deviation += rec.deviation.mean_abs;
      ++mean_terms;
    }
    report.flagged_count += rec.deviation.flagged;
    report.slices.push_back(std::move(rec));
  }
  if (mean_terms > 0) report.global_mean_deviation /= static_cast<double>(mean_terms);

  report.wall_height_measured = slices.back().v_max - slices.front().v_min;
  if (config.nominal_height)
    report.axial = check_axial_shortening(slices, *config.nominal_height, config.axial_threshold);
  return report;
}

}  // namespace tlsdeform
