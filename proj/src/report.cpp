#include "tlsdeform/report.hpp"

#include "tlsdeform/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tlsdeform {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

nlohmann::json vec_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace

nlohmann::json summary_json(const DeformationReport& report) {
  nlohmann::json j;
  j["global_max_deviation_m"] = report.global_max_deviation;
  j["global_mean_deviation_m"] = report.global_mean_deviation;
  j["flagged_slice_count"] = report.flagged_count;
  nlohmann::json flagged = nlohmann::json::array();
  for (const auto& s : report.slices)
    if (s.deviation.flagged) flagged.push_back(s.index);
  j["flagged_slices"] = flagged;
  j["slice_count"] = report.slices.size();
  j["wall_point_count"] = report.wall_point_count;
  j["horizontal_threshold_m"] = report.horizontal_threshold;
  j["axial_threshold_m"] = report.axial_threshold;
  j["wall_height_measured_m"] = report.wall_height_measured;
  j["plane"] = {{"normal", vec_json(report.plane.normal)},
                {"offset", report.plane.offset},
                {"inlier_tol_m", report.plane.inlier_tol},
                {"inlier_count", report.plane.inlier_indices.size()}};
  j["frame"] = {{"origin", vec_json(report.frame.origin)},
                {"u_axis", vec_json(report.frame.u_axis)},
                {"v_axis", vec_json(report.frame.v_axis)},
                {"w_axis", vec_json(report.frame.w_axis)}};
  if (report.axial) {
    j["axial"] = {{"nominal_height_m", report.axial->nominal_height},
                  {"measured_height_m", report.axial->measured_height},
                  {"shortening_m", report.axial->shortening},
                  {"flagged", report.axial->flagged}};
  } else {
    j["axial"] = nullptr;
  }
  j["u_grid"] = report.u_grid;
  j["warnings"] = report.warnings;
  return j;
}

std::string slices_csv(const DeformationReport& report) {
  std::ostringstream out;
  out << "index,v_min,v_max,m,c,point_count,max_dev_m,mean_dev_m,flagged\n";
  for (const auto& s : report.slices) {
    out << s.index << ',' << fmt("%.6f", s.v_min) << ',' << fmt("%.6f", s.v_max) << ',';
    if (s.fit) {
      out << fmt("%.9g", s.fit->slope_m) << ',' << fmt("%.9g", s.fit->intercept_c);
    } else {
      out << ',';
    }
    out << ',' << s.point_count << ',' << fmt("%.6f", s.deviation.max_abs) << ','
        << fmt("%.6f", s.deviation.mean_abs) << ',' << (s.deviation.flagged ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string squared_diff_csv(const DeformationReport& report) {
  std::ostringstream out;
  out << "index,v_center";
  for (double u : report.u_grid) out << ",u=" << fmt("%.4f", u);
  out << '\n';
  for (const auto& s : report.slices) {
    out << s.index << ',' << fmt("%.6f", 0.5 * (s.v_min + s.v_max));
    for (std::size_t j = 0; j < report.u_grid.size(); ++j) {
      out << ',';
      if (s.deviation.fitted) out << fmt("%.9e", s.deviation.squared[j]);
    }
    out << '\n';
  }
  return out.str();
}

std::string deformation_svg(const DeformationReport& report) {
  constexpr double kWidth = 640, kHeight = 480, kMargin = 60;
  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;

  double v_lo = report.slices.empty() ? 0.0 : report.slices.front().v_min;
  double v_hi = report.slices.empty() ? 1.0 : report.slices.back().v_max;
  if (!(v_hi > v_lo)) v_hi = v_lo + 1.0;
  double x_max = report.horizontal_threshold;
  for (const auto& s : report.slices) x_max = std::max(x_max, s.deviation.max_abs);
  x_max = x_max > 0 ? x_max * 1.2 : 0.1;

  auto px = [&](double dev) { return kMargin + plot_w * dev / x_max; };
  auto py = [&](double v) { return kMargin + plot_h * (1.0 - (v - v_lo) / (v_hi - v_lo)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\">"
      << "Max slice deviation vs height</text>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin + plot_h << "\" x2=\""
      << kMargin + plot_w << "\" y2=\"" << kMargin + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
      << "\" y2=\"" << kMargin + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\">deviation (m)</text>\n";
  svg << "<text x=\"16\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 16 " << kHeight / 2
      << ")\" text-anchor=\"middle\">height along wall (m)</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double dev = x_max * t / 4.0;
    svg << "<text x=\"" << fmt("%.1f", px(dev)) << "\" y=\"" << kMargin + plot_h + 16
        << "\" text-anchor=\"middle\">" << fmt("%.3f", dev) << "</text>\n";
    const double v = v_lo + (v_hi - v_lo) * t / 4.0;
    svg << "<text x=\"" << kMargin - 6 << "\" y=\"" << fmt("%.1f", py(v) + 4)
        << "\" text-anchor=\"end\">" << fmt("%.1f", v) << "</text>\n";
  }
  svg << "<line x1=\"" << fmt("%.1f", px(report.horizontal_threshold)) << "\" y1=\"" << kMargin
      << "\" x2=\"" << fmt("%.1f", px(report.horizontal_threshold)) << "\" y2=\""
      << kMargin + plot_h << "\" stroke=\"red\" stroke-dasharray=\"6,4\"/>\n";

  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  bool first = true;
  for (const auto& s : report.slices) {
    if (!s.deviation.fitted) continue;
    if (!first) svg << ' ';
    first = false;
    svg << fmt("%.1f", px(s.deviation.max_abs)) << ',' << fmt("%.1f", py(0.5 * (s.v_min + s.v_max)));
  }
  svg << "\"/>\n";
  for (const auto& s : report.slices) {
    if (!s.deviation.fitted) continue;
    svg << "<circle cx=\"" << fmt("%.1f", px(s.deviation.max_abs)) << "\" cy=\""
        << fmt("%.1f", py(0.5 * (s.v_min + s.v_max))) << "\" r=\"4\" fill=\""
        << (s.deviation.flagged ? "red" : "steelblue") << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::filesystem::path> write_report(const DeformationReport& report,
                                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<std::filesystem::path> paths{dir / "slices.csv", dir / "summary.json",
                                                 dir / "deformation.svg",
                                                 dir / "squared_diff.csv"};
  write_text(paths[0], slices_csv(report));
  write_text(paths[1], summary_json(report).dump(2) + "\n");
  write_text(paths[2], deformation_svg(report));
  write_text(paths[3], squared_diff_csv(report));
  return paths;
}

}  // namespace tlsdeform
