#include "tlsdeform/cloud.hpp"

#include "tlsdeform/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

namespace tlsdeform {

PointCloud::PointCloud(std::vector<ColorPoint> points) : points_(std::move(points)) {}

std::vector<Eigen::Vector3d> PointCloud::positions() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.position);
  return out;
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
  std::vector<ColorPoint> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(points_.at(i));
  return PointCloud(std::move(out));
}

BoundingBox bounding_box(const PointCloud& cloud) {
  if (cloud.empty()) throw Error("bounding_box: empty cloud");
  BoundingBox box{cloud[0].position, cloud[0].position};
  for (const auto& p : cloud) {
    box.min = box.min.cwiseMin(p.position);
    box.max = box.max.cwiseMax(p.position);
  }
  return box;
}

namespace {

// Splits on spaces/tabs/CR; returns the number of fields written to out.
std::size_t split_fields(std::string_view line, std::string_view* out, std::size_t max_fields) {
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < line.size() && n < max_fields) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out[n++] = line.substr(i, j - i);
    i = j;
  }
  return n;
}

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line_no,
                            const std::string& why) {
  throw Error(path.string() + ":" + std::to_string(line_no) + ": " + why);
}

double parse_coordinate(std::string_view field, const std::filesystem::path& path,
                        std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail_line(path, line_no, "malformed coordinate '" + std::string(field) + "'");
  if (!std::isfinite(v)) fail_line(path, line_no, "non-finite coordinate");
  return v;
}

long parse_integer(std::string_view field, const std::filesystem::path& path,
                   std::size_t line_no, const char* what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail_line(path, line_no, std::string("malformed ") + what + " '" + std::string(field) + "'");
  return v;
}

LabeledPoints read_impl(const std::filesystem::path& path, bool want_label) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");

  LabeledPoints result;
  std::vector<ColorPoint> points;
  std::string line;
  std::size_t line_no = 0;
  const std::size_t required = want_label ? 7 : 6;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    auto first = view.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || view[first] == '#') continue;

    std::string_view fields[7];
    const std::size_t n = split_fields(view, fields, 7);
    if (n < required)
      fail_line(path, line_no,
                "expected " + std::to_string(required) + " fields, got " + std::to_string(n));

    ColorPoint p;
    for (int k = 0; k < 3; ++k) p.position[k] = parse_coordinate(fields[k], path, line_no);
    std::uint8_t* channels[3] = {&p.r, &p.g, &p.b};
    for (int k = 0; k < 3; ++k) {
      const long c = parse_integer(fields[3 + k], path, line_no, "color");
      if (c < 0 || c > 255) fail_line(path, line_no, "color outside 0-255");
      *channels[k] = static_cast<std::uint8_t>(c);
    }
    points.push_back(p);
    if (want_label)
      result.labels.push_back(static_cast<int>(parse_integer(fields[6], path, line_no, "label")));
  }
  result.cloud = PointCloud(std::move(points));
  return result;
}

void write_impl(const PointCloud& cloud, const int* labels, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error("cannot write '" + path.string() + "'");
  bool ok = true;
  for (std::size_t i = 0; i < cloud.size() && ok; ++i) {
    const auto& p = cloud[i];
    int rc = labels ? std::fprintf(f, "%.6f %.6f %.6f %d %d %d %d\n", p.position.x(),
                                   p.position.y(), p.position.z(), p.r, p.g, p.b, labels[i])
                    : std::fprintf(f, "%.6f %.6f %.6f %d %d %d\n", p.position.x(),
                                   p.position.y(), p.position.z(), p.r, p.g, p.b);
    ok = rc > 0;
  }
  if (std::fclose(f) != 0 || !ok) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace

PointCloud read_xyzrgb(const std::filesystem::path& path) {
  return read_impl(path, false).cloud;
}

void write_xyzrgb(const PointCloud& cloud, const std::filesystem::path& path) {
  write_impl(cloud, nullptr, path);
}

LabeledPoints read_labeled_xyzrgb(const std::filesystem::path& path) {
  return read_impl(path, true);
}

void write_labeled_xyzrgb(const PointCloud& cloud, std::span<const int> labels,
                          const std::filesystem::path& path) {
  if (labels.size() != cloud.size()) throw Error("write_labeled_xyzrgb: label count mismatch");
  write_impl(cloud, labels.data(), path);
}

}  // namespace tlsdeform
