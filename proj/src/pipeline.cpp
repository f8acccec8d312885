#include "tlsdeform/pipeline.hpp"

#include "tlsdeform/error.hpp"
#include "tlsdeform/report.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace tlsdeform {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require(bool ok, const std::string& flag, const std::string& what) {
  if (!ok) throw Error("--" + flag + ": " + what);
}

}  // namespace

void PipelineConfig::validate() const {
  require(!inputs.empty(), "in", "at least one input scan is required");
  require(!training.empty(), "train", "a labeled training file is required");
  require(!report_dir.empty(), "report", "a report directory is required");
  require(seed.has_value(), "seed", "a seed is required for the randomized stages");
  require(voxel.cell_size > 0, "voxel", "must be positive");
  require(outliers.neighbor_count >= 1, "sor-k", "must be at least 1");
  require(outliers.std_multiplier > 0, "sor-mult", "must be positive");
  require(icp.max_iterations >= 1, "max-iter", "must be at least 1");
  require(icp.convergence_tol > 0, "tol", "must be positive");
  require(icp.max_correspondence_dist > 0, "max-corr", "must be positive");
  require(ground.max_slope_deg > 0 && ground.max_slope_deg < 90, "ground-slope",
          "must lie in (0, 90)");
  require(ground.max_edge_len > 0, "ground-edge", "must be positive");
  require(ground.seed_percentile > 0 && ground.seed_percentile < 1, "ground-seed",
          "must lie in (0, 1)");
  require(k >= 1, "k", "must be at least 1");
  require(features.neighborhood_radius > 0, "radius", "must be positive");
  require(vegetation.min_green >= 0 && vegetation.min_green <= 255, "veg-min-green",
          "must lie in [0, 255]");
  require(analysis.n_slices >= 2, "slices", "must be at least 2");
  require(analysis.horizontal_threshold > 0, "threshold", "must be positive");
  require(analysis.axial_threshold > 0, "axial-threshold", "must be positive");
  require(!analysis.nominal_height || *analysis.nominal_height > 0, "nominal-height",
          "must be positive");
  require(analysis.ransac_inlier_tol > 0, "ransac-tol", "must be positive");
  require(analysis.ransac_iterations >= 1, "ransac-iter", "must be at least 1");
  require(analysis.wall_band > 0, "wall-band", "must be positive");
  require(!(analysis.u_min && analysis.u_max) || *analysis.u_min < *analysis.u_max, "u-max",
          "must exceed --u-min");
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::to_key_values() const {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& in : inputs) kv.emplace_back("in", in.string());
  kv.emplace_back("train", training.string());
  kv.emplace_back("report", report_dir.string());
  if (seed) kv.emplace_back("seed", std::to_string(*seed));
  kv.emplace_back("voxel", num(voxel.cell_size));
  kv.emplace_back("sor-k", std::to_string(outliers.neighbor_count));
  kv.emplace_back("sor-mult", num(outliers.std_multiplier));
  kv.emplace_back("max-iter", std::to_string(icp.max_iterations));
  kv.emplace_back("tol", num(icp.convergence_tol));
  kv.emplace_back("max-corr", num(icp.max_correspondence_dist));
  kv.emplace_back("ground-slope", num(ground.max_slope_deg));
  kv.emplace_back("ground-edge", num(ground.max_edge_len));
  kv.emplace_back("ground-seed", num(ground.seed_percentile));
  kv.emplace_back("k", std::to_string(k));
  kv.emplace_back("radius", num(features.neighborhood_radius));
  kv.emplace_back("veg-min-green", std::to_string(vegetation.min_green));
  kv.emplace_back("slices", std::to_string(analysis.n_slices));
  kv.emplace_back("threshold", num(analysis.horizontal_threshold));
  kv.emplace_back("axial-threshold", num(analysis.axial_threshold));
  if (analysis.nominal_height) kv.emplace_back("nominal-height", num(*analysis.nominal_height));
  kv.emplace_back("ransac-tol", num(analysis.ransac_inlier_tol));
  kv.emplace_back("ransac-iter", std::to_string(analysis.ransac_iterations));
  kv.emplace_back("wall-band", num(analysis.wall_band));
  if (analysis.u_min) kv.emplace_back("u-min", num(*analysis.u_min));
  if (analysis.u_max) kv.emplace_back("u-max", num(*analysis.u_max));
  return kv;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest init failed");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

namespace {

class StageRunner {
 public:
  explicit StageRunner(RunManifest& manifest) : manifest_(manifest) {}

  template <typename Fn>
  auto run(const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(name, start);
      } else {
        auto result = fn();
        record(name, start);
        return result;
      }
    } catch (const std::exception& e) {
      mark_partial();
      throw Error("stage '" + name + "' failed: " + e.what());
    }
  }

  void output(const std::filesystem::path& p) { manifest_.outputs.push_back(p); }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point start) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    manifest_.timings.push_back({name, dt.count()});
    std::fprintf(stderr, "[%s] %.2f s\n", name.c_str(), dt.count());
  }

  void mark_partial() {
    for (auto& p : manifest_.outputs) {
      std::error_code ec;
      if (!std::filesystem::exists(p, ec)) continue;
      auto partial = p;
      partial += ".partial";
      std::filesystem::rename(p, partial, ec);
      if (!ec) p = partial;
    }
  }

  RunManifest& manifest_;
};

nlohmann::json manifest_json(const RunManifest& m) {
  nlohmann::json j;
  j["tool"] = "tlsdeform";
  j["tool_version"] = m.tool_version;
  nlohmann::json cfg = nlohmann::json::array();
  for (const auto& [k, v] : m.config) cfg.push_back({k, v});
  j["config"] = cfg;
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, digest] : m.input_digests)
    inputs.push_back({{"path", path}, {"sha256", digest}});
  j["inputs"] = inputs;
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& t : m.timings) stages.push_back({{"stage", t.name}, {"seconds", t.seconds}});
  j["stages"] = stages;
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& p : m.outputs) outputs.push_back(p.filename().string());
  j["outputs"] = outputs;
  j["flagged_slices"] = m.flagged_slices;
  j["exit_code"] = m.exit_code;
  return j;
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  const auto& dir = config.report_dir;
  std::filesystem::create_directories(dir);

  PipelineResult result;
  RunManifest& manifest = result.manifest;
  manifest.config = config.to_key_values();
  StageRunner stages(manifest);

  auto write_cloud = [&](const PointCloud& cloud, const std::string& name) {
    const auto path = dir / name;
    write_xyzrgb(cloud, path);
    stages.output(path);
  };

  PointCloud merged = stages.run("load", [&] {
    for (const auto& in : config.inputs)
      manifest.input_digests.emplace_back(in.string(), sha256_file(in));
    manifest.input_digests.emplace_back(config.training.string(), sha256_file(config.training));
    std::vector<PointCloud> scans;
    for (const auto& in : config.inputs) scans.push_back(read_xyzrgb(in));
    for (std::size_t i = 1; i < scans.size(); ++i) {
      const auto icp = icp_register(scans[i], scans[0], config.icp);
      std::fprintf(stderr, "registered %s: rmse=%.6f m, iterations=%zu\n",
                   config.inputs[i].string().c_str(), icp.final_rmse, icp.iterations_used);
      scans[i] = apply_transform(scans[i], icp.transform);
    }
    PointCloud out = merge(scans);
    if (scans.size() > 1) write_cloud(out, "merged.xyzrgb");
    return out;
  });

  PointCloud cleaned = stages.run("preprocess", [&] {
    const PointCloud down = voxel_downsample(merged, config.voxel);
    PointCloud kept = remove_statistical_outliers(down, config.outliers).kept;
    write_cloud(kept, "preprocessed.xyzrgb");
    return kept;
  });

  GroundLabeling ground = stages.run("ground-filter", [&] {
    GroundLabeling g = segment_ground(cleaned, config.ground);
    write_cloud(cleaned.select(g.ground_indices), "ground.xyzrgb");
    write_cloud(cleaned.select(g.nonground_indices), "nonground.xyzrgb");
    return g;
  });

  std::vector<ClassLabel> labels = stages.run("classify", [&] {
    const KnnModel model = train_knn_model(read_labeled_xyzrgb(config.training), config.k,
                                           config.features, config.ground);
    const auto features = compute_features(cleaned, ground, config.features);
    std::vector<ClassLabel> out;
    out.reserve(ground.nonground_indices.size());
    for (std::size_t i : ground.nonground_indices) out.push_back(model.classify(features[i]));
    return out;
  });

  PointCloud buildings = stages.run("refine", [&] {
    const PointCloud nonground = cleaned.select(ground.nonground_indices);
    const auto refined = refine_buildings_rgb(nonground, labels, config.vegetation);
    std::vector<std::vector<std::size_t>> by_class(kAllClasses.size());
    for (std::size_t i = 0; i < refined.size(); ++i)
      by_class[static_cast<std::size_t>(refined[i])].push_back(i);
    for (ClassLabel c : kAllClasses)
      write_cloud(nonground.select(by_class[static_cast<std::size_t>(c)]),
                  std::string(to_string(c)) + ".xyzrgb");
    return nonground.select(by_class[static_cast<std::size_t>(ClassLabel::Building)]);
  });

  result.report = stages.run("analyze", [&] {
    AnalysisConfig analysis = config.analysis;
    analysis.seed = *config.seed;
    DeformationReport report = analyze_wall(buildings, analysis);
    for (const auto& p : write_report(report, dir)) stages.output(p);
    return report;
  });

  manifest.flagged_slices = result.report.flagged_count;
  manifest.exit_code = result.report.flagged_count > 0 ? 2 : 0;
  const auto manifest_path = dir / "manifest.json";
  manifest.outputs.push_back(manifest_path);
  write_atomically(manifest_path, manifest_json(manifest).dump(2) + "\n");
  return result;
}

}  // namespace tlsdeform
