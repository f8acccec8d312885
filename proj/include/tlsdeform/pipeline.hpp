#pragma once

#include "tlsdeform/classify.hpp"
#include "tlsdeform/ground_filter.hpp"
#include "tlsdeform/preprocess.hpp"
#include "tlsdeform/registration.hpp"
#include "tlsdeform/wall_deform.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tlsdeform {

inline constexpr const char* kToolVersion = "1.0.0";

struct PipelineConfig {
  std::vector<std::filesystem::path> inputs;  // scans; later ones are registered onto the first
  std::filesystem::path training;             // labeled XYZRGB + class column
  std::filesystem::path report_dir;

  VoxelGridParams voxel;
  OutlierParams outliers;
  IcpParams icp;
  GroundParams ground;
  std::size_t k = 17;
  FeatureParams features;
  VegetationRule vegetation;
  AnalysisConfig analysis;
  std::optional<std::uint64_t> seed;

  /// Throws naming the first offending setting.
  void validate() const;

  /// Flat (flag-name, value) snapshot; feeding it back as --flag value
  /// reproduces this config.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
};

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

struct RunManifest {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, std::string>> input_digests;  // path, sha256
  std::vector<StageTiming> timings;
  std::vector<std::filesystem::path> outputs;
  std::string tool_version = kToolVersion;
  std::size_t flagged_slices = 0;
  int exit_code = 0;
};

struct PipelineResult {
  RunManifest manifest;
  DeformationReport report;
};

/// Runs merge/register -> downsample -> outlier removal -> ground filter ->
/// classification -> RGB refinement -> wall analysis, writing every stage's
/// output plus manifest.json into config.report_dir. On failure, files
/// already written are renamed with a ".partial" suffix and the error names
/// the failing stage.
PipelineResult run_pipeline(const PipelineConfig& config);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace tlsdeform
