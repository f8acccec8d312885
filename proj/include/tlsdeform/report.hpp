#pragma once

#include "tlsdeform/wall_deform.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace tlsdeform {

nlohmann::json summary_json(const DeformationReport& report);

std::string slices_csv(const DeformationReport& report);
std::string squared_diff_csv(const DeformationReport& report);
/// Deviation profile against slice height, with the threshold marked.
std::string deformation_svg(const DeformationReport& report);

/// Writes slices.csv, summary.json, deformation.svg and squared_diff.csv into
/// dir (created if needed). Returns the written paths.
std::vector<std::filesystem::path> write_report(const DeformationReport& report,
                                                const std::filesystem::path& dir);

}  // namespace tlsdeform
