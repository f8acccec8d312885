#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tlsdeform::cli {

/// Exit codes: 0 success (no slice flagged), 2 deformation flagged, 1 error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads flat "key = value" lines ('#' comments) into --key value tokens.
std::vector<std::string> config_file_tokens(const std::string& path);

/// Reads the config snapshot of a manifest.json into --key value tokens.
std::vector<std::string> manifest_tokens(const std::string& path);

}  // namespace tlsdeform::cli
