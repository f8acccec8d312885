#include "tlsdeform/cli.hpp"

#include "tlsdeform/classify.hpp"
#include "tlsdeform/error.hpp"
#include "tlsdeform/ground_filter.hpp"
#include "tlsdeform/pipeline.hpp"
#include "tlsdeform/registration.hpp"
#include "tlsdeform/report.hpp"
#include "tlsdeform/synth.hpp"
#include "tlsdeform/wall_deform.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>

namespace tlsdeform::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string flag_name(const std::string& token) {
  if (token.rfind("--", 0) != 0) return {};
  std::string name = token.substr(2);
  if (auto eq = name.find('='); eq != std::string::npos) name.resize(eq);
  return name;
}

// Inserts config-provided tokens ahead of the explicit ones; any key given
// explicitly on the command line replaces every config value for that key.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.empty()) return args;
  std::vector<std::string> explicit_args;
  std::vector<std::string> from_file;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string name = flag_name(args[i]);
    if (name == "config" || name == "manifest") {
      std::string path;
      if (auto eq = args[i].find('='); eq != std::string::npos) {
        path = args[i].substr(eq + 1);
      } else if (i + 1 < args.size()) {
        path = args[++i];
      } else {
        throw Error("--" + name + ": missing file argument");
      }
      auto tokens = name == "config" ? config_file_tokens(path) : manifest_tokens(path);
      from_file.insert(from_file.end(), tokens.begin(), tokens.end());
    } else {
      explicit_args.push_back(args[i]);
    }
  }
  if (from_file.empty()) return args;

  std::set<std::string> overridden;
  for (const auto& t : explicit_args)
    if (auto n = flag_name(t); !n.empty()) overridden.insert(n);

  std::vector<std::string> out{args[0], explicit_args.front()};  // program, subcommand
  for (std::size_t i = 0; i + 1 < from_file.size(); i += 2)
    if (!overridden.count(flag_name(from_file[i])))
      out.insert(out.end(), {from_file[i], from_file[i + 1]});
  out.insert(out.end(), explicit_args.begin() + 1, explicit_args.end());
  return out;
}

struct GroundFlags {
  GroundParams params;
  void bind(CLI::App* app) {
    app->add_option("--ground-slope", params.max_slope_deg, "Max triangle slope for ground (deg)")
        ->check(CLI::Range(0.0, 90.0).description("in (0, 90)"))
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--ground-edge", params.max_edge_len, "Max 3D triangle edge for ground (m)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--ground-seed", params.seed_percentile,
                    "Fraction of lowest points that seed the ground region")
        ->check(CLI::Range(0.0, 1.0))
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
};

struct ClassifyFlags {
  std::size_t k = 17;
  FeatureParams features;
  VegetationRule vegetation;
  void bind(CLI::App* app) {
    app->add_option("--k", k, "KNN neighbor count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--radius", features.neighborhood_radius, "Curvature neighborhood radius (m)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--veg-min-green", vegetation.min_green,
                    "Minimum green channel for the vegetation color rule")
        ->check(CLI::Range(0, 255))
        ->capture_default_str();
  }
};

struct AnalysisFlags {
  AnalysisConfig config;
  double nominal_height = 0.0;
  double u_min = 0.0;
  double u_max = 0.0;
  CLI::Option* nominal_opt = nullptr;
  CLI::Option* u_min_opt = nullptr;
  CLI::Option* u_max_opt = nullptr;

  void bind(CLI::App* app) {
    app->add_option("--slices", config.n_slices, "Number of horizontal slices")
        ->check(CLI::Range(std::size_t{2}, std::size_t{100000}))
        ->capture_default_str();
    app->add_option("--threshold", config.horizontal_threshold,
                    "Horizontal deviation threshold (m)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--axial-threshold", config.axial_threshold,
                    "Allowed axial shortening (m)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    nominal_opt = app->add_option("--nominal-height", nominal_height,
                                  "Nominal wall height (m); enables the axial check")
                      ->check(CLI::PositiveNumber);
    app->add_option("--ransac-tol", config.ransac_inlier_tol, "RANSAC inlier tolerance (m)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--ransac-iter", config.ransac_iterations, "RANSAC iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--wall-band", config.wall_band,
                    "Max distance from the wall plane for wall points (m)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    u_min_opt = app->add_option("--u-min", u_min, "Column start, measured from the wall's low-u edge (m)");
    u_max_opt = app->add_option("--u-max", u_max, "Column end, measured from the wall's low-u edge (m)");
  }

  AnalysisConfig resolve() const {
    AnalysisConfig c = config;
    if (nominal_opt->count()) c.nominal_height = nominal_height;
    if (u_min_opt->count()) c.u_min = u_min;
    if (u_max_opt->count()) c.u_max = u_max;
    return c;
  }
};

void print_report(const DeformationReport& r, std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof line,
                "wall points: %zu, slices: %zu\nglobal max deviation: %.4f m\n"
                "global mean deviation: %.4f m\nflagged slices (> %.3f m):",
                r.wall_point_count, r.slices.size(), r.global_max_deviation,
                r.global_mean_deviation, r.horizontal_threshold);
  out << line;
  for (const auto& s : r.slices)
    if (s.deviation.flagged) out << ' ' << s.index;
  if (r.flagged_count == 0) out << " none";
  out << '\n';
  if (r.axial) {
    std::snprintf(line, sizeof line, "axial: measured %.4f m, nominal %.4f m, shortening %.4f m%s\n",
                  r.axial->measured_height, r.axial->nominal_height, r.axial->shortening,
                  r.axial->flagged ? " (FLAGGED)" : "");
    out << line;
  }
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
}

int report_exit_code(const DeformationReport& r) { return r.flagged_count > 0 ? 2 : 0; }

std::string with_suffix(const std::string& prefix, const std::string& suffix) {
  return prefix + "_" + suffix + ".xyzrgb";
}

}  // namespace

std::vector<std::string> config_file_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("--config: cannot open '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("--config: " + path + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty())
      throw Error("--config: " + path + ":" + std::to_string(line_no) + ": empty key");
    tokens.push_back("--" + key);
    tokens.push_back(value);
  }
  return tokens;
}

std::vector<std::string> manifest_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("--manifest: cannot open '" + path + "'");
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("config") || !j["config"].is_array())
    throw Error("--manifest: '" + path + "' has no config snapshot");
  std::vector<std::string> tokens;
  for (const auto& kv : j["config"]) {
    tokens.push_back("--" + kv.at(0).get<std::string>());
    tokens.push_back(kv.at(1).get<std::string>());
  }
  return tokens;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  CLI::App app{"Wall deformation analysis for terrestrial laser scans"};
  app.name(args.empty() ? "tlsdeform" : args[0]);
  app.require_subcommand(1);
  std::function<int()> action;

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic scene");
  synth::SceneSpec spec;
  std::string synth_out, deform_text = "none", pair_prefix;
  std::uint64_t synth_seed = 0;
  double overlap = 0.3, perturb_deg = 5.0, perturb_shift = 0.2;
  synth_cmd->add_option("--out", synth_out, "Labeled output file (.xyzrgbl)")->required();
  synth_cmd->add_option("--wall-height", spec.wall.height, "Wall height (m)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--wall-length", spec.wall.length, "Wall length (m)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--wall-yaw", spec.wall.yaw_deg, "Wall direction from +X (deg)")
      ->capture_default_str();
  synth_cmd->add_option("--deform", deform_text,
                        "none | bulge:AMP:CENTER:WIDTH | lean:AMP[:BASE] | custom:H=O,...")
      ->capture_default_str();
  synth_cmd->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma (m)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth_cmd->add_option("--density", spec.point_density, "Points per square meter")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--trees", spec.tree_count, "Number of trees")->capture_default_str();
  synth_cmd->add_option("--lamps", spec.lamppost_count, "Number of lampposts")
      ->capture_default_str();
  synth_cmd->add_option("--ground-width", spec.ground_width, "Ground extent along X (m)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--ground-depth", spec.ground_depth, "Ground extent along Y (m)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "RNG seed")->required();
  synth_cmd->add_option("--pair-prefix", pair_prefix,
                        "Also write an overlapping, perturbed scan pair PREFIX_a/_b.xyzrgb");
  synth_cmd->add_option("--overlap", overlap, "Scan pair overlap fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth_cmd->add_option("--perturb-deg", perturb_deg, "Yaw applied to the second scan (deg)")
      ->capture_default_str();
  synth_cmd->add_option("--perturb-shift", perturb_shift, "X shift applied to the second scan (m)")
      ->capture_default_str();
  synth_cmd->callback([&] {
    action = [&] {
      spec.deformation = synth::parse_profile(deform_text);
      spec.rng_seed = synth_seed;
      const auto scene = synth::generate_scene(spec);
      write_labeled_xyzrgb(scene.cloud, scene.label_ids(), synth_out);
      out << "wrote " << scene.cloud.size() << " points to " << synth_out << '\n';
      if (!pair_prefix.empty()) {
        const auto pair = synth::split_scans(scene, overlap, perturb_deg,
                                             Eigen::Vector3d(perturb_shift, 0.0, 0.0));
        write_xyzrgb(pair.first, pair_prefix + "_a.xyzrgb");
        write_xyzrgb(pair.second, pair_prefix + "_b.xyzrgb");
        out << "wrote scan pair " << pair_prefix << "_a/_b.xyzrgb (" << pair.first.size()
            << " / " << pair.second.size() << " points)\n";
      }
      return 0;
    };
  });

  // register
  auto* reg_cmd = app.add_subcommand("register", "ICP-align a source scan onto a target scan");
  std::string reg_source, reg_target, reg_out;
  IcpParams icp;
  auto bind_icp = [&icp](CLI::App* cmd) {
    cmd->add_option("--max-iter", icp.max_iterations, "ICP iteration cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--tol", icp.convergence_tol, "ICP convergence tolerance on RMSE change (m)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--max-corr", icp.max_correspondence_dist, "Correspondence distance gate (m)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };
  reg_cmd->add_option("--source", reg_source, "Scan to move")->required()->check(CLI::ExistingFile);
  reg_cmd->add_option("--target", reg_target, "Reference scan")->required()->check(CLI::ExistingFile);
  reg_cmd->add_option("--out", reg_out, "Merged output cloud")->required();
  bind_icp(reg_cmd);
  reg_cmd->callback([&] {
    action = [&] {
      const auto source = read_xyzrgb(reg_source);
      const auto target = read_xyzrgb(reg_target);
      const auto result = icp_register(source, target, icp);
      const std::vector<PointCloud> parts{target, apply_transform(source, result.transform)};
      write_xyzrgb(merge(parts), reg_out);
      char line[128];
      std::snprintf(line, sizeof line, "final_rmse %.6f\niterations %zu\n", result.final_rmse,
                    result.iterations_used);
      out << line;
      const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, " ", "\n", "  ");
      out << "rotation\n" << result.transform.rotation.format(fmt) << "\ntranslation\n"
          << result.transform.translation.transpose().format(fmt) << '\n';
      return 0;
    };
  });

  // segment
  auto* seg_cmd = app.add_subcommand("segment", "Split a cloud into ground and non-ground");
  std::string seg_in, seg_prefix;
  GroundFlags seg_ground;
  seg_cmd->add_option("--in", seg_in, "Input cloud")->required()->check(CLI::ExistingFile);
  seg_cmd->add_option("--out-prefix", seg_prefix, "Writes PREFIX_ground / PREFIX_nonground")
      ->required();
  seg_ground.bind(seg_cmd);
  seg_cmd->callback([&] {
    action = [&] {
      const auto cloud = read_xyzrgb(seg_in);
      const auto labeling = segment_ground(cloud, seg_ground.params);
      write_xyzrgb(cloud.select(labeling.ground_indices), with_suffix(seg_prefix, "ground"));
      write_xyzrgb(cloud.select(labeling.nonground_indices), with_suffix(seg_prefix, "nonground"));
      out << "ground " << labeling.ground_indices.size() << "\nnonground "
          << labeling.nonground_indices.size() << '\n';
      return 0;
    };
  });

  // classify
  auto* cls_cmd = app.add_subcommand("classify", "KNN-classify non-ground points");
  std::string cls_in, cls_train, cls_prefix;
  GroundFlags cls_ground;
  ClassifyFlags cls_flags;
  cls_cmd->add_option("--in", cls_in, "Input cloud (ground is filtered first)")
      ->required()
      ->check(CLI::ExistingFile);
  cls_cmd->add_option("--train", cls_train, "Labeled training file (7th column = class id)")
      ->required()
      ->check(CLI::ExistingFile);
  cls_cmd->add_option("--out-prefix", cls_prefix, "Writes PREFIX_building / _tree / _lamppost")
      ->required();
  cls_flags.bind(cls_cmd);
  cls_ground.bind(cls_cmd);
  cls_cmd->callback([&] {
    action = [&] {
      const auto cloud = read_xyzrgb(cls_in);
      const auto ground = segment_ground(cloud, cls_ground.params);
      const auto model = train_knn_model(read_labeled_xyzrgb(cls_train), cls_flags.k,
                                         cls_flags.features, cls_ground.params);
      const auto features = compute_features(cloud, ground, cls_flags.features);
      const PointCloud nonground = cloud.select(ground.nonground_indices);
      std::vector<ClassLabel> labels;
      for (std::size_t i : ground.nonground_indices) labels.push_back(model.classify(features[i]));
      labels = refine_buildings_rgb(nonground, labels, cls_flags.vegetation);
      for (ClassLabel c : kAllClasses) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
          if (labels[i] == c) idx.push_back(i);
        write_xyzrgb(nonground.select(idx), with_suffix(cls_prefix, std::string(to_string(c))));
        out << to_string(c) << ' ' << idx.size() << '\n';
      }
      return 0;
    };
  });

  // analyze
  auto* an_cmd = app.add_subcommand("analyze", "Slice-wise deformation analysis of a wall");
  std::string an_in, an_report;
  std::uint64_t an_seed = 0;
  AnalysisFlags an_flags;
  an_cmd->add_option("--in", an_in, "Building points")->required()->check(CLI::ExistingFile);
  an_cmd->add_option("--report", an_report, "Report directory")->required();
  an_cmd->add_option("--seed", an_seed, "RANSAC seed")->required();
  an_flags.bind(an_cmd);
  an_cmd->callback([&] {
    action = [&] {
      AnalysisConfig config = an_flags.resolve();
      config.seed = an_seed;
      const auto report = analyze_wall(read_xyzrgb(an_in), config);
      write_report(report, an_report);
      print_report(report, out);
      return report_exit_code(report);
    };
  });

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage end to end");
  PipelineConfig pipe;
  std::vector<std::string> pipe_inputs;
  std::string pipe_train, pipe_report;
  std::uint64_t pipe_seed = 0;
  GroundFlags pipe_ground;
  ClassifyFlags pipe_cls;
  AnalysisFlags pipe_an;
  pipe_cmd->add_option("--in", pipe_inputs, "Input scan(s); extra scans are ICP-registered")
      ->required()
      ->check(CLI::ExistingFile);
  pipe_cmd->add_option("--train", pipe_train, "Labeled training file")
      ->required()
      ->check(CLI::ExistingFile);
  pipe_cmd->add_option("--report", pipe_report, "Output directory")->required();
  pipe_cmd->add_option("--seed", pipe_seed, "Seed for randomized stages")->required();
  pipe_cmd->add_option("--config", "Flat key = value file with any of these flags");
  pipe_cmd->add_option("--manifest", "Re-run the configuration recorded in a manifest.json");
  pipe_cmd->add_option("--voxel", pipe.voxel.cell_size, "Voxel size for downsampling (m)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipe_cmd->add_option("--sor-k", pipe.outliers.neighbor_count, "Outlier-removal neighbor count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipe_cmd->add_option("--sor-mult", pipe.outliers.std_multiplier,
                       "Outlier-removal standard-deviation multiplier")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bind_icp(pipe_cmd);
  pipe_ground.bind(pipe_cmd);
  pipe_cls.bind(pipe_cmd);
  pipe_an.bind(pipe_cmd);
  pipe_cmd->callback([&] {
    action = [&] {
      pipe.inputs.assign(pipe_inputs.begin(), pipe_inputs.end());
      pipe.training = pipe_train;
      pipe.report_dir = pipe_report;
      pipe.seed = pipe_seed;
      pipe.icp = icp;
      pipe.ground = pipe_ground.params;
      pipe.k = pipe_cls.k;
      pipe.features = pipe_cls.features;
      pipe.vegetation = pipe_cls.vegetation;
      pipe.analysis = pipe_an.resolve();
      const auto result = run_pipeline(pipe);
      print_report(result.report, out);
      return result.manifest.exit_code;
    };
  });

  for (auto* cmd : {synth_cmd, reg_cmd, seg_cmd, cls_cmd, an_cmd, pipe_cmd})
    cmd->get_formatter()->column_width(40);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    return action ? action() : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace tlsdeform::cli
