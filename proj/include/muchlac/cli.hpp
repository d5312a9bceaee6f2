#pragma once

// Subcommand front end shared by the `muchlac` executable and the tests.
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "muchlac/adaboost.hpp"
#include "muchlac/eval.hpp"
#include "muchlac/feature_matrix.hpp"
#include "muchlac/features.hpp"
#include "muchlac/forest.hpp"
#include "muchlac/glcm.hpp"
#include "muchlac/masks.hpp"
#include "muchlac/raster.hpp"
#include "muchlac/synth.hpp"

namespace muchlac::cli {

inline constexpr const char* kVersion = "muchlac 1.0.0 (formats: MBR1 FMX1 PATCH1 MASKS1 IMP1 REPORT1, model v1)";

namespace detail {

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline const std::vector<int>& require_labels(const FeatureMatrix& x) {
  if (!x.has_labels()) throw DataError("feature matrix carries no labels");
  return x.labels;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multispectral HLAC / MUCHLAC feature extraction and detection toolkit", "muchlac"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

  // dataset build
  auto* dataset = app.add_subcommand("dataset", "Patch datasets");
  dataset->require_subcommand(1);
  auto* build = dataset->add_subcommand("build", "Cut a raster into labeled patches");
  std::string raster_path, mask_path, out_path;
  std::size_t patch_size = 16;
  build->add_option("--raster", raster_path)->required();
  build->add_option("--mask", mask_path)->required();
  build->add_option("--patch-size", patch_size)->capture_default_str();
  build->add_option("--out", out_path)->required();

  // masks dump
  auto* masks = app.add_subcommand("masks", "Mask patterns");
  masks->require_subcommand(1);
  auto* dump = masks->add_subcommand("dump", "Write the canonical mask list with orbit ids");
  std::string kind = "hlac";
  int m = 1;
  dump->add_option("--kind", kind)->check(CLI::IsMember({"hlac", "muchlac"}))->capture_default_str();
  dump->add_option("--m", m)->check(CLI::PositiveNumber)->capture_default_str();
  dump->add_option("--out", out_path, "Output file (stdout when omitted)");

  // features extract
  auto* features = app.add_subcommand("features", "Feature extraction");
  features->require_subcommand(1);
  auto* extract = features->add_subcommand("extract", "Extract a feature matrix for a patch set");
  std::string patches_path, feature = "muchlac", invariance = "d4";
  std::vector<int> distances{1, 2, 3, 4};
  std::vector<std::size_t> bands;
  std::size_t levels = 32;
  int glcm_distance = 1;
  extract->add_option("--patches", patches_path)->required();
  extract->add_option("--raster", raster_path)->required();
  extract->add_option("--feature", feature)->check(CLI::IsMember({"muchlac", "hlac", "glcm"}))->capture_default_str();
  extract->add_option("--distances", distances)->delimiter(',')->capture_default_str();
  extract->add_option("--invariance", invariance)->check(CLI::IsMember({"d4", "none"}))->capture_default_str();
  extract->add_option("--bands", bands, "0-based channel indices (default: all)")->delimiter(',');
  extract->add_option("--levels", levels)->capture_default_str();
  extract->add_option("--glcm-distance", glcm_distance)->capture_default_str();
  extract->add_option("--out", out_path)->required();

  // train
  auto* train = app.add_subcommand("train", "Train a Real AdaBoost detector");
  std::string features_path;
  std::size_t rounds = 500, bins = 16;
  double epsilon = 0.0;
  std::uint64_t seed = 7;
  train->add_option("--features", features_path)->required();
  train->add_option("--rounds", rounds)->capture_default_str();
  train->add_option("--bins", bins)->capture_default_str();
  auto* eps_opt = train->add_option("--epsilon", epsilon, "Smoothing (default 1/(2n))");
  train->add_option("--seed", seed)->capture_default_str();
  train->add_option("--out", out_path)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Stratified k-fold cross-validation");
  std::size_t folds = 5;
  double train_fraction = 1.0;
  eval->add_option("--features", features_path)->required();
  eval->add_option("--folds", folds)->capture_default_str();
  eval->add_option("--seed", seed)->capture_default_str();
  eval->add_option("--train-fraction", train_fraction)->capture_default_str();
  eval->add_option("--rounds", rounds)->capture_default_str();
  eval->add_option("--bins", bins)->capture_default_str();
  eval->add_option("--out", out_path)->required();

  // importance
  auto* importance = app.add_subcommand("importance", "Random-forest permutation importance");
  std::size_t trees = 100, max_depth = 0;
  importance->add_option("--features", features_path)->required();
  importance->add_option("--trees", trees)->capture_default_str();
  importance->add_option("--max-depth", max_depth, "0 = unlimited")->capture_default_str();
  importance->add_option("--seed", seed)->capture_default_str();
  importance->add_option("--out", out_path)->required();

  // select
  auto* select = app.add_subcommand("select", "Keep the top-k components by importance");
  std::string importance_path;
  std::size_t k = 400;
  select->add_option("--features", features_path)->required();
  select->add_option("--importance", importance_path)->required();
  select->add_option("--k", k)->capture_default_str();
  select->add_option("--out", out_path)->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic raster + label mask");
  SynthParams synth_params;
  synth->add_option("--scenario", synth_params.scenario)->capture_default_str();
  synth->add_option("--cells", synth_params.cells_x, "Cells per side")->capture_default_str();
  synth->add_option("--cell-size", synth_params.cell_size)->capture_default_str();
  synth->add_option("--positive-fraction", synth_params.positive_fraction)->capture_default_str();
  synth->add_option("--seed", synth_params.seed)->capture_default_str();
  synth->add_option("--out", out_path, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (build->parsed()) {
      const auto raster = load_raster(raster_path);
      const auto mask = load_label_mask(mask_path);
      if (mask.width != raster.width || mask.height != raster.height)
        throw DataError("label mask dimensions differ from raster");
      if (patch_size == 0 || patch_size > raster.width || patch_size > raster.height)
        throw DataError("patch size does not fit the raster");
      const auto set = build_patch_grid(raster, mask, patch_size, std::filesystem::path(raster_path).filename().string());
      auto j = patch_set_to_json(set);
      j["config"] = {{"raster", raster_path}, {"mask", mask_path}, {"patch_size", patch_size}};
      detail::write_json(out_path, j);
    } else if (dump->parsed()) {
      const auto list = enumerate_masks(kind == "hlac" ? MaskKind::hlac : MaskKind::muchlac, m);
      const auto j = masks_to_json(list, d4_orbits(list));
      if (out_path.empty()) out << j.dump(2) << '\n';
      else detail::write_json(out_path, j);
    } else if (extract->parsed()) {
      const auto raster = load_raster(raster_path);
      const auto set = patch_set_from_json(detail::read_json(patches_path));
      FeatureMatrix x;
      if (feature == "glcm") {
        GlcmConfig cfg;
        cfg.levels = levels;
        cfg.distance = glcm_distance;
        cfg.bands = bands;
        cfg.threads = threads;
        x = extract_glcm_dataset(set, raster, cfg);
      } else {
        ExtractConfig cfg;
        cfg.bands = bands;
        cfg.distances = distances;
        cfg.use_cross_channel = feature == "muchlac";
        cfg.invariance = invariance == "d4" ? Invariance::rotation_reflection : Invariance::none;
        cfg.threads = threads;
        x = extract_dataset(set, raster, cfg);
      }
      x.config["patches"] = patches_path;
      x.config["raster"] = raster_path;
      save_feature_matrix(out_path, x);
    } else if (train->parsed()) {
      const auto x = load_feature_matrix(features_path);
      AdaBoostParams p;
      p.rounds = rounds;
      p.bins = bins;
      if (*eps_opt) p.epsilon = epsilon;
      p.seed = seed;
      auto model = train_real_adaboost(x, detail::require_labels(x), p);
      model.config = {{"features", features_path}, {"feature_config", x.config}};
      detail::write_json(out_path, model_to_json(model));
    } else if (eval->parsed()) {
      const auto x = load_feature_matrix(features_path);
      CrossValidationParams p;
      p.folds = folds;
      p.seed = seed;
      p.train_fraction = train_fraction;
      p.boost.rounds = rounds;
      p.boost.bins = bins;
      p.boost.seed = seed;
      p.threads = threads;
      auto report = cross_validate(x, detail::require_labels(x), p);
      report.config["features"] = features_path;
      report.config["feature_config"] = x.config;
      detail::write_json(out_path, report_to_json(report));
    } else if (importance->parsed()) {
      const auto x = load_feature_matrix(features_path);
      ForestParams p;
      p.n_trees = trees;
      p.max_depth = max_depth;
      p.seed = seed;
      p.threads = threads;
      const auto& y = detail::require_labels(x);
      const auto forest = train_forest(x, y, p);
      auto report = oob_permutation_importance(forest, x, y, seed, threads);
      report.config["features"] = features_path;
      report.config["oob_accuracy"] = forest_oob_accuracy(forest, x, y);
      detail::write_json(out_path, importance_to_json(report));
    } else if (select->parsed()) {
      const auto x = load_feature_matrix(features_path);
      const auto report = importance_from_json(detail::read_json(importance_path));
      auto xk = select_top_k(x, report, k);
      xk.config["importance"] = importance_path;
      save_feature_matrix(out_path, xk);
    } else if (synth->parsed()) {
      synth_params.cells_y = synth_params.cells_x;
      const auto scene = synth_generate(synth_params);
      const double distance = synth_marginal_distance(scene);
      if (distance > kSynthMarginalTolerance) throw DataError("per-band marginal distance " + std::to_string(distance) + " exceeds " +
                        std::to_string(kSynthMarginalTolerance) + "; use a larger scene");
      std::filesystem::create_directories(out_path);
      const std::filesystem::path dir(out_path);
      save_raster(dir / "raster.mbr", scene.raster);
      save_raster(dir / "mask.mbr", scene.mask);
      nlohmann::ordered_json meta;
      meta["scenario"] = synth_params.scenario;
      meta["cells"] = synth_params.cells_x;
      meta["cell_size"] = synth_params.cell_size;
      meta["positive_fraction"] = synth_params.positive_fraction;
      meta["seed"] = synth_params.seed;
      meta["marginal_distance"] = distance;
      detail::write_json(dir / "synth.json", meta);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace muchlac::cli
