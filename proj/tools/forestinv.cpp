// forestinv: batch front-end for the forest inventory pipeline.
//
// Subcommands: inventory, cluster, evaluate, subsample, augment, treemix,
// features. Every run is a pure function of (inputs, config, seed): reruns
// write byte-identical outputs, and a machine-readable manifest.json lands
// next to them.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "forest/clustering/embedding.hpp"
#include "forest/config.hpp"
#include "forest/core/ply_io.hpp"
#include "forest/core/voxel.hpp"
#include "forest/eval/report.hpp"
#include "forest/features/eigenfeatures.hpp"
#include "forest/features/sampling.hpp"
#include "forest/features/treemix.hpp"
#include "forest/inventory/inventory.hpp"
#include "forest/pipeline.hpp"
#include "forest/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitInternal = 4;

struct GlobalOptions {
  std::string config_path;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool validate_only = false;
};

forest::PipelineConfig resolve_config(const GlobalOptions& opts) {
  forest::PipelineConfig config;
  if (!opts.config_path.empty()) config = forest::PipelineConfig::load(opts.config_path);
  // flags override the file
  if (opts.seed) config.seed = *opts.seed;
  if (opts.threads) config.threads = *opts.threads;
  config.validate();
  return config;
}

fs::path prepare_output_dir(const GlobalOptions& opts) {
  fs::path dir(opts.output_dir);
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const forest::PipelineConfig& config, const json& inputs,
                    const std::vector<fs::path>& outputs, const json& extra = json::object()) {
  json output_names = json::array();  // names only, so reruns compare byte-equal
  for (const fs::path& p : outputs) output_names.push_back(p.filename().string());
  json manifest{{"command", command},
                {"version", forest::kVersion},
                {"seed", config.seed},
                {"config_hash", config.hash()},
                {"config", json::parse(config.to_json_string())},
                {"inputs", inputs},
                {"outputs", output_names}};
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << "\n";
}

forest::LabeledPointCloud read_labeled_input(const std::string& path, bool need_instances,
                                             bool need_ground) {
  forest::LabeledPointCloud cloud = forest::read_ply(path);
  if (need_instances) {
    bool any = false;
    for (auto inst : cloud.instance) any = any || inst >= 0;
    if (!any) {
      throw forest::InputError("input '" + path +
                               "' has no instance labels (property 'instance' missing or all -1)");
    }
  }
  if (need_ground) {
    bool any = false;
    for (auto c : cloud.semantic) any = any || c == forest::SemanticClass::Ground;
    if (!any) {
      throw forest::InputError("input '" + path +
                               "' has no ground points (property 'semantic' missing or no code 2)");
    }
  }
  return cloud;
}

int cmd_inventory(const GlobalOptions& opts, const std::string& input) {
  auto config = resolve_config(opts);
  auto cloud = read_labeled_input(input, true, true);
  if (opts.validate_only) return kExitOk;

  forest::PlotInventory inventory =
      forest::build_inventory(cloud, config.retrieval, config.threads);

  fs::path dir = prepare_output_dir(opts);
  fs::path csv = dir / "trees.csv";
  fs::path asc = dir / "dtm.asc";
  fs::path summary_path = dir / "summary.json";
  forest::write_tree_csv(inventory.trees, csv);
  forest::write_esri_ascii(inventory.dtm, asc);
  json summary{{"stand_density", inventory.stand_density},
               {"hull_area_m2", inventory.hull_area},
               {"dtm_coverage", inventory.dtm.coverage_fraction},
               {"dtm_cell", inventory.dtm.cell}};
  std::ofstream(summary_path, std::ios::trunc) << summary.dump(2) << "\n";

  write_manifest(dir, "inventory", config, {{"input", input}},
                 {csv, asc, summary_path},
                 {{"trees", inventory.trees.size()}});
  std::cout << "inventory: " << inventory.trees.size() << " trees, "
            << inventory.stand_density << " trees/ha\n";
  return kExitOk;
}

int cmd_cluster(const GlobalOptions& opts, const std::string& input,
                const std::string& embeddings, const std::string& scores_path) {
  auto config = resolve_config(opts);
  auto cloud = forest::read_ply(input);
  auto annotation = forest::read_embedding_ply(embeddings, cloud);

  std::optional<std::vector<double>> scores;
  if (!scores_path.empty()) {
    std::ifstream in(scores_path);
    if (!in) throw forest::InputError("cannot open scores file '" + scores_path + "'");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
      throw forest::InputError("scores file must be a JSON array of {candidate_index, score}");
    }
    std::vector<double> values(doc.size(), 0.0);
    for (const auto& item : doc) {
      std::size_t idx = item.at("candidate_index").get<std::size_t>();
      if (idx >= values.size()) {
        throw forest::InputError("candidate_index " + std::to_string(idx) + " out of range");
      }
      values[idx] = item.at("score").get<double>();
    }
    scores = std::move(values);
  }
  if (opts.validate_only) return kExitOk;

  auto result =
      forest::cluster_pipeline(cloud, annotation, config, scores ? &*scores : nullptr);

  fs::path dir = prepare_output_dir(opts);
  fs::path out_ply = dir / "clustered.ply";
  forest::write_ply(result.cloud, out_ply);
  write_manifest(dir, "cluster", config,
                 {{"input", input}, {"embeddings", embeddings}, {"scores", scores_path}},
                 {out_ply},
                 {{"instances", result.n_instances},
                  {"blocks", result.n_blocks},
                  {"subsampled_points", result.subsampled_points}});
  std::cout << "cluster: " << result.n_instances << " instances from " << result.n_blocks
            << " blocks\n";
  return kExitOk;
}

int cmd_evaluate(const GlobalOptions& opts, const std::string& pred_path,
                 const std::string& ref_path, const std::string& field_csv) {
  auto config = resolve_config(opts);
  auto pred = forest::read_ply(pred_path);
  auto ref = forest::read_ply(ref_path);
  std::optional<std::map<std::int32_t, double>> field;
  if (!field_csv.empty()) field = forest::read_field_dbh_csv(field_csv);
  if (opts.validate_only) return kExitOk;

  forest::EvaluationConfig eval_config;
  eval_config.iou_min = config.eval_iou_min;
  eval_config.retrieval = config.retrieval;
  auto report = forest::evaluate_clouds(pred, ref, field ? &*field : nullptr, eval_config,
                                        fs::path(pred_path).stem().string());

  fs::path dir = prepare_output_dir(opts);
  fs::path out = dir / "report.json";
  std::ofstream(out, std::ios::trunc) << forest::report_to_json(report);
  write_manifest(dir, "evaluate", config,
                 {{"predicted", pred_path}, {"reference", ref_path}, {"field_dbh", field_csv}},
                 {out});
  std::cout << "evaluate: F " << 100.0 * report.detection.f_score << "%, mIoU "
            << 100.0 * report.semantic.mean_iou << "%\n";
  return kExitOk;
}

int cmd_subsample(const GlobalOptions& opts, const std::string& input,
                  std::optional<double> edge_flag) {
  auto config = resolve_config(opts);
  if (edge_flag) config.voxel_edge = *edge_flag;
  config.validate();
  auto cloud = forest::read_ply(input);
  if (opts.validate_only) return kExitOk;

  auto result = forest::voxel_subsample(cloud, config.voxel_edge);
  fs::path dir = prepare_output_dir(opts);
  fs::path out = dir / "subsampled.ply";
  forest::write_ply(result.cloud, out);
  write_manifest(dir, "subsample", config, {{"input", input}}, {out},
                 {{"kept_points", result.cloud.size()},
                  {"input_points", cloud.size()},
                  {"max_density_pts_m3",
                   1.0 / (config.voxel_edge * config.voxel_edge * config.voxel_edge)}});
  std::cout << "subsample: " << cloud.size() << " -> " << result.cloud.size() << " points\n";
  return kExitOk;
}

int cmd_augment(const GlobalOptions& opts, const std::string& input) {
  auto config = resolve_config(opts);
  auto cloud = forest::read_ply(input);
  if (cloud.empty()) throw forest::InputError("augment: input cloud is empty");
  if (opts.validate_only) return kExitOk;

  forest::AugmentConfig aug = config.augment;
  aug.seed = config.seed;
  auto result = forest::augment(cloud.points, aug);
  forest::LabeledPointCloud out_cloud = cloud.subset(result.kept);
  out_cloud.points = result.points;
  out_cloud.validate();

  fs::path dir = prepare_output_dir(opts);
  fs::path out = dir / "augmented.ply";
  forest::write_ply(out_cloud, out);
  write_manifest(dir, "augment", config, {{"input", input}}, {out},
                 {{"kept_points", out_cloud.size()},
                  {"dropout_applied", result.dropout_applied},
                  {"reflected", result.reflected}});
  std::cout << "augment: " << out_cloud.size() << " points\n";
  return kExitOk;
}

int cmd_treemix(const GlobalOptions& opts, const std::string& target_path,
                const std::string& source_path) {
  auto config = resolve_config(opts);
  auto target = forest::read_ply(target_path);
  auto source = forest::read_ply(source_path);
  if (opts.validate_only) return kExitOk;

  auto whole = [](const forest::LabeledPointCloud& cloud) {
    forest::CylinderSample s;
    s.radius = 1e12;
    s.indices.resize(cloud.size());
    for (std::uint32_t i = 0; i < cloud.size(); ++i) s.indices[i] = i;
    return s;
  };
  forest::TreeMixConfig mix = config.treemix;
  mix.seed = config.seed;
  mix.insert_augment = config.augment;
  mix.insert_augment.dropout_coin = 0.0;       // TreeMix transplants whole trees
  mix.insert_augment.elastic_magnitude = 0.0;
  auto result = forest::treemix(target, whole(target), source, whole(source), mix);

  fs::path dir = prepare_output_dir(opts);
  fs::path out = dir / "mixed.ply";
  forest::write_ply(result.cloud, out);
  write_manifest(dir, "treemix", config,
                 {{"target", target_path}, {"source", source_path}}, {out},
                 {{"inserted", result.inserted}, {"rejected", result.rejected}});
  std::cout << "treemix: " << result.inserted << " inserted, " << result.rejected
            << " rejected\n";
  return kExitOk;
}

int cmd_features(const GlobalOptions& opts, const std::string& input, std::optional<std::size_t> k,
                 std::optional<double> radius) {
  auto config = resolve_config(opts);
  auto cloud = forest::read_ply(input);
  forest::Neighborhood nb;
  if (k && radius) throw forest::ConfigError("features: give either --k or --radius, not both");
  if (!k && !radius) nb.k = 10;
  if (k) nb.k = *k;
  if (radius) nb.radius = *radius;
  if (opts.validate_only) return kExitOk;

  auto features = forest::eigenfeatures(cloud.points, nb);
  fs::path dir = prepare_output_dir(opts);
  fs::path out = dir / "features.csv";
  std::ofstream csv(out, std::ios::trunc);
  csv << "x,y,z";
  for (const char* name : forest::kEigenFeatureNames) csv << ',' << name;
  csv << '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& f = features[i];
    csv << num(cloud.points[i].x) << ',' << num(cloud.points[i].y) << ','
        << num(cloud.points[i].z);
    for (double v : {f.sum, f.omnivariance, f.eigenentropy, f.anisotropy, f.planarity,
                     f.linearity, f.surface_variation, f.sphericity, f.verticality}) {
      csv << ',' << num(v);
    }
    csv << '\n';
  }
  csv.close();
  write_manifest(dir, "features", config, {{"input", input}}, {out},
                 {{"points", cloud.size()}});
  std::cout << "features: " << cloud.size() << " points\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forest inventory toolkit: segmentation post-processing and "
               "tree attribute retrieval for high-density ALS point clouds"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "JSON pipeline configuration");
  app.add_option("--output-dir", opts.output_dir, "Directory for outputs and the run manifest");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Override the config seed");
  int threads_value = 1;
  auto* threads_opt = app.add_option("--threads", threads_value, "Worker threads");
  app.add_flag("--validate-only", opts.validate_only,
               "Check config and inputs, write nothing");

  std::string input, embeddings, scores, pred, ref, field_csv, target, source;
  std::optional<double> voxel_edge_flag, radius_flag;
  std::optional<std::size_t> k_flag;

  auto* inventory = app.add_subcommand("inventory", "Tree and stand attributes from a labeled cloud");
  inventory->add_option("--input", input, "Labeled PLY (semantic + instance)")->required();

  auto* cluster = app.add_subcommand("cluster", "Instance segmentation from offsets/embeddings");
  cluster->add_option("--input", input, "Semantically labeled PLY")->required();
  cluster->add_option("--embeddings", embeddings, "Sidecar PLY with offsets and embeddings")
      ->required();
  cluster->add_option("--scores", scores, "External candidate scores (JSON)");

  auto* evaluate = app.add_subcommand("evaluate", "Compare a predicted labeling to a reference");
  evaluate->add_option("--pred", pred, "Predicted PLY")->required();
  evaluate->add_option("--ref", ref, "Reference PLY")->required();
  evaluate->add_option("--field-dbh", field_csv, "Field-measured DBH CSV (tree_id,dbh_cm)");

  auto* subsample = app.add_subcommand("subsample", "Voxel grid subsampling");
  subsample->add_option("--input", input, "Input PLY")->required();
  double voxel_edge_value = 0.0;
  auto* edge_opt = subsample->add_option("--voxel-edge", voxel_edge_value, "Voxel edge, m");

  auto* augment = app.add_subcommand("augment", "Training-time augmentation of one sample");
  augment->add_option("--input", input, "Input PLY")->required();

  auto* treemix = app.add_subcommand("treemix", "Mix tree instances between two samples");
  treemix->add_option("--target", target, "Target sample PLY")->required();
  treemix->add_option("--source", source, "Source sample PLY")->required();

  auto* features = app.add_subcommand("features", "Per-point eigenfeatures");
  features->add_option("--input", input, "Input PLY")->required();
  std::size_t k_value = 0;
  double radius_value = 0.0;
  auto* k_opt = features->add_option("--k", k_value, "k nearest neighbours");
  auto* radius_opt = features->add_option("--radius", radius_value, "Search radius, m");

  // global flags may follow the subcommand
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) opts.seed = seed_value;
  if (*threads_opt) opts.threads = threads_value;
  if (*edge_opt) voxel_edge_flag = voxel_edge_value;
  if (*k_opt) k_flag = k_value;
  if (*radius_opt) radius_flag = radius_value;

  try {
    if (inventory->parsed()) return cmd_inventory(opts, input);
    if (cluster->parsed()) return cmd_cluster(opts, input, embeddings, scores);
    if (evaluate->parsed()) return cmd_evaluate(opts, pred, ref, field_csv);
    if (subsample->parsed()) return cmd_subsample(opts, input, voxel_edge_flag);
    if (augment->parsed()) return cmd_augment(opts, input);
    if (treemix->parsed()) return cmd_treemix(opts, target, source);
    if (features->parsed()) return cmd_features(opts, input, k_flag, radius_flag);
  } catch (const forest::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const forest::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const forest::InvariantError& e) {
    std::cerr << "internal invariant violation: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
