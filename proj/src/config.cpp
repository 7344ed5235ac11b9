#include "forest/config.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace forest {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(voxel_edge > 0.0)) throw ConfigError("voxel_edge must be > 0");
  if (!(cylinder_radius > 0.0)) throw ConfigError("cylinder_radius must be > 0");
  augment.validate();
  treemix.validate();
  if (!(region_grow.distance_threshold > 0.0)) {
    throw ConfigError("region_grow.distance_threshold must be > 0");
  }
  if (region_grow.min_cluster_size < 1) {
    throw ConfigError("region_grow.min_cluster_size must be >= 1");
  }
  if (!(mean_shift.bandwidth > 0.0)) throw ConfigError("mean_shift.bandwidth must be > 0");
  if (mean_shift.max_iterations < 1) throw ConfigError("mean_shift.max_iterations must be >= 1");
  if (!(mean_shift.tolerance > 0.0)) throw ConfigError("mean_shift.tolerance must be > 0");
  if (!(nms_iou_threshold > 0.0) || nms_iou_threshold > 1.0) {
    throw ConfigError("nms.iou_threshold must be in (0, 1]");
  }
  blocks.validate();
  if (!(fuse_threshold > 0.0) || fuse_threshold > 1.0) {
    throw ConfigError("blocks.fuse_threshold must be in (0, 1]");
  }
  retrieval.validate();
  if (!(eval_iou_min > 0.0) || eval_iou_min > 1.0) {
    throw ConfigError("evaluation.iou_min must be in (0, 1]");
  }
}

namespace {

json default_document(const PipelineConfig& c) {
  return json{
      {"seed", c.seed},
      {"threads", c.threads},
      {"voxel_edge", c.voxel_edge},
      {"cylinder_radius", c.cylinder_radius},
      {"augment",
       {{"jitter_sigma", c.augment.jitter_sigma},
        {"rotation_max_angle", c.augment.rotation_max_angle},
        {"scale_low", c.augment.scale_low},
        {"scale_high", c.augment.scale_high},
        {"reflection_probability", c.augment.reflection_probability},
        {"dropout_coin", c.augment.dropout_coin},
        {"dropout_fraction", c.augment.dropout_fraction},
        {"elastic_grid", c.augment.elastic_grid},
        {"elastic_magnitude", c.augment.elastic_magnitude}}},
      {"treemix",
       {{"overlap_threshold", c.treemix.overlap_threshold},
        {"overlap_voxel", c.treemix.overlap_voxel},
        {"replace_fraction", c.treemix.replace_fraction}}},
      {"region_grow",
       {{"distance_threshold", c.region_grow.distance_threshold},
        {"min_cluster_size", c.region_grow.min_cluster_size}}},
      {"mean_shift",
       {{"bandwidth", c.mean_shift.bandwidth},
        {"max_iterations", c.mean_shift.max_iterations},
        {"tolerance", c.mean_shift.tolerance}}},
      {"nms", {{"iou_threshold", c.nms_iou_threshold}}},
      {"blocks",
       {{"spacing", c.blocks.spacing},
        {"radius", c.blocks.radius},
        {"fuse_threshold", c.fuse_threshold}}},
      {"retrieval",
       {{"dtm_cell", c.retrieval.dtm_cell},
        {"crown_filter",
         {{"min_cluster_size", c.retrieval.crown_filter.min_cluster_size},
          {"min_samples", c.retrieval.crown_filter.min_samples}}},
        {"dbh_filter",
         {{"min_cluster_size", c.retrieval.dbh_filter.min_cluster_size},
          {"min_samples", c.retrieval.dbh_filter.min_samples}}},
        {"breast_height", c.retrieval.breast_height},
        {"dbh_half_window", c.retrieval.dbh_half_window},
        {"dbh_widen_step", c.retrieval.dbh_widen_step},
        {"dbh_min_points", c.retrieval.dbh_min_points},
        {"ransac_tolerance", c.retrieval.ransac_tolerance},
        {"ransac_iterations", c.retrieval.ransac_iterations}}},
      {"evaluation", {{"iou_min", c.eval_iou_min}}},
  };
}

void apply_section(PipelineConfig& c, const std::string& key, const json& value) {
  if (key == "seed") {
    c.seed = value.get<std::uint64_t>();
  } else if (key == "threads") {
    c.threads = value.get<int>();
  } else if (key == "voxel_edge") {
    c.voxel_edge = value.get<double>();
  } else if (key == "cylinder_radius") {
    c.cylinder_radius = value.get<double>();
  } else if (key == "augment") {
    for (const auto& [k, v] : value.items()) {
      if (k == "jitter_sigma") c.augment.jitter_sigma = v.get<double>();
      else if (k == "rotation_max_angle") c.augment.rotation_max_angle = v.get<double>();
      else if (k == "scale_low") c.augment.scale_low = v.get<double>();
      else if (k == "scale_high") c.augment.scale_high = v.get<double>();
      else if (k == "reflection_probability") c.augment.reflection_probability = v.get<double>();
      else if (k == "dropout_coin") c.augment.dropout_coin = v.get<double>();
      else if (k == "dropout_fraction") c.augment.dropout_fraction = v.get<double>();
      else if (k == "elastic_grid") c.augment.elastic_grid = v.get<double>();
      else if (k == "elastic_magnitude") c.augment.elastic_magnitude = v.get<double>();
      else throw ConfigError("unknown config key augment." + k);
    }
  } else if (key == "treemix") {
    for (const auto& [k, v] : value.items()) {
      if (k == "overlap_threshold") c.treemix.overlap_threshold = v.get<double>();
      else if (k == "overlap_voxel") c.treemix.overlap_voxel = v.get<double>();
      else if (k == "replace_fraction") c.treemix.replace_fraction = v.get<double>();
      else throw ConfigError("unknown config key treemix." + k);
    }
  } else if (key == "region_grow") {
    for (const auto& [k, v] : value.items()) {
      if (k == "distance_threshold") c.region_grow.distance_threshold = v.get<double>();
      else if (k == "min_cluster_size") c.region_grow.min_cluster_size = v.get<std::size_t>();
      else throw ConfigError("unknown config key region_grow." + k);
    }
  } else if (key == "mean_shift") {
    for (const auto& [k, v] : value.items()) {
      if (k == "bandwidth") c.mean_shift.bandwidth = v.get<double>();
      else if (k == "max_iterations") c.mean_shift.max_iterations = v.get<int>();
      else if (k == "tolerance") c.mean_shift.tolerance = v.get<double>();
      else throw ConfigError("unknown config key mean_shift." + k);
    }
  } else if (key == "nms") {
    for (const auto& [k, v] : value.items()) {
      if (k == "iou_threshold") c.nms_iou_threshold = v.get<double>();
      else throw ConfigError("unknown config key nms." + k);
    }
  } else if (key == "blocks") {
    for (const auto& [k, v] : value.items()) {
      if (k == "spacing") c.blocks.spacing = v.get<double>();
      else if (k == "radius") c.blocks.radius = v.get<double>();
      else if (k == "fuse_threshold") c.fuse_threshold = v.get<double>();
      else throw ConfigError("unknown config key blocks." + k);
    }
  } else if (key == "retrieval") {
    for (const auto& [k, v] : value.items()) {
      if (k == "dtm_cell") c.retrieval.dtm_cell = v.get<double>();
      else if (k == "crown_filter" || k == "dbh_filter") {
        HdbscanParams& params =
            k == "crown_filter" ? c.retrieval.crown_filter : c.retrieval.dbh_filter;
        for (const auto& [fk, fv] : v.items()) {
          if (fk == "min_cluster_size") params.min_cluster_size = fv.get<std::size_t>();
          else if (fk == "min_samples") params.min_samples = fv.get<std::size_t>();
          else throw ConfigError("unknown config key retrieval." + k + "." + fk);
        }
      } else if (k == "breast_height") c.retrieval.breast_height = v.get<double>();
      else if (k == "dbh_half_window") c.retrieval.dbh_half_window = v.get<double>();
      else if (k == "dbh_widen_step") c.retrieval.dbh_widen_step = v.get<double>();
      else if (k == "dbh_min_points") c.retrieval.dbh_min_points = v.get<std::size_t>();
      else if (k == "ransac_tolerance") c.retrieval.ransac_tolerance = v.get<double>();
      else if (k == "ransac_iterations") c.retrieval.ransac_iterations = v.get<int>();
      else throw ConfigError("unknown config key retrieval." + k);
    }
  } else if (key == "evaluation") {
    for (const auto& [k, v] : value.items()) {
      if (k == "iou_min") c.eval_iou_min = v.get<double>();
      else throw ConfigError("unknown config key evaluation." + k);
    }
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void apply_document(PipelineConfig& c, const json& doc, const std::string&) {
  for (const auto& [key, value] : doc.items()) apply_section(c, key, value);
}

}  // namespace

std::string PipelineConfig::to_json_string() const {
  return default_document(*this).dump(2) + "\n";
}

std::string PipelineConfig::hash() const {
  std::string text = to_json_string();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineConfig PipelineConfig::from_json_string(const std::string& text) {
  PipelineConfig c;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    apply_document(c, doc, "");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

}  // namespace forest
