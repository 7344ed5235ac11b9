#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "forest/clustering/block_merge.hpp"
#include "forest/clustering/candidates.hpp"
#include "forest/eval/report.hpp"
#include "forest/features/augment.hpp"
#include "forest/features/treemix.hpp"
#include "forest/inventory/inventory.hpp"

namespace forest {

struct RegionGrowConfig {
  double distance_threshold = 0.6;  // three voxel edges
  std::size_t min_cluster_size = 20;
};

/// Every tunable of the pipeline in one document. Defaults follow the
/// values documented per module; a JSON config file overrides them and CLI
/// flags override the file.
struct PipelineConfig {
  std::uint64_t seed = 1;
  int threads = 1;

  double voxel_edge = 0.2;
  double cylinder_radius = 8.0;

  AugmentConfig augment;
  TreeMixConfig treemix;
  RegionGrowConfig region_grow;
  MeanShiftParams mean_shift;
  double nms_iou_threshold = 0.3;
  BlockLayout blocks{.spacing = 6.0, .radius = 8.0};
  double fuse_threshold = 0.5;
  RetrievalConfig retrieval;
  double eval_iou_min = 0.5;

  /// Throws ConfigError when any value breaks a module precondition.
  void validate() const;

  /// Canonical JSON document (stable key order).
  std::string to_json_string() const;

  /// FNV-1a hash of the canonical document, hex-encoded.
  std::string hash() const;

  /// Defaults overridden by the file's keys. Unknown keys are an error.
  static PipelineConfig load(const std::filesystem::path& path);

  static PipelineConfig from_json_string(const std::string& text);
};

}  // namespace forest
