#pragma once

#include <optional>
#include <vector>

#include "forest/clustering/embedding.hpp"
#include "forest/config.hpp"
#include "forest/core/types.hpp"

namespace forest {

struct ClusterPipelineResult {
  LabeledPointCloud cloud;       // full resolution, instance labeled
  std::size_t n_instances = 0;
  std::size_t n_blocks = 0;
  std::size_t subsampled_points = 0;
};

/// The full instance-segmentation post-processing chain:
/// voxel subsample -> per-block candidate generation (region growing on
/// offset-shifted points plus mean shift on the 5D embeddings) -> scoring ->
/// greedy NMS -> cross-block merging -> nearest-neighbour reinsertion at the
/// original resolution.
///
/// `annotation` is parallel to the tree points of `cloud`. When
/// `external_scores` is given the plot is processed as a single block and the
/// scores attach to the candidate list in generation order (region-growing
/// candidates first, then mean-shift candidates).
ClusterPipelineResult cluster_pipeline(const LabeledPointCloud& cloud,
                                       const EmbeddingAnnotation& annotation,
                                       const PipelineConfig& config,
                                       const std::vector<double>* external_scores = nullptr);

}  // namespace forest
