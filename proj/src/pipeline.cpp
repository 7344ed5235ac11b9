#include "forest/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "forest/clustering/block_merge.hpp"
#include "forest/clustering/candidates.hpp"
#include "forest/core/voxel.hpp"

namespace forest {

namespace {

struct SubsampledAnnotation {
  std::vector<std::uint32_t> tree_indices;  // into the subsampled cloud
  std::vector<Point3> points;
  std::vector<Point3> offsets;
  std::vector<double> embeddings;  // row-major 5D
};

SubsampledAnnotation select_tree_annotation(const LabeledPointCloud& original,
                                            const EmbeddingAnnotation& annotation,
                                            const VoxelSubsampleResult& subsampled) {
  // annotation rows are parallel to the original cloud's tree points
  std::vector<std::int64_t> row_of_original(original.size(), -1);
  std::int64_t row = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (is_tree_class(original.semantic[i])) row_of_original[i] = row++;
  }
  if (static_cast<std::size_t>(row) != annotation.size()) {
    throw InputError("embedding annotation does not match the cloud's tree point count");
  }

  SubsampledAnnotation out;
  for (std::uint32_t k = 0; k < subsampled.cloud.size(); ++k) {
    std::uint32_t orig = subsampled.kept_to_original[k];
    std::int64_t r = row_of_original[orig];
    if (r < 0) continue;
    out.tree_indices.push_back(k);
    out.points.push_back(subsampled.cloud.points[k]);
    out.offsets.push_back(annotation.offsets[r]);
    for (double v : annotation.embeddings[r]) out.embeddings.push_back(v);
  }
  return out;
}

/// Candidates for one set of tree points: both redundant routes, merged.
std::vector<InstanceCandidate> block_candidates(std::span<const Point3> points,
                                                std::span<const Point3> offsets,
                                                std::span<const double> embeddings,
                                                const PipelineConfig& config) {
  std::vector<InstanceCandidate> candidates =
      region_grow_shifted(points, offsets, config.region_grow.distance_threshold,
                          config.region_grow.min_cluster_size);
  MeanShiftResult ms = mean_shift(embeddings, 5, config.mean_shift);
  for (auto& cand : ms.candidates) {
    if (cand.indices.size() >= config.region_grow.min_cluster_size) {
      candidates.push_back(std::move(cand));
    }
  }
  return candidates;
}

}  // namespace

ClusterPipelineResult cluster_pipeline(const LabeledPointCloud& cloud,
                                       const EmbeddingAnnotation& annotation,
                                       const PipelineConfig& config,
                                       const std::vector<double>* external_scores) {
  config.validate();
  cloud.validate();
  annotation.validate();

  VoxelSubsampleResult subsampled = voxel_subsample(cloud, config.voxel_edge);
  SubsampledAnnotation tree = select_tree_annotation(cloud, annotation, subsampled);

  ClusterPipelineResult result;
  result.subsampled_points = subsampled.cloud.size();

  std::vector<BlockLabeling> blocks;
  if (external_scores != nullptr || tree.points.empty()) {
    // single block over the whole plot
    if (!tree.points.empty()) {
      auto candidates = block_candidates(tree.points, tree.offsets, tree.embeddings, config);
      LabeledPointCloud tree_cloud = subsampled.cloud.subset(tree.tree_indices);
      auto scored = score_candidates(std::move(candidates), tree_cloud, external_scores);
      NmsResult nms = greedy_nms(scored, tree.points.size(), config.nms_iou_threshold);
      BlockLabeling bl;
      bl.point_indices = tree.tree_indices;
      bl.instances = nms.labels;
      blocks.push_back(std::move(bl));
    }
  } else {
    Point2 lo{tree.points[0].x, tree.points[0].y}, hi = lo;
    for (const Point3& p : tree.points) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    BlockLayout layout = config.blocks;
    layout.origin = lo;
    std::vector<Point2> centers = layout.centers(hi - lo);

    blocks.resize(centers.size());
    auto process_block = [&](std::size_t bi) {
      const Point2& center = centers[bi];
      std::vector<std::uint32_t> local;  // rows of `tree`
      const double r2 = layout.radius * layout.radius;
      for (std::uint32_t row = 0; row < tree.points.size(); ++row) {
        double dx = tree.points[row].x - center.x, dy = tree.points[row].y - center.y;
        if (dx * dx + dy * dy <= r2) local.push_back(row);
      }
      if (local.empty()) return;
      std::vector<Point3> pts, offs;
      std::vector<double> embs;
      LabeledPointCloud local_cloud;
      pts.reserve(local.size());
      for (std::uint32_t row : local) {
        pts.push_back(tree.points[row]);
        offs.push_back(tree.offsets[row]);
        for (int d = 0; d < 5; ++d) embs.push_back(tree.embeddings[row * 5 + d]);
        std::uint32_t sub_idx = tree.tree_indices[row];
        local_cloud.points.push_back(subsampled.cloud.points[sub_idx]);
        local_cloud.semantic.push_back(subsampled.cloud.semantic[sub_idx]);
        local_cloud.instance.push_back(kNoInstance);
      }
      auto candidates = block_candidates(pts, offs, embs, config);
      auto scored = score_candidates(std::move(candidates), local_cloud, nullptr);
      NmsResult nms = greedy_nms(scored, local.size(), config.nms_iou_threshold);
      BlockLabeling bl;
      bl.point_indices.reserve(local.size());
      for (std::uint32_t row : local) bl.point_indices.push_back(tree.tree_indices[row]);
      bl.instances = nms.labels;
      blocks[bi] = std::move(bl);
    };

    const int n_threads =
        std::max(1, std::min(config.threads, static_cast<int>(centers.size())));
    if (n_threads == 1) {
      for (std::size_t bi = 0; bi < centers.size(); ++bi) process_block(bi);
    } else {
      std::vector<std::thread> pool;
      std::size_t chunk = (centers.size() + n_threads - 1) / n_threads;
      for (int t = 0; t < n_threads; ++t) {
        std::size_t begin = t * chunk, end = std::min(centers.size(), begin + chunk);
        if (begin < end) {
          pool.emplace_back([&, begin, end] {
            for (std::size_t bi = begin; bi < end; ++bi) process_block(bi);
          });
        }
      }
      for (auto& th : pool) th.join();
    }
    std::erase_if(blocks, [](const BlockLabeling& b) { return b.point_indices.empty(); });
  }
  result.n_blocks = blocks.size();

  MergeResult merged = merge_blocks(blocks, subsampled.cloud.size(), config.fuse_threshold);
  result.n_instances = merged.n_instances;

  LabeledPointCloud labeled = subsampled.cloud;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    labeled.instance[i] = is_tree_class(labeled.semantic[i]) ? merged.labels[i] : kNoInstance;
  }
  labeled.validate();

  result.cloud = reinsert_full_resolution(labeled, cloud);
  return result;
}

}  // namespace forest
