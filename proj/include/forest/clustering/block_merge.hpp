#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forest/core/types.hpp"
#include "forest/core/voxel.hpp"

namespace forest {

/// Regular (x,y) grid of overlapping cylindrical processing blocks.
struct BlockLayout {
  Point2 origin{0.0, 0.0};
  double spacing = 6.0;
  double radius = 8.0;

  void validate() const;

  /// Block centers covering [origin, origin + extent].
  std::vector<Point2> centers(Point2 extent) const;
};

/// Instance labels produced inside one block, over a subset of the plot.
struct BlockLabeling {
  std::vector<std::uint32_t> point_indices;  // indices into the plot cloud
  std::vector<std::int32_t> instances;       // parallel; -1 = unassigned
};

struct MergeResult {
  std::vector<std::int32_t> labels;  // per plot point; -1 where no block assigned one
  std::size_t n_instances = 0;
  std::size_t fused_pairs = 0;
};

/// Globalizes per-block instance IDs and fuses instances from different
/// blocks that share points. For each cross-block pair, the overlap ratio is
/// r = |A intersect B| / min(|A|, |B|); pairs are fused greedily in
/// descending r while r >= fuse_threshold, transitively via union-find.
/// Points claimed by several unfused instances go to the fused group with
/// the lowest id. The result is invariant to block order.
MergeResult merge_blocks(std::span<const BlockLabeling> blocks, std::size_t cloud_size,
                         double fuse_threshold);

/// Labels every original point with the semantic class and instance ID of its
/// nearest (3D) point in the subsampled, labeled cloud. Throws InputError on
/// an empty subsampled cloud.
LabeledPointCloud reinsert_full_resolution(const LabeledPointCloud& subsampled,
                                           const LabeledPointCloud& original);

}  // namespace forest
