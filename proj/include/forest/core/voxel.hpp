#pragma once

#include <cstdint>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

struct VoxelSubsampleResult {
  LabeledPointCloud cloud;
  /// original point index -> index of its voxel's representative in `cloud`
  std::vector<std::uint32_t> original_to_kept;
  /// kept point index -> original point index
  std::vector<std::uint32_t> kept_to_original;
};

/// Keeps at most one point per occupied voxel: the input point nearest the
/// voxel centroid, ties broken by lowest original index. Labels and attributes
/// travel with the kept point. The grid is anchored at the coordinate origin
/// (voxel key = floor(coord / edge)), which makes the operation idempotent.
VoxelSubsampleResult voxel_subsample(const LabeledPointCloud& cloud, double voxel_edge);

}  // namespace forest
