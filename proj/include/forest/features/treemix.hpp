#pragma once

#include <cstdint>
#include <vector>

#include "forest/core/types.hpp"
#include "forest/features/augment.hpp"
#include "forest/features/sampling.hpp"

namespace forest {

struct TreeMixConfig {
  double overlap_threshold = 0.10;  // accept iff overlap fraction < threshold
  double overlap_voxel = 0.2;      // m, voxel size of the overlap check
  double replace_fraction = 0.5;   // fraction of target tree instances replaced
  std::uint64_t seed = 0;
  /// augmentation of each inserted tree; dropout and elastic stay off here
  AugmentConfig insert_augment{
      .jitter_sigma = 0.01,
      .dropout_coin = 0.0,
      .elastic_magnitude = 0.0,
  };

  void validate() const;
};

struct TreeMixAttempt {
  std::int32_t removed_instance = kNoInstance;   // target instance this replaces
  std::int32_t source_instance = kNoInstance;
  std::int32_t new_instance = kNoInstance;       // assigned id when accepted
  std::vector<Point3> points;                    // transformed candidate points
  double overlap = 0.0;
  bool accepted = false;
};

struct TreeMixResult {
  LabeledPointCloud cloud;
  std::vector<TreeMixAttempt> attempts;
  std::size_t inserted = 0;
  std::size_t rejected = 0;  // rejections leave a gap where the tree was removed
};

/// Replaces a seed-chosen fraction of the target sample's tree instances with
/// augmented instances from the source sample. An inserted tree is translated
/// so its lowest point lands on the removed tree's ground position and is
/// accepted only if its voxel-overlap fraction with the tree points already
/// in the sample stays below the threshold. Inserted points receive fresh
/// instance IDs.
TreeMixResult treemix(const LabeledPointCloud& target_cloud, const CylinderSample& target_sample,
                      const LabeledPointCloud& source_cloud, const CylinderSample& source_sample,
                      const TreeMixConfig& config);

}  // namespace forest
