#include "forest/features/treemix.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "forest/util/rng.hpp"

namespace forest {

void TreeMixConfig::validate() const {
  if (!(overlap_threshold > 0.0) || overlap_threshold > 1.0) {
    throw ConfigError("overlap_threshold must be in (0, 1]");
  }
  if (!(overlap_voxel > 0.0)) throw ConfigError("overlap_voxel must be > 0");
  if (replace_fraction < 0.0 || replace_fraction > 1.0) {
    throw ConfigError("replace_fraction must be in [0, 1]");
  }
  insert_augment.validate();
}

namespace {

std::uint64_t voxel_key(const Point3& p, double edge) {
  auto cell = [edge](double v) {
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(v / edge)) &
                                      0x1fffffLL);
  };
  return (cell(p.x) << 42) | (cell(p.y) << 21) | cell(p.z);
}

}  // namespace

TreeMixResult treemix(const LabeledPointCloud& target_cloud, const CylinderSample& target_sample,
                      const LabeledPointCloud& source_cloud, const CylinderSample& source_sample,
                      const TreeMixConfig& config) {
  config.validate();

  LabeledPointCloud target = target_cloud.subset(target_sample.indices);
  LabeledPointCloud source = source_cloud.subset(source_sample.indices);

  // group tree points by instance
  auto instances_of = [](const LabeledPointCloud& cloud) {
    std::map<std::int32_t, std::vector<std::uint32_t>> groups;
    for (std::uint32_t i = 0; i < cloud.size(); ++i) {
      if (cloud.instance[i] >= 0) groups[cloud.instance[i]].push_back(i);
    }
    return groups;
  };
  auto target_groups = instances_of(target);
  auto source_groups = instances_of(source);

  Rng rng(config.seed);

  // choose which target trees go
  std::vector<std::int32_t> target_ids;
  for (const auto& [id, pts] : target_groups) target_ids.push_back(id);
  std::size_t n_remove =
      static_cast<std::size_t>(std::llround(config.replace_fraction * target_ids.size()));
  rng.shuffle(target_ids);
  std::vector<std::int32_t> removed(target_ids.begin(), target_ids.begin() + n_remove);
  std::sort(removed.begin(), removed.end());

  // ground anchor of each removed tree: its lowest point
  std::map<std::int32_t, Point3> anchors;
  for (std::int32_t id : removed) {
    const auto& pts = target_groups.at(id);
    Point3 lowest = target.points[pts.front()];
    for (std::uint32_t idx : pts) {
      if (target.points[idx].z < lowest.z) lowest = target.points[idx];
    }
    anchors[id] = lowest;
  }

  // survivors
  std::vector<std::uint32_t> kept;
  std::unordered_set<std::int32_t> removed_set(removed.begin(), removed.end());
  for (std::uint32_t i = 0; i < target.size(); ++i) {
    if (target.instance[i] < 0 || !removed_set.count(target.instance[i])) kept.push_back(i);
  }

  TreeMixResult result;
  result.cloud = target.subset(kept);

  // occupied voxels of the tree points currently in the sample; fresh ids
  // start above everything the target sample ever used
  std::unordered_set<std::uint64_t> tree_voxels;
  std::int32_t next_id = 0;
  for (const auto& [id, pts] : target_groups) next_id = std::max(next_id, id + 1);
  for (std::uint32_t i = 0; i < result.cloud.size(); ++i) {
    if (result.cloud.instance[i] >= 0) {
      tree_voxels.insert(voxel_key(result.cloud.points[i], config.overlap_voxel));
    }
  }

  std::vector<std::int32_t> source_ids;
  for (const auto& [id, pts] : source_groups) source_ids.push_back(id);

  for (std::int32_t removed_id : removed) {
    if (source_ids.empty()) break;  // nothing to transplant; gaps remain
    TreeMixAttempt attempt;
    attempt.removed_instance = removed_id;
    attempt.source_instance = source_ids[rng.below(source_ids.size())];
    const auto& src_indices = source_groups.at(attempt.source_instance);

    std::vector<Point3> pts;
    pts.reserve(src_indices.size());
    for (std::uint32_t idx : src_indices) pts.push_back(source.points[idx]);

    AugmentConfig aug = config.insert_augment;
    aug.seed = rng.next_u64();
    AugmentResult augmented = augment(pts, aug);

    // lowest point of the augmented tree lands on the removed tree's anchor
    Point3 lowest = augmented.points.front();
    for (const Point3& p : augmented.points) {
      if (p.z < lowest.z) lowest = p;
    }
    Point3 shift = anchors.at(removed_id) - lowest;
    for (Point3& p : augmented.points) p = p + shift;

    std::unordered_set<std::uint64_t> inserted_voxels;
    for (const Point3& p : augmented.points) {
      inserted_voxels.insert(voxel_key(p, config.overlap_voxel));
    }
    std::size_t shared = 0;
    for (std::uint64_t v : inserted_voxels) shared += tree_voxels.count(v);
    attempt.overlap = static_cast<double>(shared) / static_cast<double>(inserted_voxels.size());
    attempt.points = augmented.points;
    attempt.accepted = attempt.overlap < config.overlap_threshold;

    if (attempt.accepted) {
      attempt.new_instance = next_id++;
      for (std::size_t k = 0; k < augmented.points.size(); ++k) {
        std::uint32_t src_idx = src_indices[augmented.kept[k]];
        result.cloud.points.push_back(augmented.points[k]);
        result.cloud.semantic.push_back(source.semantic[src_idx]);
        result.cloud.instance.push_back(attempt.new_instance);
        // attribute columns follow the target schema, filled from the source
        // where available
        if (!result.cloud.intensity.empty()) {
          result.cloud.intensity.push_back(source.intensity.empty() ? 0.0f
                                                                    : source.intensity[src_idx]);
        }
        if (!result.cloud.return_number.empty()) {
          result.cloud.return_number.push_back(
              source.return_number.empty() ? 1 : source.return_number[src_idx]);
        }
        if (!result.cloud.scan_angle_rank.empty()) {
          result.cloud.scan_angle_rank.push_back(
              source.scan_angle_rank.empty() ? 0 : source.scan_angle_rank[src_idx]);
        }
        for (std::size_t f = 0; f < result.cloud.extra_names.size(); ++f) {
          result.cloud.extra.push_back(0.0);
        }
      }
      for (std::uint64_t v : inserted_voxels) tree_voxels.insert(v);
      ++result.inserted;
    } else {
      ++result.rejected;
    }
    result.attempts.push_back(std::move(attempt));
  }

  result.cloud.validate();
  return result;
}

}  // namespace forest
