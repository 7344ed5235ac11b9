#include "forest/core/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace forest {

namespace {

struct VoxelKey {
  std::int64_t ix, iy, iz;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t v : {static_cast<std::uint64_t>(k.ix), static_cast<std::uint64_t>(k.iy),
                            static_cast<std::uint64_t>(k.iz)}) {
      h ^= v;
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

std::int64_t cell(double v, double edge) {
  return static_cast<std::int64_t>(std::floor(v / edge));
}

}  // namespace

VoxelSubsampleResult voxel_subsample(const LabeledPointCloud& cloud, double voxel_edge) {
  if (!(voxel_edge > 0.0)) throw ConfigError("voxel edge must be > 0");

  const std::size_t n = cloud.size();
  struct Best {
    std::uint32_t index;
    double dist2;
  };
  std::unordered_map<VoxelKey, Best, VoxelKeyHash> best;
  best.reserve(n);
  std::vector<VoxelKey> keys(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Point3& p = cloud.points[i];
    VoxelKey key{cell(p.x, voxel_edge), cell(p.y, voxel_edge), cell(p.z, voxel_edge)};
    keys[i] = key;
    Point3 centroid{(key.ix + 0.5) * voxel_edge, (key.iy + 0.5) * voxel_edge,
                    (key.iz + 0.5) * voxel_edge};
    double d2 = (p - centroid).norm2();
    auto [it, inserted] = best.try_emplace(key, Best{static_cast<std::uint32_t>(i), d2});
    if (!inserted && d2 < it->second.dist2) {
      it->second = Best{static_cast<std::uint32_t>(i), d2};
    }
  }

  // representatives in original index order, for reproducible output
  VoxelSubsampleResult result;
  result.kept_to_original.reserve(best.size());
  for (const auto& [key, b] : best) result.kept_to_original.push_back(b.index);
  std::sort(result.kept_to_original.begin(), result.kept_to_original.end());

  std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash> kept_index;
  kept_index.reserve(best.size());
  for (std::uint32_t k = 0; k < result.kept_to_original.size(); ++k) {
    kept_index[keys[result.kept_to_original[k]]] = k;
  }
  result.original_to_kept.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.original_to_kept[i] = kept_index.at(keys[i]);

  result.cloud = cloud.subset(result.kept_to_original);
  return result;
}

}  // namespace forest
