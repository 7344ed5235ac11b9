#include "forest/clustering/block_merge.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "forest/core/spatial_index.hpp"

namespace forest {

void BlockLayout::validate() const {
  if (!(radius > 0.0)) throw ConfigError("block radius must be > 0");
  if (!(spacing > 0.0)) throw ConfigError("block spacing must be > 0");
  if (!(spacing < 2.0 * radius)) {
    throw ConfigError("block spacing must be < 2 * radius so that blocks overlap");
  }
}

std::vector<Point2> BlockLayout::centers(Point2 extent) const {
  validate();
  std::vector<Point2> out;
  std::size_t nx = static_cast<std::size_t>(std::floor(extent.x / spacing)) + 1;
  std::size_t ny = static_cast<std::size_t>(std::floor(extent.y / spacing)) + 1;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      out.push_back({origin.x + static_cast<double>(i) * spacing,
                     origin.y + static_cast<double>(j) * spacing});
    }
  }
  return out;
}

MergeResult merge_blocks(std::span<const BlockLabeling> blocks, std::size_t cloud_size,
                         double fuse_threshold) {
  if (!(fuse_threshold > 0.0) || fuse_threshold > 1.0) {
    throw ConfigError("fuse_threshold must be in (0, 1]");
  }

  // globalize: (block, local id) -> global id, point sets per global id
  struct Instance {
    std::vector<std::uint32_t> points;  // ascending
    std::size_t block = 0;
  };
  std::vector<Instance> instances;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const BlockLabeling& block = blocks[b];
    if (block.point_indices.size() != block.instances.size()) {
      throw InputError("block labeling arrays are not parallel");
    }
    std::map<std::int32_t, std::size_t> local_to_global;
    for (std::size_t i = 0; i < block.point_indices.size(); ++i) {
      std::int32_t local = block.instances[i];
      if (local < 0) continue;
      auto [it, inserted] = local_to_global.try_emplace(local, instances.size());
      if (inserted) instances.push_back({{}, b});
      instances[it->second].points.push_back(block.point_indices[i]);
    }
  }
  for (auto& inst : instances) std::sort(inst.points.begin(), inst.points.end());

  // cross-block pairs that share points
  struct FuseCandidate {
    double ratio;
    std::uint32_t a, b;
  };
  std::vector<FuseCandidate> fuse;
  {
    // point -> instances that claim it
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> claims;
    for (std::uint32_t gi = 0; gi < instances.size(); ++gi) {
      for (std::uint32_t p : instances[gi].points) claims[p].push_back(gi);
    }
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> shared;
    for (const auto& [p, owners] : claims) {
      for (std::size_t i = 0; i < owners.size(); ++i) {
        for (std::size_t j = i + 1; j < owners.size(); ++j) {
          auto key = std::minmax(owners[i], owners[j]);
          ++shared[{key.first, key.second}];
        }
      }
    }
    for (const auto& [pair, count] : shared) {
      if (instances[pair.first].block == instances[pair.second].block) continue;
      double smaller = static_cast<double>(
          std::min(instances[pair.first].points.size(), instances[pair.second].points.size()));
      fuse.push_back({static_cast<double>(count) / smaller, pair.first, pair.second});
    }
  }
  std::sort(fuse.begin(), fuse.end(), [](const FuseCandidate& x, const FuseCandidate& y) {
    if (x.ratio != y.ratio) return x.ratio > y.ratio;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  std::vector<std::uint32_t> uf(instances.size());
  std::iota(uf.begin(), uf.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (uf[x] != x) {
      uf[x] = uf[uf[x]];
      x = uf[x];
    }
    return x;
  };
  MergeResult result;
  for (const FuseCandidate& c : fuse) {
    if (c.ratio < fuse_threshold) break;
    std::uint32_t ra = find(c.a), rb = find(c.b);
    if (ra == rb) continue;
    uf[std::max(ra, rb)] = std::min(ra, rb);  // keep the lowest id as root
    ++result.fused_pairs;
  }

  // final labeling: fused groups renumbered 0..k-1 by their smallest point
  // index, so the labeling does not depend on block order
  result.labels.assign(cloud_size, kNoInstance);
  std::unordered_map<std::uint32_t, std::uint32_t> root_first_point;
  for (std::uint32_t gi = 0; gi < instances.size(); ++gi) {
    if (instances[gi].points.empty()) continue;
    std::uint32_t root = find(gi);
    auto [it, inserted] = root_first_point.try_emplace(root, instances[gi].points.front());
    if (!inserted) it->second = std::min(it->second, instances[gi].points.front());
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> roots(root_first_point.begin(),
                                                             root_first_point.end());
  std::sort(roots.begin(), roots.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<std::int32_t> root_label(instances.size(), -1);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    root_label[roots[i].first] = static_cast<std::int32_t>(i);
  }
  for (std::uint32_t gi = 0; gi < instances.size(); ++gi) {
    if (instances[gi].points.empty()) continue;
    std::int32_t label = root_label[find(gi)];
    for (std::uint32_t p : instances[gi].points) {
      // conflicting claims resolve to the lowest label for determinism
      if (result.labels[p] == kNoInstance || label < result.labels[p]) {
        result.labels[p] = label;
      }
    }
  }
  result.n_instances = roots.size();
  return result;
}

LabeledPointCloud reinsert_full_resolution(const LabeledPointCloud& subsampled,
                                           const LabeledPointCloud& original) {
  if (subsampled.empty()) {
    throw InputError("reinsert_full_resolution: subsampled cloud is empty");
  }
  SpatialIndex index = SpatialIndex::from_points(subsampled.points, 3);
  LabeledPointCloud out = original;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const Point3& p = original.points[i];
    const double q[3] = {p.x, p.y, p.z};
    std::uint32_t nn = index.nearest(q);
    out.semantic[i] = subsampled.semantic[nn];
    out.instance[i] = subsampled.instance[nn];
  }
  out.validate();
  return out;
}

}  // namespace forest
