#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

struct HdbscanParams {
  std::size_t min_cluster_size = 10;
  std::size_t min_samples = 5;

  void validate() const;
};

struct MstEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double weight = 0.0;
};

struct HdbscanResult {
  std::vector<std::int32_t> labels;  // cluster ids 0..k-1, noise = -1
  std::size_t n_clusters = 0;
  std::int32_t dominant = -1;        // largest cluster, ties broken by lowest id
  std::vector<MstEdge> mst;          // mutual-reachability MST, ascending weight
  bool fallback_single = false;      // n < min_cluster_size: everything is one cluster
};

/// Density-based clustering: mutual-reachability distances, minimum spanning
/// tree, condensed cluster tree, excess-of-mass selection. The root cluster
/// is allowed to win selection, so a uniformly dense input comes back as one
/// cluster rather than noise; points whose fall-out density level sits more
/// than a factor 10 below the root's median member level stay noise (far
/// outliers must not ride along with a single-cluster result). Inputs smaller
/// than min_cluster_size are returned as a single cluster (retrieval must
/// never lose a whole tree).
HdbscanResult hdbscan(std::span<const double> vectors, int dim, const HdbscanParams& params);

HdbscanResult hdbscan(std::span<const Point3> points, const HdbscanParams& params);

/// Indices of the dominant cluster (ascending).
std::vector<std::uint32_t> hdbscan_dominant_indices(const HdbscanResult& result);

/// Core distance of every point: distance to its min_samples-th nearest
/// neighbor, the point itself counted first.
std::vector<double> hdbscan_core_distances(std::span<const double> vectors, int dim,
                                           std::size_t min_samples);

}  // namespace forest
