#pragma once

#include <cstdint>
#include <vector>

#include "forest/clustering/embedding.hpp"
#include "forest/core/types.hpp"

namespace forest {

/// Ground truth for one generated tree. Reference geometry is exact by
/// construction: stems are perfect cylinders, crowns are ring stacks whose
/// convex hull volume has a closed form.
struct SyntheticTreeTruth {
  std::int32_t instance = 0;
  Point2 location{0.0, 0.0};   // stem axis
  double ground_z = 0.0;       // terrain height at the stem
  double height = 0.0;         // m above local ground
  double crown_diameter = 0.0; // m
  double volume_all = 0.0;     // m^3, hull of all crown rings
  double volume_live = 0.0;    // m^3, hull of the live rings
  double dbh_cm = 0.0;
  std::size_t stem_slice_points = 0;  // points within +-0.5 m of breast height
  bool conifer = true;
};

struct SyntheticForestConfig {
  std::size_t n_trees = 20;
  double extent = 40.0;          // square plot edge, m
  double ground_base = 0.0;      // terrain: z = base + sx*x + sy*y
  double ground_slope_x = 0.0;
  double ground_slope_y = 0.0;
  double ground_spacing = 0.25;  // ground point grid
  double low_veg_fraction = 0.02;
  std::size_t artifact_points = 0;  // isolated points high above random trees
  /// uniform +-jitter on every coordinate; breaks the exact lattice ties
  /// (reference attributes are computed before it is applied)
  double coordinate_jitter = 0.0;
  std::uint64_t seed = 1;
};

struct SyntheticForest {
  LabeledPointCloud cloud;
  std::vector<SyntheticTreeTruth> trees;
  EmbeddingAnnotation annotation;  // perfect offsets, well-separated embeddings
};

/// Deterministic synthetic plot: sloped or flat ground grid, conifer (cone)
/// and broadleaf (ellipsoid) trees with ring-sampled stems and crowns, every
/// tree attribute known in closed form.
SyntheticForest generate_forest(const SyntheticForestConfig& config);

}  // namespace forest
