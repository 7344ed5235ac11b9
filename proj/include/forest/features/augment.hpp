#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

struct AugmentConfig {
  double jitter_sigma = 0.01;              // m, additive Gaussian noise
  double rotation_max_angle = 6.283185307179586;  // rad, rotation uniform in [0, max)
  double scale_low = 0.9;                  // anisotropic scale factor range
  double scale_high = 1.1;
  double reflection_probability = 0.5;     // mirror y about the sample center
  double dropout_coin = 0.5;               // probability that dropout happens at all
  double dropout_fraction = 0.4;           // fraction of points removed when it does
  double elastic_grid = 1.0;               // m, displacement lattice spacing
  double elastic_magnitude = 0.0;          // m, sigma of the lattice noise (0 = off)
  std::uint64_t seed = 0;

  void validate() const;
};

struct AugmentResult {
  std::vector<Point3> points;
  std::vector<std::uint32_t> kept;  // surviving input indices (dropout bookkeeping)
  double rotation_angle = 0.0;
  Point3 scale{1.0, 1.0, 1.0};
  bool reflected = false;
  bool dropout_applied = false;
};

/// Applies the training-time augmentation chain in a fixed order:
/// dropout -> jitter -> rotation (about the vertical axis through `center`)
/// -> anisotropic scaling -> y-reflection -> elastic deformation.
/// Identical seeds give bit-identical output. When `center` is not given, the
/// xy centroid of the input sample is used.
AugmentResult augment(std::span<const Point3> points, const AugmentConfig& config,
                      std::optional<Point2> center = std::nullopt);

}  // namespace forest
