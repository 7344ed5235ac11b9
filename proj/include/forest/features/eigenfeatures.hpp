#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

/// Shape descriptors from the eigenvalues of the local second moment matrix.
/// With normalized eigenvalues e_i = lambda_i / sum(lambda), lambda1 >= lambda2 >= lambda3:
///   linearity  (e1-e2)/e1, planarity (e2-e3)/e1, sphericity e3/e1,
///   anisotropy (e1-e3)/e1, surface_variation e3, omnivariance (e1 e2 e3)^(1/3),
///   eigenentropy -sum(e_i ln e_i), sum = lambda1+lambda2+lambda3,
///   verticality 1 - |n_z| with n the smallest-eigenvalue direction.
struct EigenFeatureVector {
  double sum = 0.0;
  double omnivariance = 0.0;
  double eigenentropy = 0.0;
  double anisotropy = 0.0;
  double planarity = 0.0;
  double linearity = 0.0;
  double surface_variation = 0.0;
  double sphericity = 0.0;
  double verticality = 0.0;
};

extern const std::array<const char*, 9> kEigenFeatureNames;

struct Neighborhood {
  std::optional<std::size_t> k;    // k nearest neighbours (>= 3), or
  std::optional<double> radius;    // fixed search radius (> 0)
};

/// Per-point features over 3D neighborhoods. Degenerate neighborhoods
/// (< 3 points or zero covariance) yield the all-zero vector; sparse canopy
/// tops hit this case routinely, so it is not an error.
std::vector<EigenFeatureVector> eigenfeatures(std::span<const Point3> points,
                                              const Neighborhood& neighborhood);

/// Features of one explicit neighborhood (used by tests and the per-point path).
EigenFeatureVector eigenfeatures_of(std::span<const Point3> neighbors);

}  // namespace forest
