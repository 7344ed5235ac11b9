#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

struct CylinderSample {
  Point2 center{0.0, 0.0};
  double radius = 0.0;
  std::vector<std::uint32_t> indices;  // into the parent cloud
};

/// All points with (x-cx)^2 + (y-cy)^2 <= r^2, boundary inclusive.
CylinderSample extract_cylinder(const LabeledPointCloud& cloud, Point2 center, double radius);

/// Probability that a seed draw lands in each class: proportional to
/// sqrt(1/N_c) over the classes with N_c > 0 (the rarer the class, the more
/// likely its points seed a sample). Within a class, points are uniform.
std::array<double, kNumSemanticClasses> class_balance_distribution(const ClassHistogram& histogram);

/// Draws `count` seed point indices (with replacement). Throws InputError
/// when the cloud has no labeled points.
std::vector<std::uint32_t> class_balanced_seed_sampler(const LabeledPointCloud& cloud,
                                                       const ClassHistogram& histogram,
                                                       std::size_t count, std::uint64_t seed);

/// Region r is weighted proportional to sqrt(1/T_r), T_r = total labeled
/// points of the region. Returns the normalized choice distribution.
/// Throws InputError when the map is empty or all regions are empty.
std::map<std::string, double> region_weighted_sampler(
    const std::map<std::string, ClassHistogram>& region_histograms);

/// One seeded draw from the region distribution.
std::string draw_region(const std::map<std::string, double>& distribution, std::uint64_t seed);

}  // namespace forest
