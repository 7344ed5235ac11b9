#include "forest/features/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "forest/util/rng.hpp"

namespace forest {

CylinderSample extract_cylinder(const LabeledPointCloud& cloud, Point2 center, double radius) {
  if (!(radius > 0.0)) throw ConfigError("cylinder radius must be > 0");
  CylinderSample sample;
  sample.center = center;
  sample.radius = radius;
  const double r2 = radius * radius;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    double dx = p.x - center.x, dy = p.y - center.y;
    if (dx * dx + dy * dy <= r2) sample.indices.push_back(i);
  }
  return sample;
}

std::array<double, kNumSemanticClasses> class_balance_distribution(
    const ClassHistogram& histogram) {
  std::array<double, kNumSemanticClasses> weights{};
  double total = 0.0;
  for (std::size_t c = 0; c < kNumSemanticClasses; ++c) {
    if (histogram.counts[c] > 0) {
      weights[c] = std::sqrt(1.0 / static_cast<double>(histogram.counts[c]));
      total += weights[c];
    }
  }
  if (total > 0.0) {
    for (double& w : weights) w /= total;
  }
  return weights;
}

std::vector<std::uint32_t> class_balanced_seed_sampler(const LabeledPointCloud& cloud,
                                                       const ClassHistogram& histogram,
                                                       std::size_t count, std::uint64_t seed) {
  if (histogram.total() == 0) {
    throw InputError("class-balanced sampling needs at least one labeled point");
  }

  std::array<std::vector<std::uint32_t>, kNumSemanticClasses> by_class;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    SemanticClass c = cloud.semantic[i];
    if (c != SemanticClass::Unlabeled) {
      by_class[static_cast<std::size_t>(c) - 1].push_back(i);
    }
  }

  auto dist = class_balance_distribution(histogram);
  std::vector<double> cumulative(kNumSemanticClasses);
  double run = 0.0;
  for (std::size_t c = 0; c < kNumSemanticClasses; ++c) {
    if (by_class[c].empty()) dist[c] = 0.0;  // histogram may disagree with the cloud
    run += dist[c];
    cumulative[c] = run;
  }
  if (!(run > 0.0)) throw InputError("class-balanced sampling needs at least one labeled point");

  Rng rng(seed);
  std::vector<std::uint32_t> out;
  out.reserve(count);
  for (std::size_t d = 0; d < count; ++d) {
    std::size_t c = rng.discrete_from_cumulative(cumulative);
    while (c > 0 && by_class[c].empty()) --c;  // u == total edge case lands on a plateau
    while (by_class[c].empty()) ++c;
    const auto& pool = by_class[c];
    out.push_back(pool[rng.below(pool.size())]);
  }
  return out;
}

std::map<std::string, double> region_weighted_sampler(
    const std::map<std::string, ClassHistogram>& region_histograms) {
  if (region_histograms.empty()) throw InputError("region sampling needs at least one region");
  std::map<std::string, double> dist;
  double total = 0.0;
  for (const auto& [name, hist] : region_histograms) {
    std::size_t t = hist.total();
    if (t == 0) continue;
    double w = std::sqrt(1.0 / static_cast<double>(t));
    dist[name] = w;
    total += w;
  }
  if (dist.empty()) throw InputError("region sampling: all regions are empty");
  for (auto& [name, w] : dist) w /= total;
  return dist;
}

std::string draw_region(const std::map<std::string, double>& distribution, std::uint64_t seed) {
  if (distribution.empty()) throw InputError("cannot draw from an empty region distribution");
  Rng rng(seed);
  double u = rng.uniform01();
  double run = 0.0;
  for (const auto& [name, p] : distribution) {
    run += p;
    if (u < run) return name;
  }
  return distribution.rbegin()->first;
}

}  // namespace forest
