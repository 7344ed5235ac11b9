#include "forest/features/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "forest/util/rng.hpp"

namespace forest {

void AugmentConfig::validate() const {
  if (jitter_sigma < 0.0) throw ConfigError("jitter_sigma must be >= 0");
  if (rotation_max_angle < 0.0) throw ConfigError("rotation_max_angle must be >= 0");
  if (!(scale_low > 0.0) || scale_high < scale_low) {
    throw ConfigError("scale range must satisfy 0 < low <= high");
  }
  for (auto [v, name] : {std::pair{reflection_probability, "reflection_probability"},
                         std::pair{dropout_coin, "dropout_coin"},
                         std::pair{dropout_fraction, "dropout_fraction"}}) {
    if (v < 0.0 || v > 1.0) throw ConfigError(std::string(name) + " must be in [0, 1]");
  }
  if (!(elastic_grid > 0.0)) throw ConfigError("elastic_grid must be > 0");
  if (elastic_magnitude < 0.0) throw ConfigError("elastic_magnitude must be >= 0");
}

namespace {

/// Zero-mean Gaussian displacement field on a lattice, trilinearly
/// interpolated. Node noise is hashed from the lattice coordinates so the
/// field is a pure function of (seed, grid spacing).
class ElasticField {
 public:
  ElasticField(double grid, double magnitude, std::uint64_t seed)
      : grid_(grid), magnitude_(magnitude), seed_(seed) {}

  Point3 displacement(const Point3& p) {
    double gx = p.x / grid_, gy = p.y / grid_, gz = p.z / grid_;
    std::int64_t x0 = static_cast<std::int64_t>(std::floor(gx));
    std::int64_t y0 = static_cast<std::int64_t>(std::floor(gy));
    std::int64_t z0 = static_cast<std::int64_t>(std::floor(gz));
    double fx = gx - x0, fy = gy - y0, fz = gz - z0;
    Point3 acc{0, 0, 0};
    for (int dx = 0; dx < 2; ++dx) {
      for (int dy = 0; dy < 2; ++dy) {
        for (int dz = 0; dz < 2; ++dz) {
          double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy) * (dz ? fz : 1.0 - fz);
          acc = acc + node(x0 + dx, y0 + dy, z0 + dz) * w;
        }
      }
    }
    return acc;
  }

 private:
  Point3 node(std::int64_t ix, std::int64_t iy, std::int64_t iz) {
    std::uint64_t key = static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL ^
                        static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4fULL ^
                        static_cast<std::uint64_t>(iz) * 0x165667b19e3779f9ULL;
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Rng rng(seed_ ^ key);
    Point3 d{rng.normal(0, magnitude_), rng.normal(0, magnitude_), rng.normal(0, magnitude_)};
    cache_.emplace(key, d);
    return d;
  }

  double grid_, magnitude_;
  std::uint64_t seed_;
  std::unordered_map<std::uint64_t, Point3> cache_;
};

}  // namespace

AugmentResult augment(std::span<const Point3> points, const AugmentConfig& config,
                      std::optional<Point2> center) {
  config.validate();
  if (points.empty()) throw InputError("augment: sample is empty");

  Point2 axis;
  if (center) {
    axis = *center;
  } else {
    Point3 mean{0, 0, 0};
    for (const Point3& p : points) mean = mean + p;
    mean = mean * (1.0 / static_cast<double>(points.size()));
    axis = {mean.x, mean.y};
  }

  Rng rng(config.seed);
  AugmentResult result;

  // 1. dropout: coin flip, then remove round(fraction * n) seed-chosen points
  result.kept.resize(points.size());
  std::iota(result.kept.begin(), result.kept.end(), 0u);
  result.dropout_applied = rng.bernoulli(config.dropout_coin);
  if (result.dropout_applied && config.dropout_fraction > 0.0) {
    std::size_t remove =
        static_cast<std::size_t>(std::llround(config.dropout_fraction * points.size()));
    remove = std::min(remove, points.size() - 1);  // never empty the sample
    rng.shuffle(result.kept);
    result.kept.resize(points.size() - remove);
    std::sort(result.kept.begin(), result.kept.end());
  }
  result.points.reserve(result.kept.size());
  for (std::uint32_t idx : result.kept) result.points.push_back(points[idx]);

  // 2. jitter
  if (config.jitter_sigma > 0.0) {
    for (Point3& p : result.points) {
      p.x += rng.normal(0, config.jitter_sigma);
      p.y += rng.normal(0, config.jitter_sigma);
      p.z += rng.normal(0, config.jitter_sigma);
    }
  }

  // 3. rotation about the vertical axis through the sample center
  result.rotation_angle = rng.uniform(0.0, config.rotation_max_angle);
  if (result.rotation_angle != 0.0) {
    double c = std::cos(result.rotation_angle), s = std::sin(result.rotation_angle);
    for (Point3& p : result.points) {
      double dx = p.x - axis.x, dy = p.y - axis.y;
      p.x = axis.x + c * dx - s * dy;
      p.y = axis.y + s * dx + c * dy;
    }
  }

  // 4. anisotropic scaling about the center (z scales about the sample floor)
  double z0 = result.points[0].z;
  for (const Point3& p : result.points) z0 = std::min(z0, p.z);
  result.scale = {rng.uniform(config.scale_low, config.scale_high),
                  rng.uniform(config.scale_low, config.scale_high),
                  rng.uniform(config.scale_low, config.scale_high)};
  if (result.scale.x != 1.0 || result.scale.y != 1.0 || result.scale.z != 1.0) {
    for (Point3& p : result.points) {
      p.x = axis.x + (p.x - axis.x) * result.scale.x;
      p.y = axis.y + (p.y - axis.y) * result.scale.y;
      p.z = z0 + (p.z - z0) * result.scale.z;
    }
  }

  // 5. reflection along the y axis
  result.reflected = rng.bernoulli(config.reflection_probability);
  if (result.reflected) {
    for (Point3& p : result.points) p.y = 2.0 * axis.y - p.y;
  }

  // 6. elastic deformation
  if (config.elastic_magnitude > 0.0) {
    ElasticField field(config.elastic_grid, config.elastic_magnitude, rng.next_u64());
    for (Point3& p : result.points) p = p + field.displacement(p);
  }

  return result;
}

}  // namespace forest
