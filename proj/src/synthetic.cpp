#include "forest/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "forest/util/rng.hpp"

namespace forest {

namespace {

constexpr int kStemRingPoints = 12;
constexpr double kStemRingSpacing = 0.1;
constexpr int kCrownRingPoints = 24;
constexpr double kCrownRingSpacing = 0.2;

/// Area of the regular k-gon inscribed in a circle of radius r.
double ring_polygon_area(double r, int k) {
  return 0.5 * k * r * r * std::sin(2.0 * std::numbers::pi / k);
}

/// Frustum between two aligned similar polygons (exact for ring stacks).
double frustum_volume(double area_lo, double area_hi, double h) {
  return h / 3.0 * (area_lo + area_hi + std::sqrt(area_lo * area_hi));
}

struct CrownRing {
  double z;  // absolute
  double radius;
};

}  // namespace

SyntheticForest generate_forest(const SyntheticForestConfig& config) {
  Rng rng(config.seed);
  SyntheticForest forest;
  LabeledPointCloud& cloud = forest.cloud;

  auto ground_at = [&](double x, double y) {
    return config.ground_base + config.ground_slope_x * x + config.ground_slope_y * y;
  };
  auto push = [&](Point3 p, SemanticClass c, std::int32_t inst) {
    cloud.points.push_back(p);
    cloud.semantic.push_back(c);
    cloud.instance.push_back(inst);
  };

  // terrain grid
  for (double x = 0.0; x <= config.extent + 1e-9; x += config.ground_spacing) {
    for (double y = 0.0; y <= config.extent + 1e-9; y += config.ground_spacing) {
      push({x, y, ground_at(x, y)}, SemanticClass::Ground, kNoInstance);
      if (config.low_veg_fraction > 0.0 && rng.bernoulli(config.low_veg_fraction)) {
        push({x + rng.uniform(-0.1, 0.1), y + rng.uniform(-0.1, 0.1),
              ground_at(x, y) + rng.uniform(0.05, 0.4)},
             SemanticClass::LowVegetation, kNoInstance);
      }
    }
  }

  // trees on a jittered grid, far enough apart that crowns never touch
  std::size_t grid = static_cast<std::size_t>(std::ceil(std::sqrt(config.n_trees)));
  double pitch = config.extent / static_cast<double>(grid + 1);
  std::vector<Point3> tree_centers;  // for offsets; z = mid height

  for (std::size_t t = 0; t < config.n_trees; ++t) {
    SyntheticTreeTruth truth;
    truth.instance = static_cast<std::int32_t>(t);
    truth.conifer = rng.bernoulli(0.6);
    double cx = pitch * (1.0 + static_cast<double>(t % grid)) + rng.uniform(-0.5, 0.5);
    double cy = pitch * (1.0 + static_cast<double>(t / grid)) + rng.uniform(-0.5, 0.5);
    truth.location = {cx, cy};
    truth.ground_z = ground_at(cx, cy);
    truth.height = rng.uniform(9.0, 24.0);
    truth.dbh_cm = rng.uniform(12.0, 45.0);
    double crown_base = rng.uniform(2.5, 4.0);
    double crown_radius = std::min(rng.uniform(1.0, 2.4), 0.45 * pitch);

    const double stem_radius = truth.dbh_cm / 200.0;
    const double z0 = truth.ground_z;

    // stem: rings of a perfect cylinder, each ring rotated so projections
    // do not stack onto the same 2D positions
    std::size_t ring_index = 0;
    for (double h = 0.2; h <= crown_base; h += kStemRingSpacing, ++ring_index) {
      double phase = 0.161803 * static_cast<double>(ring_index);
      for (int i = 0; i < kStemRingPoints; ++i) {
        double ang = 2.0 * std::numbers::pi * (static_cast<double>(i) / kStemRingPoints + phase);
        push({cx + stem_radius * std::cos(ang), cy + stem_radius * std::sin(ang), z0 + h},
             SemanticClass::Stem, truth.instance);
        if (std::abs(h - 1.3) <= 0.5) ++truth.stem_slice_points;
      }
    }

    // crown rings: the same angles on every ring, so the hull is an exact
    // stack of frusta; odd angles carry dead-branch points, which makes the
    // live hull the 12-gon stack and the full hull the 24-gon stack
    std::vector<CrownRing> rings;
    if (truth.conifer) {
      // cone: radius shrinks linearly to the apex
      for (double h = crown_base; h < truth.height - 1e-9; h += kCrownRingSpacing) {
        double f = (h - crown_base) / (truth.height - crown_base);
        rings.push_back({z0 + h, crown_radius * (1.0 - f)});
      }
      rings.push_back({z0 + truth.height, 0.0});
    } else {
      // ellipsoid: vertical semi-axis c, radius concave in height
      double c_axis = (truth.height - crown_base) / 2.0;
      double center = crown_base + c_axis;
      rings.push_back({z0 + crown_base, 0.0});
      for (double h = crown_base + kCrownRingSpacing; h < truth.height - 1e-9;
           h += kCrownRingSpacing) {
        double u = (h - center) / c_axis;
        rings.push_back({z0 + h, crown_radius * std::sqrt(std::max(0.0, 1.0 - u * u))});
      }
      rings.push_back({z0 + truth.height, 0.0});
    }

    double max_ring_radius = 0.0;
    for (const CrownRing& ring : rings) {
      max_ring_radius = std::max(max_ring_radius, ring.radius);
      if (ring.radius == 0.0) {
        push({cx, cy, ring.z}, SemanticClass::LiveBranches, truth.instance);
        continue;
      }
      for (int i = 0; i < kCrownRingPoints; ++i) {
        double ang = 2.0 * std::numbers::pi * static_cast<double>(i) / kCrownRingPoints;
        SemanticClass cls = i % 2 == 0 ? SemanticClass::LiveBranches : SemanticClass::DeadBranches;
        push({cx + ring.radius * std::cos(ang), cy + ring.radius * std::sin(ang), ring.z}, cls,
             truth.instance);
      }
    }
    truth.crown_diameter = 2.0 * max_ring_radius;

    // interior fill: strictly inside both the 24-gon and 12-gon hulls
    // (margin below the 12-gon inradius), so the closed-form volumes stay
    // exact while the crown clusters as one dense blob instead of a lattice.
    // Segments are drawn proportional to their volume: uneven fill density
    // would hand the density-based filter a spurious dominant cluster.
    std::vector<double> segment_cumulative(rings.size() - 1);
    double cum = 0.0;
    for (std::size_t r = 1; r < rings.size(); ++r) {
      cum += frustum_volume(ring_polygon_area(rings[r - 1].radius, kCrownRingPoints),
                            ring_polygon_area(rings[r].radius, kCrownRingPoints),
                            rings[r].z - rings[r - 1].z) +
             1e-12;
      segment_cumulative[r - 1] = cum;
    }
    std::size_t n_fill = rings.size() * kCrownRingPoints;
    for (std::size_t f = 0; f < n_fill; ++f) {
      std::size_t seg = 1 + rng.discrete_from_cumulative(segment_cumulative);
      const CrownRing& lo = rings[seg - 1];
      const CrownRing& hi = rings[seg];
      double t = rng.uniform01();
      double z = lo.z + t * (hi.z - lo.z);
      double r_max = 0.82 * (lo.radius + t * (hi.radius - lo.radius));
      double r = r_max * std::sqrt(rng.uniform01());
      double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
      SemanticClass cls =
          rng.bernoulli(0.5) ? SemanticClass::LiveBranches : SemanticClass::DeadBranches;
      push({cx + r * std::cos(ang), cy + r * std::sin(ang), z}, cls, truth.instance);
    }

    auto stack_volume = [&](int k) {
      double vol = 0.0;
      for (std::size_t r = 1; r < rings.size(); ++r) {
        vol += frustum_volume(ring_polygon_area(rings[r - 1].radius, k),
                              ring_polygon_area(rings[r].radius, k), rings[r].z - rings[r - 1].z);
      }
      return vol;
    };
    truth.volume_all = stack_volume(kCrownRingPoints);
    truth.volume_live = stack_volume(kCrownRingPoints / 2);

    tree_centers.push_back({cx, cy, z0 + truth.height / 2.0});
    forest.trees.push_back(truth);

    if (config.artifact_points > 0 && t < config.artifact_points) {
      // isolated scanning artefact far above the canopy, same instance
      push({cx + rng.uniform(-0.5, 0.5), cy + rng.uniform(-0.5, 0.5),
            z0 + truth.height + rng.uniform(15.0, 25.0)},
           SemanticClass::LiveBranches, truth.instance);
    }
  }

  if (config.coordinate_jitter > 0.0) {
    Rng jitter_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    for (Point3& p : cloud.points) {
      p.x += jitter_rng.uniform(-config.coordinate_jitter, config.coordinate_jitter);
      p.y += jitter_rng.uniform(-config.coordinate_jitter, config.coordinate_jitter);
      p.z += jitter_rng.uniform(-config.coordinate_jitter, config.coordinate_jitter);
    }
  }
  cloud.validate();

  // perfect offsets and well-separated embeddings for the tree points
  std::vector<std::array<double, 5>> tree_embedding(config.n_trees);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    Rng code(config.seed ^ (0x5e3dULL + t * 0x9e37ULL));
    for (int d = 0; d < 5; ++d) tree_embedding[t][d] = 10.0 * code.normal(0.0, 1.0);
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!is_tree_class(cloud.semantic[i])) continue;
    std::int32_t inst = cloud.instance[i];
    forest.annotation.offsets.push_back(tree_centers[inst] - cloud.points[i]);
    std::array<double, 5> e = tree_embedding[inst];
    for (int d = 0; d < 5; ++d) e[d] += rng.normal(0.0, 0.05);
    forest.annotation.embeddings.push_back(e);
  }
  forest.annotation.validate();
  return forest;
}

}  // namespace forest
