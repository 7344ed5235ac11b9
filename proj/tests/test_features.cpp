#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "forest/features/augment.hpp"
#include "forest/features/eigenfeatures.hpp"
#include "forest/features/sampling.hpp"
#include "forest/features/treemix.hpp"
#include "forest/util/rng.hpp"
#include "oracles.hpp"

using namespace forest;

namespace {

LabeledPointCloud cloud_of(std::vector<Point3> pts, std::vector<SemanticClass> sem,
                           std::vector<std::int32_t> inst) {
  LabeledPointCloud c;
  c.points = std::move(pts);
  c.semantic = std::move(sem);
  c.instance = std::move(inst);
  c.validate();
  return c;
}

}  // namespace

TEST_CASE("eigenfeatures: collinear points are linear") {
  std::vector<Point3> line;
  for (int i = 0; i < 50; ++i) line.push_back({0.1 * i, 0.2 * i, 0.05 * i});
  EigenFeatureVector f = eigenfeatures_of(line);
  CHECK(f.linearity == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(f.planarity == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(f.sphericity == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("eigenfeatures: symmetric planar patch is planar with zero verticality") {
  std::vector<Point3> plane;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) plane.push_back({0.5 * i, 0.5 * j, 0.0});
  }
  EigenFeatureVector f = eigenfeatures_of(plane);
  CHECK(f.planarity == doctest::Approx(1.0).epsilon(1e-6));
  // normal (0,0,1) -> verticality = 1 - |n_z| = 0
  CHECK(f.verticality == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("eigenfeatures: vertical line has verticality 1") {
  std::vector<Point3> mast;
  for (int i = 0; i < 30; ++i) mast.push_back({0.0, 0.0, 0.1 * i});
  EigenFeatureVector f = eigenfeatures_of(mast);
  CHECK(f.verticality == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("eigenfeatures match a closed-form eigenvalue oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Point3> pts(10);
    for (auto& p : pts) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    EigenFeatureVector f = eigenfeatures_of(pts);

    Point3 mean{0, 0, 0};
    for (const auto& p : pts) mean = mean + p;
    mean = mean * (1.0 / pts.size());
    double a11 = 0, a12 = 0, a13 = 0, a22 = 0, a23 = 0, a33 = 0;
    for (const auto& p : pts) {
      Point3 d = p - mean;
      a11 += d.x * d.x;
      a12 += d.x * d.y;
      a13 += d.x * d.z;
      a22 += d.y * d.y;
      a23 += d.y * d.z;
      a33 += d.z * d.z;
    }
    double n = static_cast<double>(pts.size());
    auto lam = oracle::symmetric_eigenvalues_3x3(a11 / n, a12 / n, a13 / n, a22 / n, a23 / n,
                                                 a33 / n);
    double total = lam[0] + lam[1] + lam[2];
    double e1 = lam[0] / total, e2 = lam[1] / total, e3 = lam[2] / total;

    CHECK(f.sum == doctest::Approx(total).epsilon(1e-9));
    CHECK(f.linearity == doctest::Approx((e1 - e2) / e1).epsilon(1e-7));
    CHECK(f.planarity == doctest::Approx((e2 - e3) / e1).epsilon(1e-7));
    CHECK(f.sphericity == doctest::Approx(e3 / e1).epsilon(1e-7));
    CHECK(f.anisotropy == doctest::Approx((e1 - e3) / e1).epsilon(1e-7));
    CHECK(f.surface_variation == doctest::Approx(e3).epsilon(1e-7));
    CHECK(f.omnivariance == doctest::Approx(std::cbrt(e1 * e2 * e3)).epsilon(1e-7));
    double entropy = 0;
    for (double e : {e1, e2, e3}) {
      if (e > 0) entropy -= e * std::log(e);
    }
    CHECK(f.eigenentropy == doctest::Approx(entropy).epsilon(1e-7));
  }
}

TEST_CASE("eigenfeatures: isotropic spread has eigenentropy ln 3") {
  std::vector<Point3> axes = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  EigenFeatureVector f = eigenfeatures_of(axes);
  CHECK(f.eigenentropy == doctest::Approx(std::log(3.0)).epsilon(1e-9));
}

TEST_CASE("eigenfeatures: bounded features stay in [0,1], degenerate cases are zero") {
  Rng rng(37);
  std::vector<Point3> pts(300);
  for (auto& p : pts) p = {rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 2)};
  auto features = eigenfeatures(pts, Neighborhood{.k = 8});
  for (const auto& f : features) {
    for (double v : {f.linearity, f.planarity, f.sphericity, f.anisotropy, f.surface_variation,
                     f.verticality}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
    CHECK(f.eigenentropy >= 0.0);
  }

  EigenFeatureVector degenerate = eigenfeatures_of(std::vector<Point3>{{1, 1, 1}, {2, 2, 2}});
  CHECK(degenerate.sum == 0.0);
  CHECK(degenerate.sphericity == 0.0);

  std::vector<Point3> coincident(5, Point3{1, 1, 1});
  degenerate = eigenfeatures_of(coincident);
  CHECK(degenerate.sum == 0.0);
}

TEST_CASE("class_balance_distribution follows the inverse square root law") {
  ClassHistogram h;
  h[SemanticClass::LowVegetation] = 100;
  h[SemanticClass::Ground] = 400;
  auto dist = class_balance_distribution(h);
  CHECK(dist[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));  // sqrt(1/100) : sqrt(1/400) = 2:1
  CHECK(dist[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  ClassHistogram single;
  single[SemanticClass::Stem] = 42;
  auto sdist = class_balance_distribution(single);
  CHECK(sdist[2] == doctest::Approx(1.0));
}

TEST_CASE("class_balanced_seed_sampler empirical frequencies follow the law") {
  Rng rng(41);
  LabeledPointCloud cloud;
  // class counts 100 and 400
  for (int i = 0; i < 500; ++i) {
    cloud.points.push_back({rng.uniform(0, 1), rng.uniform(0, 1), 0.0});
    cloud.semantic.push_back(i < 100 ? SemanticClass::LowVegetation : SemanticClass::Ground);
    cloud.instance.push_back(-1);
  }
  ClassHistogram h = class_histogram(cloud);
  const std::size_t draws = 100000;
  auto seeds = class_balanced_seed_sampler(cloud, h, draws, 4242);
  std::size_t low = 0;
  for (auto idx : seeds) {
    if (cloud.semantic[idx] == SemanticClass::LowVegetation) ++low;
  }
  // expect 2/3 within 3 sigma of the binomial
  double p = 2.0 / 3.0;
  double sigma = std::sqrt(p * (1 - p) / draws);
  CHECK(std::abs(static_cast<double>(low) / draws - p) < 3 * sigma);
}

TEST_CASE("class_balanced_seed_sampler uniform case and determinism") {
  Rng rng(43);
  LabeledPointCloud cloud;
  for (int i = 0; i < 50; ++i) {
    cloud.points.push_back({rng.uniform(0, 1), 0, 0});
    cloud.semantic.push_back(SemanticClass::Stem);
    cloud.instance.push_back(0);
  }
  ClassHistogram h = class_histogram(cloud);
  auto a = class_balanced_seed_sampler(cloud, h, 100, 7);
  auto b = class_balanced_seed_sampler(cloud, h, 100, 7);
  CHECK(a == b);
  auto c = class_balanced_seed_sampler(cloud, h, 100, 8);
  CHECK(a != c);
}

TEST_CASE("class_balanced_seed_sampler five equal classes are uniform") {
  Rng rng(47);
  LabeledPointCloud cloud;
  const int per_class = 20;
  for (int c = 1; c <= 5; ++c) {
    for (int i = 0; i < per_class; ++i) {
      cloud.points.push_back({rng.uniform(0, 1), 0, 0});
      auto cls = static_cast<SemanticClass>(c);
      cloud.semantic.push_back(cls);
      cloud.instance.push_back(is_tree_class(cls) ? 0 : -1);
    }
  }
  ClassHistogram h = class_histogram(cloud);
  const std::size_t draws = 100000;
  auto seeds = class_balanced_seed_sampler(cloud, h, draws, 99);
  std::array<std::size_t, 5> counts{};
  for (auto idx : seeds) counts[static_cast<std::size_t>(cloud.semantic[idx]) - 1]++;
  // chi^2 against uniform: 4 dof, 3-sigma-ish bound ~ 16.25 (p ~ 0.001: 18.47)
  double expected = draws / 5.0;
  double chi2 = 0;
  for (auto c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 18.47);
}

TEST_CASE("class_balanced_seed_sampler rejects unlabeled clouds") {
  LabeledPointCloud cloud;
  cloud.points = {{0, 0, 0}};
  cloud.semantic = {SemanticClass::Unlabeled};
  cloud.instance = {-1};
  ClassHistogram h = class_histogram(cloud);
  CHECK_THROWS_AS(class_balanced_seed_sampler(cloud, h, 10, 1), InputError);
}

TEST_CASE("region_weighted_sampler probabilities") {
  auto hist_with_total = [](std::size_t n) {
    ClassHistogram h;
    h[SemanticClass::Ground] = n;
    return h;
  };
  std::map<std::string, ClassHistogram> regions;
  regions["a"] = hist_with_total(100);
  regions["b"] = hist_with_total(400);
  auto dist = region_weighted_sampler(regions);
  CHECK(dist["a"] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(dist["b"] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  regions["b"] = hist_with_total(100);
  dist = region_weighted_sampler(regions);
  CHECK(dist["a"] == doctest::Approx(0.5).epsilon(1e-12));

  regions["c"] = hist_with_total(400);
  regions["b"] = hist_with_total(100);
  dist = region_weighted_sampler(regions);
  CHECK(dist["a"] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(dist["b"] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(dist["c"] == doctest::Approx(0.2).epsilon(1e-12));

  CHECK_THROWS_AS(region_weighted_sampler({}), InputError);
}

TEST_CASE("extract_cylinder boundary and emptiness") {
  LabeledPointCloud cloud = cloud_of({{1.0, 0.0, 5.0}, {2.0, 0.0, -3.0}, {0.0, 0.0, 0.0}},
                                     {SemanticClass::Ground, SemanticClass::Ground,
                                      SemanticClass::Ground},
                                     {-1, -1, -1});
  // point at distance exactly r is included; z unconstrained
  CylinderSample s = extract_cylinder(cloud, {0, 0}, 1.0);
  REQUIRE(s.indices.size() == 2);
  CHECK(s.indices[0] == 0);
  CHECK(s.indices[1] == 2);

  s = extract_cylinder(cloud, {100, 100}, 1.0);
  CHECK(s.indices.empty());
}

TEST_CASE("extract_cylinder equals a linear scan on random data") {
  Rng rng(53);
  LabeledPointCloud cloud;
  for (int i = 0; i < 10000; ++i) {
    cloud.points.push_back({rng.uniform(0, 20), rng.uniform(0, 20), rng.uniform(0, 30)});
    cloud.semantic.push_back(SemanticClass::Ground);
    cloud.instance.push_back(-1);
  }
  Point2 center{10, 10};
  double radius = 4.5;
  CylinderSample s = extract_cylinder(cloud, center, radius);
  std::set<std::uint32_t> got(s.indices.begin(), s.indices.end());
  std::set<std::uint32_t> expected;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    double dx = cloud.points[i].x - center.x, dy = cloud.points[i].y - center.y;
    if (dx * dx + dy * dy <= radius * radius) expected.insert(i);
  }
  CHECK(got == expected);
}

TEST_CASE("augment with zeroed config is the identity") {
  std::vector<Point3> pts = {{1, 2, 3}, {4, 5, 6}, {-1, 0, 2}};
  AugmentConfig cfg;
  cfg.jitter_sigma = 0;
  cfg.rotation_max_angle = 0;
  cfg.scale_low = cfg.scale_high = 1.0;
  cfg.reflection_probability = 0;
  cfg.dropout_coin = 0;
  cfg.elastic_magnitude = 0;
  auto out = augment(pts, cfg);
  REQUIRE(out.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out.points[i].x == pts[i].x);
    CHECK(out.points[i].y == pts[i].y);
    CHECK(out.points[i].z == pts[i].z);
  }
}

TEST_CASE("augment rotation preserves pairwise distances") {
  Rng rng(59);
  std::vector<Point3> pts(40);
  for (auto& p : pts) p = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0, 10)};
  AugmentConfig cfg;
  cfg.jitter_sigma = 0;
  cfg.scale_low = cfg.scale_high = 1.0;
  cfg.reflection_probability = 1.0;  // reflection is an isometry too
  cfg.dropout_coin = 0;
  cfg.elastic_magnitude = 0;
  cfg.seed = 17;
  auto out = augment(pts, cfg);
  REQUIRE(out.points.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double before = distance(pts[i], pts[j]);
      double after = distance(out.points[i], out.points[j]);
      CHECK(after == doctest::Approx(before).epsilon(1e-9));
    }
  }
}

TEST_CASE("augment dropout removes round(fraction * n) points") {
  std::vector<Point3> pts(100);
  for (int i = 0; i < 100; ++i) pts[i] = {static_cast<double>(i), 0, 0};
  AugmentConfig cfg;
  cfg.dropout_coin = 1.0;
  cfg.dropout_fraction = 0.4;
  cfg.jitter_sigma = 0;
  cfg.rotation_max_angle = 0;
  cfg.scale_low = cfg.scale_high = 1.0;
  cfg.reflection_probability = 0;
  cfg.seed = 3;
  auto out = augment(pts, cfg);
  CHECK(out.points.size() == 60);
  CHECK(out.dropout_applied);
}

TEST_CASE("augment scaling maps bounding box edges by the drawn factors") {
  Rng rng(61);
  std::vector<Point3> pts(50);
  for (auto& p : pts) p = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 8)};
  AugmentConfig cfg;
  cfg.jitter_sigma = 0;
  cfg.rotation_max_angle = 0;
  cfg.scale_low = 0.7;
  cfg.scale_high = 1.3;
  cfg.reflection_probability = 0;
  cfg.dropout_coin = 0;
  cfg.seed = 23;
  auto out = augment(pts, cfg);

  auto extent = [](const std::vector<Point3>& v, auto get) {
    double lo = get(v[0]), hi = get(v[0]);
    for (const auto& p : v) {
      lo = std::min(lo, get(p));
      hi = std::max(hi, get(p));
    }
    return hi - lo;
  };
  CHECK(extent(out.points, [](const Point3& p) { return p.x; }) ==
        doctest::Approx(extent(pts, [](const Point3& p) { return p.x; }) * out.scale.x)
            .epsilon(1e-12));
  CHECK(extent(out.points, [](const Point3& p) { return p.y; }) ==
        doctest::Approx(extent(pts, [](const Point3& p) { return p.y; }) * out.scale.y)
            .epsilon(1e-12));
  CHECK(extent(out.points, [](const Point3& p) { return p.z; }) ==
        doctest::Approx(extent(pts, [](const Point3& p) { return p.z; }) * out.scale.z)
            .epsilon(1e-12));
}

TEST_CASE("augment is bit-reproducible from its seed") {
  Rng rng(67);
  std::vector<Point3> pts(80);
  for (auto& p : pts) p = {rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(0, 15)};
  AugmentConfig cfg;  // defaults: everything on
  cfg.elastic_magnitude = 0.05;
  cfg.seed = 1234;
  auto a = augment(pts, cfg);
  auto b = augment(pts, cfg);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].x == b.points[i].x);
    CHECK(a.points[i].y == b.points[i].y);
    CHECK(a.points[i].z == b.points[i].z);
  }
}

namespace {

/// Two tiny synthetic "trees" (vertical point columns) in a cylinder sample.
LabeledPointCloud two_tree_sample(double tree2_x) {
  LabeledPointCloud cloud;
  for (int t = 0; t < 2; ++t) {
    double x = t == 0 ? 0.0 : tree2_x;
    for (int i = 0; i < 30; ++i) {
      cloud.points.push_back({x, 0.0, 0.2 * i});
      cloud.semantic.push_back(SemanticClass::Stem);
      cloud.instance.push_back(t);
    }
  }
  cloud.validate();
  return cloud;
}

CylinderSample whole(const LabeledPointCloud& cloud) {
  CylinderSample s;
  s.center = {0, 0};
  s.radius = 1e6;
  s.indices.resize(cloud.size());
  for (std::uint32_t i = 0; i < cloud.size(); ++i) s.indices[i] = i;
  return s;
}

TreeMixConfig quiet_treemix(std::uint64_t seed) {
  TreeMixConfig cfg;
  cfg.seed = seed;
  cfg.replace_fraction = 0.5;
  cfg.insert_augment.jitter_sigma = 0;
  cfg.insert_augment.rotation_max_angle = 0;
  cfg.insert_augment.scale_low = cfg.insert_augment.scale_high = 1.0;
  cfg.insert_augment.reflection_probability = 0;
  cfg.insert_augment.dropout_coin = 0;
  return cfg;
}

}  // namespace

TEST_CASE("treemix accepts distant insertions and rejects overlapping ones") {
  // source tree far from every target tree -> overlap 0 -> accepted
  LabeledPointCloud target = two_tree_sample(100.0);
  LabeledPointCloud source;
  for (int i = 0; i < 30; ++i) {
    source.points.push_back({500.0, 500.0, 0.2 * i});
    source.semantic.push_back(SemanticClass::Stem);
    source.instance.push_back(0);
  }
  auto cfg = quiet_treemix(5);
  auto result = treemix(target, whole(target), source, whole(source), cfg);
  REQUIRE(result.attempts.size() == 1);
  CHECK(result.attempts[0].overlap == 0.0);
  CHECK(result.attempts[0].accepted);
  CHECK(result.inserted == 1);
  CHECK(result.rejected == 0);

  // identical tree dropped exactly onto a remaining identical tree -> overlap 1 -> rejected
  LabeledPointCloud overlapped = two_tree_sample(0.0);  // both trees at x = 0
  auto result2 = treemix(overlapped, whole(overlapped), overlapped, whole(overlapped), cfg);
  REQUIRE(result2.attempts.size() == 1);
  CHECK(result2.attempts[0].overlap == doctest::Approx(1.0));
  CHECK(!result2.attempts[0].accepted);
  CHECK(result2.rejected == 1);
}

TEST_CASE("treemix acceptance matches a brute-force voxel intersection oracle") {
  Rng rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    // partially interleaved crowns: tree 1 at 0, tree 2 at random small offset
    LabeledPointCloud target = two_tree_sample(rng.uniform(0.0, 1.5));
    LabeledPointCloud source = two_tree_sample(3.0);
    auto cfg = quiet_treemix(1000 + trial);
    auto result = treemix(target, whole(target), source, whole(source), cfg);

    // rebuild the decision with an independent voxel hash set at 0.2 m
    LabeledPointCloud remaining = target;  // remove the replaced instance
    for (const auto& attempt : result.attempts) {
      std::set<std::tuple<long, long, long>> kept_vox, ins_vox;
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        if (remaining.instance[i] < 0 || remaining.instance[i] == attempt.removed_instance) {
          continue;
        }
        const Point3& p = remaining.points[i];
        kept_vox.insert({static_cast<long>(std::floor(p.x / cfg.overlap_voxel)),
                         static_cast<long>(std::floor(p.y / cfg.overlap_voxel)),
                         static_cast<long>(std::floor(p.z / cfg.overlap_voxel))});
      }
      std::size_t shared = 0;
      for (const Point3& p : attempt.points) {
        auto key = std::tuple{static_cast<long>(std::floor(p.x / cfg.overlap_voxel)),
                              static_cast<long>(std::floor(p.y / cfg.overlap_voxel)),
                              static_cast<long>(std::floor(p.z / cfg.overlap_voxel))};
        auto [it, inserted] = ins_vox.insert(key);
        (void)it;
        if (inserted && kept_vox.count(key)) ++shared;
      }
      double overlap = static_cast<double>(shared) / static_cast<double>(ins_vox.size());
      CHECK(attempt.overlap == doctest::Approx(overlap).epsilon(1e-12));
      CHECK(attempt.accepted == (overlap < cfg.overlap_threshold));
    }
  }
}

TEST_CASE("treemix output keeps cloud invariants and fresh instance ids") {
  LabeledPointCloud target = two_tree_sample(50.0);
  LabeledPointCloud source = two_tree_sample(40.0);
  auto cfg = quiet_treemix(9);
  cfg.replace_fraction = 1.0;
  auto result = treemix(target, whole(target), source, whole(source), cfg);
  result.cloud.validate();
  std::set<std::int32_t> old_ids{0, 1};
  for (const auto& attempt : result.attempts) {
    if (attempt.accepted) CHECK(!old_ids.count(attempt.new_instance));
  }
  // determinism
  auto again = treemix(target, whole(target), source, whole(source), cfg);
  REQUIRE(again.cloud.size() == result.cloud.size());
  for (std::size_t i = 0; i < again.cloud.size(); ++i) {
    CHECK(again.cloud.points[i].x == result.cloud.points[i].x);
    CHECK(again.cloud.instance[i] == result.cloud.instance[i]);
  }
}
