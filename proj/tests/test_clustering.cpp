#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "forest/clustering/block_merge.hpp"
#include "forest/clustering/candidates.hpp"
#include "forest/clustering/hdbscan.hpp"
#include "forest/core/voxel.hpp"
#include "forest/util/rng.hpp"

using namespace forest;

namespace {

/// O(n^2) pairwise union-find: the region-growing oracle.
std::vector<std::set<std::uint32_t>> pairwise_components(const std::vector<Point3>& pts,
                                                         double threshold) {
  std::vector<std::uint32_t> uf(pts.size());
  std::iota(uf.begin(), uf.end(), 0u);
  std::function<std::uint32_t(std::uint32_t)> find = [&](std::uint32_t x) {
    return uf[x] == x ? x : (uf[x] = find(uf[x]));
  };
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    for (std::uint32_t j = i + 1; j < pts.size(); ++j) {
      if (distance(pts[i], pts[j]) <= threshold) uf[find(i)] = find(j);
    }
  }
  std::map<std::uint32_t, std::set<std::uint32_t>> groups;
  for (std::uint32_t i = 0; i < pts.size(); ++i) groups[find(i)].insert(i);
  std::vector<std::set<std::uint32_t>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

/// Textbook Prim on an explicit mutual-reachability matrix (the MST oracle).
std::vector<MstEdge> prim_mst_oracle(const std::vector<std::vector<double>>& pts,
                                     std::size_t min_samples) {
  const std::size_t n = pts.size();
  auto dist = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t d = 0; d < pts[a].size(); ++d) {
      s += (pts[a][d] - pts[b][d]) * (pts[a][d] - pts[b][d]);
    }
    return std::sqrt(s);
  };
  // core distance: min_samples-th nearest, point itself counted first
  std::vector<double> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> ds(n);
    for (std::size_t j = 0; j < n; ++j) ds[j] = dist(i, j);
    std::sort(ds.begin(), ds.end());
    core[i] = ds[std::min(min_samples, n) - 1];
  }
  std::vector<std::vector<double>> w(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      w[i][j] = std::max({dist(i, j), core[i], core[j]});
    }
  }
  std::vector<char> used(n, 0);
  std::vector<double> best(n, 1e300);
  std::vector<std::uint32_t> src(n, 0);
  used[0] = 1;
  for (std::size_t j = 1; j < n; ++j) best[j] = w[0][j];
  std::vector<MstEdge> edges;
  for (std::size_t it = 1; it < n; ++it) {
    std::size_t v = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!used[j] && (v == n || best[j] < best[v])) v = j;
    }
    edges.push_back({src[v], static_cast<std::uint32_t>(v), best[v]});
    used[v] = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (!used[j] && w[v][j] < best[j]) {
        best[j] = w[v][j];
        src[j] = static_cast<std::uint32_t>(v);
      }
    }
  }
  return edges;
}

std::set<std::pair<std::uint32_t, std::uint32_t>> edge_set(const std::vector<MstEdge>& edges) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> out;
  for (const auto& e : edges) out.insert(std::minmax(e.a, e.b));
  return out;
}

}  // namespace

TEST_CASE("region_grow_shifted separates gapped groups and joins chains") {
  std::vector<Point3> pts;
  std::vector<Point3> offsets;
  for (int i = 0; i < 10; ++i) {
    pts.push_back({0.1 * i, 0, 0});
    offsets.push_back({0, 0, 0});
  }
  for (int i = 0; i < 10; ++i) {
    pts.push_back({100 + 0.1 * i, 0, 0});
    offsets.push_back({0, 0, 0});
  }
  auto candidates = region_grow_shifted(pts, offsets, 0.5, 1);
  CHECK(candidates.size() == 2);

  // zero offsets, all within a chained threshold -> one candidate
  std::vector<Point3> chain;
  std::vector<Point3> zero;
  for (int i = 0; i < 50; ++i) {
    chain.push_back({0.4 * i, 0, 0});
    zero.push_back({0, 0, 0});
  }
  candidates = region_grow_shifted(chain, zero, 0.5, 1);
  REQUIRE(candidates.size() == 1);
  CHECK(candidates[0].indices.size() == 50);
}

TEST_CASE("region_grow_shifted applies the offsets before clustering") {
  // two interleaved trees whose offsets contract them to distant centers
  std::vector<Point3> pts, offsets;
  for (int i = 0; i < 20; ++i) {
    pts.push_back({0.05 * i, 0, 0});
    bool even = i % 2 == 0;
    Point3 target = even ? Point3{-50, 0, 0} : Point3{50, 0, 0};
    offsets.push_back(target - pts.back());
  }
  auto candidates = region_grow_shifted(pts, offsets, 0.5, 1);
  REQUIRE(candidates.size() == 2);
  for (const auto& c : candidates) CHECK(c.indices.size() == 10);
}

TEST_CASE("region_grow_shifted equals the pairwise union-find oracle") {
  Rng rng(211);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 20 + rng.below(280);
    std::vector<Point3> pts(n);
    std::vector<Point3> offsets(n);
    for (auto& p : pts) p = {rng.uniform(0, 6), rng.uniform(0, 6), rng.uniform(0, 6)};
    for (auto& o : offsets) o = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0.0};

    std::vector<Point3> shifted(n);
    for (std::size_t i = 0; i < n; ++i) shifted[i] = pts[i] + offsets[i];
    auto expected = pairwise_components(shifted, 0.5);

    auto candidates = region_grow_shifted(pts, offsets, 0.5, 1);
    REQUIRE(candidates.size() == expected.size());
    std::set<std::set<std::uint32_t>> got_sets, want_sets;
    for (const auto& c : candidates) got_sets.insert({c.indices.begin(), c.indices.end()});
    for (auto& s : expected) want_sets.insert(s);
    CHECK(got_sets == want_sets);
  }
}

TEST_CASE("region_grow_shifted respects min_cluster_size and threshold limits") {
  Rng rng(213);
  std::vector<Point3> pts(60);
  std::vector<Point3> zero(60, Point3{0, 0, 0});
  for (auto& p : pts) p = {rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)};

  // threshold large enough to chain everything -> exactly one candidate
  auto everything = region_grow_shifted(pts, zero, 1e9, 1);
  REQUIRE(everything.size() == 1);
  CHECK(everything[0].indices.size() == 60);

  // tiny threshold -> singletons, filtered away entirely by min size 2
  auto singletons = region_grow_shifted(pts, zero, 1e-9, 2);
  CHECK(singletons.empty());
}

TEST_CASE("mean_shift separates far blobs exactly") {
  Rng rng(217);
  const int dim = 5;
  const double bw = 0.5;
  std::vector<double> vec;
  std::vector<int> truth;
  std::vector<std::vector<double>> centers = {{0, 0, 0, 0, 0}, {5, 5, 5, 5, 5}};  // 10 bw apart
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 40; ++i) {
      for (int d = 0; d < dim; ++d) vec.push_back(centers[c][d] + rng.normal(0, 0.05));
      truth.push_back(c);
    }
  }
  auto result = mean_shift(vec, dim, {.bandwidth = bw});
  REQUIRE(result.candidates.size() == 2);
  CHECK(result.non_converged == 0);
  for (const auto& cand : result.candidates) {
    std::set<int> classes;
    for (auto idx : cand.indices) classes.insert(truth[idx]);
    CHECK(classes.size() == 1);  // exact membership
    CHECK(cand.indices.size() == 40);
  }
}

TEST_CASE("mean_shift of identical points is one cluster after one iteration") {
  std::vector<double> vec;
  for (int i = 0; i < 10; ++i) {
    for (int d = 0; d < 5; ++d) vec.push_back(3.25);
  }
  auto result = mean_shift(vec, 5, {.bandwidth = 1.0, .max_iterations = 1});
  REQUIRE(result.candidates.size() == 1);
  CHECK(result.candidates[0].indices.size() == 10);
  CHECK(result.non_converged == 0);
}

TEST_CASE("mean_shift matches a high-precision reference iteration") {
  Rng rng(219);
  const int dim = 5;
  std::vector<double> vec;
  std::vector<int> truth;
  std::vector<std::vector<double>> centers = {
      {0, 0, 0, 0, 0}, {3, 0, 0, 0, 0}, {0, 3, 3, 0, 0}};
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 30; ++i) {
      for (int d = 0; d < dim; ++d) vec.push_back(centers[c][d] + rng.normal(0, 0.1));
      truth.push_back(c);
    }
  }
  const double bw = 0.5;
  auto result = mean_shift(vec, dim, {.bandwidth = bw, .max_iterations = 500, .tolerance = 1e-8});
  REQUIRE(result.candidates.size() == 3);

  // oracle: direct O(n^2) ascent per point, run to 1e-8
  const std::size_t n = truth.size();
  auto ascend = [&](std::size_t i) {
    std::vector<double> pos(vec.begin() + i * dim, vec.begin() + (i + 1) * dim);
    for (int it = 0; it < 1000; ++it) {
      std::vector<double> acc(dim, 0.0);
      std::size_t count = 0;
      for (std::size_t j = 0; j < n; ++j) {
        double d2 = 0;
        for (int d = 0; d < dim; ++d) {
          d2 += (vec[j * dim + d] - pos[d]) * (vec[j * dim + d] - pos[d]);
        }
        if (d2 <= bw * bw) {
          ++count;
          for (int d = 0; d < dim; ++d) acc[d] += vec[j * dim + d];
        }
      }
      double shift2 = 0;
      for (int d = 0; d < dim; ++d) {
        acc[d] /= count;
        shift2 += (acc[d] - pos[d]) * (acc[d] - pos[d]);
        pos[d] = acc[d];
      }
      if (shift2 <= 1e-16) break;
    }
    return pos;
  };
  // cluster memberships from the oracle: points whose modes coincide (within bw/2)
  std::vector<std::vector<double>> oracle_modes(n);
  for (std::size_t i = 0; i < n; ++i) oracle_modes[i] = ascend(i);
  std::vector<int> oracle_label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double d2 = 0;
      for (int d = 0; d < dim; ++d) {
        d2 += (oracle_modes[i][d] - oracle_modes[j][d]) * (oracle_modes[i][d] - oracle_modes[j][d]);
      }
      if (d2 <= bw * bw / 4) {
        oracle_label[i] = oracle_label[j];
        break;
      }
    }
    if (oracle_label[i] < 0) oracle_label[i] = next++;
  }
  REQUIRE(next == 3);
  // memberships must agree as partitions
  std::map<int, std::set<std::uint32_t>> oracle_groups;
  for (std::size_t i = 0; i < n; ++i) oracle_groups[oracle_label[i]].insert(i);
  std::set<std::set<std::uint32_t>> got, want;
  for (const auto& c : result.candidates) got.insert({c.indices.begin(), c.indices.end()});
  for (auto& [l, s] : oracle_groups) want.insert(s);
  CHECK(got == want);
}

TEST_CASE("hdbscan finds two blobs and flags far outliers as noise") {
  Rng rng(223);
  std::vector<Point3> pts;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 100; ++i) {
      double cx = c == 0 ? 0.0 : 10.0;
      pts.push_back({cx + rng.normal(0, 0.05), rng.normal(0, 0.05), rng.normal(0, 0.05)});
    }
  }
  pts.push_back({100, 100, 100});
  pts.push_back({-80, 50, 20});
  pts.push_back({50, -70, 90});
  pts.push_back({200, 0, -50});
  pts.push_back({0, 300, 60});

  auto result = hdbscan(pts, {.min_cluster_size = 10, .min_samples = 5});
  CHECK(result.n_clusters == 2);
  std::size_t noise = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (result.labels[i] < 0) ++noise;
  }
  CHECK(noise == 5);
  for (std::size_t i = 200; i < 205; ++i) CHECK(result.labels[i] == -1);
  // blob memberships are pure
  std::set<std::int32_t> first_blob, second_blob;
  for (int i = 0; i < 100; ++i) first_blob.insert(result.labels[i]);
  for (int i = 100; i < 200; ++i) second_blob.insert(result.labels[i]);
  CHECK(first_blob.size() == 1);
  CHECK(second_blob.size() == 1);
  CHECK(*first_blob.begin() != *second_blob.begin());
}

TEST_CASE("hdbscan of a tight ball is one dominant cluster with no noise") {
  Rng rng(227);
  std::vector<Point3> pts(80);
  for (auto& p : pts) p = {rng.normal(0, 0.1), rng.normal(0, 0.1), rng.normal(0, 0.1)};
  auto result = hdbscan(pts, {.min_cluster_size = 10, .min_samples = 5});
  CHECK(result.n_clusters == 1);
  CHECK(result.dominant == 0);
  for (auto label : result.labels) CHECK(label == 0);
}

TEST_CASE("hdbscan falls back to a single cluster below min_cluster_size") {
  std::vector<Point3> pts = {{0, 0, 0}, {100, 0, 0}, {0, 100, 0}};
  auto result = hdbscan(pts, {.min_cluster_size = 10, .min_samples = 3});
  CHECK(result.fallback_single);
  CHECK(result.n_clusters == 1);
  CHECK(hdbscan_dominant_indices(result).size() == 3);
}

TEST_CASE("hdbscan MST equals the dense Prim oracle") {
  Rng rng(229);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 10 + rng.below(91);  // up to 100 points
    std::vector<Point3> pts(n);
    std::vector<std::vector<double>> rows(n, std::vector<double>(3));
    for (std::size_t i = 0; i < n; ++i) {
      pts[i] = {rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 5)};
      rows[i] = {pts[i].x, pts[i].y, pts[i].z};
    }
    auto result = hdbscan(pts, {.min_cluster_size = 5, .min_samples = 4});
    auto expected = prim_mst_oracle(rows, 4);
    REQUIRE(result.mst.size() == expected.size());
    CHECK(edge_set(result.mst) == edge_set(expected));
    double got_total = 0, want_total = 0;
    for (const auto& e : result.mst) got_total += e.weight;
    for (const auto& e : expected) want_total += e.weight;
    CHECK(got_total == doctest::Approx(want_total).epsilon(1e-12));
  }
}

TEST_CASE("hdbscan is permutation invariant as a partition") {
  Rng rng(233);
  std::vector<Point3> pts;
  for (int c = 0; c < 3; ++c) {
    int size = 40 + 10 * c;  // distinct sizes keep the dominant cluster unambiguous
    for (int i = 0; i < size; ++i) {
      pts.push_back({4.0 * c + rng.normal(0, 0.08), rng.normal(0, 0.08), rng.normal(0, 0.08)});
    }
  }
  auto base = hdbscan(pts, {.min_cluster_size = 8, .min_samples = 5});

  std::vector<std::uint32_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0u);
  rng.shuffle(perm);
  std::vector<Point3> shuffled(pts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = pts[perm[i]];
  auto permuted = hdbscan(shuffled, {.min_cluster_size = 8, .min_samples = 5});

  REQUIRE(base.n_clusters == permuted.n_clusters);
  std::set<std::set<std::uint32_t>> base_sets, perm_sets;
  std::map<std::int32_t, std::set<std::uint32_t>> groups;
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    if (base.labels[i] >= 0) groups[base.labels[i]].insert(i);
  }
  for (auto& [l, s] : groups) base_sets.insert(s);
  groups.clear();
  for (std::uint32_t i = 0; i < perm.size(); ++i) {
    if (permuted.labels[i] >= 0) groups[permuted.labels[i]].insert(perm[i]);
  }
  for (auto& [l, s] : groups) perm_sets.insert(s);
  CHECK(base_sets == perm_sets);

  // dominant membership is permutation invariant as a set
  std::set<std::uint32_t> dom_base, dom_perm;
  for (auto i : hdbscan_dominant_indices(base)) dom_base.insert(i);
  for (auto i : hdbscan_dominant_indices(permuted)) dom_perm.insert(perm[i]);
  CHECK(dom_base == dom_perm);
}

TEST_CASE("score_candidates attaches external scores verbatim") {
  LabeledPointCloud cloud;
  cloud.points = {{0, 0, 0}, {0, 0, 5}, {1, 0, 0}, {1, 0, 4}};
  cloud.semantic.assign(4, SemanticClass::Stem);
  cloud.instance.assign(4, 0);
  std::vector<InstanceCandidate> cands(2);
  cands[0].indices = {0, 1};
  cands[1].indices = {2, 3};
  std::vector<double> ext = {0.9, 0.4};
  auto scored = score_candidates(cands, cloud, &ext);
  CHECK(scored[0].score == 0.9);
  CHECK(scored[1].score == 0.4);
  CHECK(scored[0].provenance == CandidateProvenance::External);

  std::vector<double> bad = {0.9};
  CHECK_THROWS_AS(score_candidates(cands, cloud, &bad), InputError);

  auto empty = score_candidates({}, cloud, nullptr);
  CHECK(empty.empty());
}

TEST_CASE("surrogate score prefers the taller of two equally spaced candidates") {
  LabeledPointCloud cloud;
  std::vector<InstanceCandidate> cands(2);
  // tall column, 0.2 m spacing
  for (int i = 0; i < 100; ++i) {
    cands[0].indices.push_back(static_cast<std::uint32_t>(cloud.points.size()));
    cloud.points.push_back({0, 0, 0.2 * i});
    cloud.semantic.push_back(SemanticClass::Stem);
    cloud.instance.push_back(-1);
  }
  // flat disc, same spacing
  for (int i = 0; i < 100; ++i) {
    cands[1].indices.push_back(static_cast<std::uint32_t>(cloud.points.size()));
    cloud.points.push_back({50 + 0.2 * (i % 10), 0.2 * (i / 10), 0.0});
    cloud.semantic.push_back(SemanticClass::LiveBranches);
    cloud.instance.push_back(-1);
  }
  cloud.instance.assign(cloud.size(), -1);
  auto scored = score_candidates(cands, cloud, nullptr);
  CHECK(scored[0].score > scored[1].score);
  for (const auto& c : scored) {
    CHECK(c.score >= 0.0);
    CHECK(c.score <= 1.0);
  }

  // the documented formula: h / (h + 10 * mean nn spacing)
  double h = 0.2 * 99;
  CHECK(scored[0].score == doctest::Approx(h / (h + 10 * 0.2)).epsilon(1e-9));
}

TEST_CASE("greedy_nms suppresses duplicates and keeps disjoint candidates") {
  std::vector<InstanceCandidate> cands(2);
  cands[0].indices = {0, 1, 2, 3};
  cands[0].score = 0.9;
  cands[1].indices = {0, 1, 2, 3};
  cands[1].score = 0.8;
  auto result = greedy_nms(cands, 8, 0.5);
  CHECK(result.kept.size() == 1);
  CHECK(result.kept[0].score == 0.9);

  cands[1].indices = {4, 5, 6, 7};
  result = greedy_nms(cands, 8, 0.5);
  CHECK(result.kept.size() == 2);
  CHECK(result.labels[0] == 0);
  CHECK(result.labels[4] == 1);
}

TEST_CASE("greedy_nms equals a direct oracle on random overlapping candidates") {
  Rng rng(239);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cloud_size = 60;
    std::vector<InstanceCandidate> cands(10);
    for (auto& c : cands) {
      std::size_t len = 5 + rng.below(20);
      std::set<std::uint32_t> s;
      while (s.size() < len) s.insert(static_cast<std::uint32_t>(rng.below(cloud_size)));
      c.indices.assign(s.begin(), s.end());
      c.score = rng.uniform01();
    }
    const double thr = 0.3;
    auto result = greedy_nms(cands, cloud_size, thr);

    // oracle: sort a copy, re-run the definition at full precision
    std::vector<std::size_t> order(cands.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cands[a].score > cands[b].score; });
    std::vector<std::size_t> kept_oracle;
    for (std::size_t oi : order) {
      bool keep = true;
      for (std::size_t k : kept_oracle) {
        std::size_t inter = 0;
        for (auto idx : cands[oi].indices) {
          inter += std::count(cands[k].indices.begin(), cands[k].indices.end(), idx);
        }
        double iou = static_cast<double>(inter) /
                     (cands[oi].indices.size() + cands[k].indices.size() - inter);
        if (iou >= thr) {
          keep = false;
          break;
        }
      }
      if (keep) kept_oracle.push_back(oi);
    }
    REQUIRE(result.kept.size() == kept_oracle.size());
    for (std::size_t i = 0; i < kept_oracle.size(); ++i) {
      CHECK(result.kept[i].indices == cands[kept_oracle[i]].indices);
    }
    // kept set never contains a pair at or above the threshold
    for (std::size_t i = 0; i < result.kept.size(); ++i) {
      for (std::size_t j = i + 1; j < result.kept.size(); ++j) {
        CHECK(point_set_iou(result.kept[i].indices, result.kept[j].indices) < thr);
      }
    }
  }
}

namespace {

/// A plot of vertical columns, one per tree, plus labels; used for the block
/// merge round trip.
struct TinyPlot {
  LabeledPointCloud cloud;
  std::vector<std::int32_t> truth;  // instance per point
  std::vector<Point3> offsets;      // perfect: contract each tree to its center
};

TinyPlot make_plot(std::size_t n_trees, Rng& rng) {
  TinyPlot plot;
  for (std::size_t t = 0; t < n_trees; ++t) {
    double cx = 3.0 * static_cast<double>(t % 5) + rng.uniform(-0.5, 0.5);
    double cy = 3.0 * static_cast<double>(t / 5) + rng.uniform(-0.5, 0.5);
    for (int i = 0; i < 40; ++i) {
      Point3 p{cx + rng.uniform(-0.8, 0.8), cy + rng.uniform(-0.8, 0.8), rng.uniform(0, 12)};
      plot.cloud.points.push_back(p);
      plot.cloud.semantic.push_back(SemanticClass::Stem);
      plot.cloud.instance.push_back(static_cast<std::int32_t>(t));
      plot.truth.push_back(static_cast<std::int32_t>(t));
      plot.offsets.push_back(Point3{cx, cy, 0.0} - p);
    }
  }
  plot.cloud.validate();
  return plot;
}

double per_tree_iou(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b,
                    std::int32_t tree_a, std::int32_t tree_b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool in_a = a[i] == tree_a, in_b = b[i] == tree_b;
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

TEST_CASE("merge_blocks fuses a tree split across blocks and keeps strangers apart") {
  // one tree: points 0..9; block A sees 0..6, block B sees 3..9
  std::vector<BlockLabeling> blocks(2);
  for (std::uint32_t i = 0; i <= 6; ++i) {
    blocks[0].point_indices.push_back(i);
    blocks[0].instances.push_back(0);
  }
  for (std::uint32_t i = 3; i <= 9; ++i) {
    blocks[1].point_indices.push_back(i);
    blocks[1].instances.push_back(0);
  }
  auto merged = merge_blocks(blocks, 10, 0.5);
  CHECK(merged.n_instances == 1);
  for (std::uint32_t i = 0; i < 10; ++i) CHECK(merged.labels[i] == 0);

  // two trees that never share a point are never fused
  blocks[1].point_indices = {20, 21, 22};
  blocks[1].instances = {0, 0, 0};
  merged = merge_blocks(blocks, 30, 0.5);
  CHECK(merged.n_instances == 2);
}

TEST_CASE("block round trip recovers the unblocked labeling") {
  Rng rng(241);
  TinyPlot plot = make_plot(20, rng);
  const std::size_t n = plot.cloud.size();

  // whole-plot oracle labeling: region growing on perfectly shifted points
  auto whole = region_grow_shifted(plot.cloud.points, plot.offsets, 0.6, 1);
  auto whole_scored = score_candidates(whole, plot.cloud, nullptr);
  auto whole_nms = greedy_nms(whole_scored, n, 0.3);
  REQUIRE(whole_nms.kept.size() == 20);

  // 4 overlapping blocks (2x2), each processed independently
  BlockLayout layout{.origin = {3.0, 1.5}, .spacing = 7.0, .radius = 9.0};
  std::vector<BlockLabeling> blocks;
  for (Point2 center : layout.centers({7.0, 7.0})) {
    BlockLabeling bl;
    std::vector<Point3> pts, offs;
    for (std::uint32_t i = 0; i < n; ++i) {
      double dx = plot.cloud.points[i].x - center.x, dy = plot.cloud.points[i].y - center.y;
      if (dx * dx + dy * dy <= layout.radius * layout.radius) {
        bl.point_indices.push_back(i);
        pts.push_back(plot.cloud.points[i]);
        offs.push_back(plot.offsets[i]);
      }
    }
    if (pts.empty()) continue;
    auto cands = region_grow_shifted(pts, offs, 0.6, 1);
    LabeledPointCloud local = plot.cloud.subset(bl.point_indices);
    auto scored = score_candidates(cands, local, nullptr);
    auto nms = greedy_nms(scored, pts.size(), 0.3);
    bl.instances = nms.labels;
    blocks.push_back(std::move(bl));
  }
  REQUIRE(blocks.size() == 4);
  auto merged = merge_blocks(blocks, n, 0.5);
  CHECK(merged.n_instances == 20);

  // per-tree IoU vs the whole-plot labeling must be >= 0.99
  for (std::int32_t tree = 0; tree < 20; ++tree) {
    double best = 0.0;
    for (std::int32_t other = 0; other < static_cast<std::int32_t>(merged.n_instances); ++other) {
      best = std::max(best, per_tree_iou(whole_nms.labels, merged.labels, tree, other));
    }
    CHECK(best >= 0.99);
  }

  // invariance to block processing order
  std::vector<BlockLabeling> reversed(blocks.rbegin(), blocks.rend());
  auto merged2 = merge_blocks(reversed, n, 0.5);
  CHECK(merged2.labels == merged.labels);
}

TEST_CASE("reinsert_full_resolution labels by nearest subsampled point") {
  LabeledPointCloud sub;
  sub.points = {{0, 0, 0}, {10, 0, 0}};
  sub.semantic = {SemanticClass::Stem, SemanticClass::Ground};
  sub.instance = {4, -1};

  LabeledPointCloud original;
  original.points = {{0, 0, 0}, {10, 0, 0}, {0.1, 0, 0}, {9.8, 0.1, 0}};
  original.semantic.assign(4, SemanticClass::Unlabeled);
  original.instance.assign(4, -1);

  auto out = reinsert_full_resolution(sub, original);
  CHECK(out.semantic[0] == SemanticClass::Stem);
  CHECK(out.instance[0] == 4);
  CHECK(out.semantic[2] == SemanticClass::Stem);
  CHECK(out.instance[2] == 4);
  CHECK(out.semantic[3] == SemanticClass::Ground);
  CHECK(out.instance[3] == -1);

  // identity when original == subsampled
  auto same = reinsert_full_resolution(sub, sub);
  CHECK(same.semantic == sub.semantic);
  CHECK(same.instance == sub.instance);

  LabeledPointCloud empty;
  CHECK_THROWS_AS(reinsert_full_resolution(empty, original), InputError);
}

TEST_CASE("reinsert_full_resolution equals a linear-scan oracle") {
  Rng rng(251);
  LabeledPointCloud sub;
  for (int i = 0; i < 300; ++i) {
    sub.points.push_back({rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)});
    bool tree = rng.bernoulli(0.5);
    sub.semantic.push_back(tree ? SemanticClass::Stem : SemanticClass::Ground);
    sub.instance.push_back(tree ? static_cast<std::int32_t>(rng.below(5)) : -1);
  }
  LabeledPointCloud original;
  for (int i = 0; i < 1000; ++i) {
    original.points.push_back({rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)});
    original.semantic.push_back(SemanticClass::Unlabeled);
    original.instance.push_back(-1);
  }
  auto out = reinsert_full_resolution(sub, original);
  for (std::size_t i = 0; i < original.size(); ++i) {
    double best = 1e300;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < sub.size(); ++j) {
      double d = distance(original.points[i], sub.points[j]);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    CHECK(out.semantic[i] == sub.semantic[best_j]);
    CHECK(out.instance[i] == sub.instance[best_j]);
  }
}
