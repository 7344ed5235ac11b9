#include "forest/clustering/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "forest/core/spatial_index.hpp"

namespace forest {

namespace {

constexpr double kLambdaMax = 1e18;

double lambda_of(double dist) { return dist > 0.0 ? 1.0 / dist : kLambdaMax; }

}  // namespace

void HdbscanParams::validate() const {
  if (min_cluster_size < 2) throw ConfigError("hdbscan min_cluster_size must be >= 2");
  if (min_samples < 1) throw ConfigError("hdbscan min_samples must be >= 1");
}

std::vector<double> hdbscan_core_distances(std::span<const double> vectors, int dim,
                                           std::size_t min_samples) {
  const std::size_t n = vectors.size() / dim;
  SpatialIndex index(std::vector<double>(vectors.begin(), vectors.end()), dim);
  std::vector<double> core(n, 0.0);
  const std::size_t k = std::min(min_samples, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> q(vectors.data() + i * dim, dim);
    auto nn = index.knn_query(q, k);
    double s = 0.0;
    const double* last = vectors.data() + static_cast<std::size_t>(nn.back()) * dim;
    for (int d = 0; d < dim; ++d) {
      double delta = last[d] - q[d];
      s += delta * delta;
    }
    core[i] = std::sqrt(s);
  }
  return core;
}

HdbscanResult hdbscan(std::span<const Point3> points, const HdbscanParams& params) {
  std::vector<double> coords;
  coords.reserve(points.size() * 3);
  for (const Point3& p : points) {
    coords.push_back(p.x);
    coords.push_back(p.y);
    coords.push_back(p.z);
  }
  return hdbscan(coords, 3, params);
}

std::vector<std::uint32_t> hdbscan_dominant_indices(const HdbscanResult& result) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < result.labels.size(); ++i) {
    if (result.labels[i] == result.dominant) out.push_back(i);
  }
  return out;
}

HdbscanResult hdbscan(std::span<const double> vectors, int dim, const HdbscanParams& params) {
  params.validate();
  HdbscanResult result;
  if (vectors.empty()) return result;
  const std::size_t n = vectors.size() / dim;
  if (vectors.size() % dim != 0) throw InputError("hdbscan: vector array size mismatch");

  if (n < params.min_cluster_size) {
    result.labels.assign(n, 0);
    result.n_clusters = 1;
    result.dominant = 0;
    result.fallback_single = true;
    return result;
  }

  const std::vector<double> core = hdbscan_core_distances(vectors, dim, params.min_samples);

  auto mreach = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    const double* pa = vectors.data() + a * dim;
    const double* pb = vectors.data() + b * dim;
    for (int d = 0; d < dim; ++d) {
      double delta = pa[d] - pb[d];
      s += delta * delta;
    }
    return std::max({std::sqrt(s), core[a], core[b]});
  };

  // dense Prim over the implicit complete mutual-reachability graph
  std::vector<double> best_w(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> best_src(n, 0);
  std::vector<char> in_tree(n, 0);
  in_tree[0] = 1;
  for (std::size_t u = 1; u < n; ++u) {
    best_w[u] = mreach(0, u);
  }
  result.mst.reserve(n - 1);
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t v = n;
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < n; ++u) {
      if (!in_tree[u] && best_w[u] < w) {
        w = best_w[u];
        v = u;
      }
    }
    in_tree[v] = 1;
    result.mst.push_back({best_src[v], static_cast<std::uint32_t>(v), w});
    for (std::size_t u = 0; u < n; ++u) {
      if (in_tree[u]) continue;
      double cand = mreach(v, u);
      if (cand < best_w[u]) {
        best_w[u] = cand;
        best_src[u] = static_cast<std::uint32_t>(v);
      }
    }
  }
  std::sort(result.mst.begin(), result.mst.end(), [](const MstEdge& a, const MstEdge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.a != b.a) return a.a < b.a;
    return a.b < b.b;
  });

  // single-linkage dendrogram: internal nodes n .. 2n-2 in merge order
  std::vector<std::int32_t> uf_parent(2 * n - 1);
  std::iota(uf_parent.begin(), uf_parent.end(), 0);
  auto find = [&](std::int32_t x) {
    while (uf_parent[x] != x) {
      uf_parent[x] = uf_parent[uf_parent[x]];
      x = uf_parent[x];
    }
    return x;
  };
  std::vector<std::int32_t> left(n - 1), right(n - 1);
  std::vector<double> merge_dist(n - 1);
  std::vector<std::uint32_t> subtree_size(2 * n - 1, 1);
  for (std::size_t e = 0; e < result.mst.size(); ++e) {
    std::int32_t ra = find(result.mst[e].a);
    std::int32_t rb = find(result.mst[e].b);
    std::int32_t node = static_cast<std::int32_t>(n + e);
    left[e] = ra;
    right[e] = rb;
    merge_dist[e] = result.mst[e].weight;
    uf_parent[ra] = node;
    uf_parent[rb] = node;
    subtree_size[node] = subtree_size[ra] + subtree_size[rb];
  }

  // condensed tree
  struct Cluster {
    std::int32_t parent = -1;
    double birth_lambda = 0.0;
    double stability = 0.0;
    std::vector<std::int32_t> children;
    std::vector<std::uint32_t> fallen;   // points that left this cluster directly
    std::vector<double> fallen_lambda;   // parallel fall-out density levels
    bool selected = false;
    double subtree_stability = 0.0;
  };
  std::vector<Cluster> clusters(1);  // root

  auto collect_points = [&](std::int32_t node, std::vector<std::uint32_t>& out) {
    std::vector<std::int32_t> stack{node};
    while (!stack.empty()) {
      std::int32_t cur = stack.back();
      stack.pop_back();
      if (cur < static_cast<std::int32_t>(n)) {
        out.push_back(static_cast<std::uint32_t>(cur));
      } else {
        stack.push_back(left[cur - n]);
        stack.push_back(right[cur - n]);
      }
    }
  };

  struct WalkItem {
    std::int32_t node;     // dendrogram internal node
    std::int32_t cluster;  // condensed cluster id
  };
  std::vector<WalkItem> walk{{static_cast<std::int32_t>(2 * n - 2), 0}};
  const std::uint32_t m = static_cast<std::uint32_t>(params.min_cluster_size);
  while (!walk.empty()) {
    auto [node, cid] = walk.back();
    walk.pop_back();
    double lam = lambda_of(merge_dist[node - n]);
    std::int32_t l = left[node - n], r = right[node - n];
    std::uint32_t ls = subtree_size[l], rs = subtree_size[r];

    auto drop_side = [&](std::int32_t side, std::uint32_t size) {
      std::vector<std::uint32_t> pts;
      pts.reserve(size);
      collect_points(side, pts);
      for (std::uint32_t p : pts) {
        clusters[cid].fallen.push_back(p);
        clusters[cid].fallen_lambda.push_back(lam);
      }
      clusters[cid].stability += (lam - clusters[cid].birth_lambda) * size;
    };
    auto continue_into = [&](std::int32_t side) {
      // side is guaranteed internal: a leaf has size 1 < m
      walk.push_back({side, cid});
    };
    auto spawn = [&](std::int32_t side, std::uint32_t size) {
      std::int32_t child = static_cast<std::int32_t>(clusters.size());
      clusters.push_back({});
      clusters[child].parent = cid;
      clusters[child].birth_lambda = lam;
      clusters[cid].children.push_back(child);
      clusters[cid].stability += (lam - clusters[cid].birth_lambda) * size;
      walk.push_back({side, child});
    };

    if (ls >= m && rs >= m) {
      spawn(l, ls);
      spawn(r, rs);
    } else if (ls >= m) {
      drop_side(r, rs);
      continue_into(l);
    } else if (rs >= m) {
      drop_side(l, ls);
      continue_into(r);
    } else {
      drop_side(l, ls);
      drop_side(r, rs);
    }
  }

  // excess-of-mass selection, children before parents (ids are topological)
  for (std::size_t c = clusters.size(); c-- > 0;) {
    Cluster& cl = clusters[c];
    if (cl.children.empty()) {
      cl.selected = true;
      cl.subtree_stability = cl.stability;
      continue;
    }
    double child_sum = 0.0;
    for (std::int32_t ch : cl.children) child_sum += clusters[ch].subtree_stability;
    if (cl.stability >= child_sum) {
      cl.selected = true;
      cl.subtree_stability = cl.stability;
    } else {
      cl.subtree_stability = child_sum;
    }
  }
  // keep only the topmost selected cluster on every root-to-leaf path
  std::vector<std::int32_t> stack{0};
  std::vector<char> shadowed(clusters.size(), 0);
  while (!stack.empty()) {
    std::int32_t c = stack.back();
    stack.pop_back();
    if (shadowed[c]) clusters[c].selected = false;
    for (std::int32_t ch : clusters[c].children) {
      shadowed[ch] = shadowed[c] || clusters[c].selected;
      stack.push_back(ch);
    }
  }

  // labels: nearest selected ancestor of the cluster a point fell from
  std::vector<std::int32_t> owner(clusters.size(), -1);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    std::int32_t cur = static_cast<std::int32_t>(c);
    while (cur >= 0 && !clusters[cur].selected) cur = clusters[cur].parent;
    owner[c] = cur;
  }
  // The root is born at lambda 0, so when it wins selection its earliest
  // fall-outs are far outliers rather than members. Points owned by the root
  // cluster stay members only while their fall-out level is within a factor
  // 10 of the median member level.
  double root_lambda_cut = 0.0;
  if (clusters[0].selected) {
    std::vector<double> lams;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (owner[c] == 0) {
        lams.insert(lams.end(), clusters[c].fallen_lambda.begin(),
                    clusters[c].fallen_lambda.end());
      }
    }
    if (!lams.empty()) {
      std::nth_element(lams.begin(), lams.begin() + lams.size() / 2, lams.end());
      root_lambda_cut = lams[lams.size() / 2] / 10.0;
    }
  }

  result.labels.assign(n, kNoInstance);
  std::vector<std::uint32_t> first_member(clusters.size(), std::numeric_limits<std::uint32_t>::max());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (owner[c] < 0) continue;
    for (std::size_t f = 0; f < clusters[c].fallen.size(); ++f) {
      std::uint32_t p = clusters[c].fallen[f];
      if (owner[c] == 0 && clusters[c].fallen_lambda[f] < root_lambda_cut) continue;
      result.labels[p] = owner[c];
      first_member[owner[c]] = std::min(first_member[owner[c]], p);
    }
  }

  // canonical ids 0..k-1 ordered by first member index
  std::vector<std::int32_t> selected_ids;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (clusters[c].selected && first_member[c] != std::numeric_limits<std::uint32_t>::max()) {
      selected_ids.push_back(static_cast<std::int32_t>(c));
    }
  }
  std::sort(selected_ids.begin(), selected_ids.end(), [&](std::int32_t a, std::int32_t b) {
    return first_member[a] < first_member[b];
  });
  std::vector<std::int32_t> remap(clusters.size(), -1);
  for (std::size_t i = 0; i < selected_ids.size(); ++i) {
    remap[selected_ids[i]] = static_cast<std::int32_t>(i);
  }
  std::vector<std::size_t> member_count(selected_ids.size(), 0);
  for (auto& label : result.labels) {
    if (label >= 0) {
      label = remap[label];
      ++member_count[label];
    }
  }
  result.n_clusters = selected_ids.size();
  result.dominant = -1;
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < member_count.size(); ++i) {
    if (member_count[i] > best_count) {
      best_count = member_count[i];
      result.dominant = static_cast<std::int32_t>(i);
    }
  }
  return result;
}

}  // namespace forest
