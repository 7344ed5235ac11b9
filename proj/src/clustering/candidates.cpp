#include "forest/clustering/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forest/core/spatial_index.hpp"

namespace forest {

std::vector<InstanceCandidate> region_grow_shifted(std::span<const Point3> points,
                                                   std::span<const Point3> offsets,
                                                   double distance_threshold,
                                                   std::size_t min_cluster_size) {
  if (!(distance_threshold > 0.0)) throw ConfigError("region growing threshold must be > 0");
  if (points.size() != offsets.size()) {
    throw InputError("region_grow_shifted: offsets are not parallel to the points");
  }
  if (points.empty()) return {};

  std::vector<Point3> shifted(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) shifted[i] = points[i] + offsets[i];

  SpatialIndex index = SpatialIndex::from_points(shifted, 3);
  std::vector<std::int32_t> component(points.size(), -1);
  std::vector<std::uint32_t> stack;
  std::int32_t n_components = 0;

  for (std::uint32_t seed = 0; seed < points.size(); ++seed) {
    if (component[seed] >= 0) continue;
    component[seed] = n_components;
    stack.assign(1, seed);
    while (!stack.empty()) {
      std::uint32_t cur = stack.back();
      stack.pop_back();
      const double q[3] = {shifted[cur].x, shifted[cur].y, shifted[cur].z};
      for (std::uint32_t nb : index.radius_query(q, distance_threshold)) {
        if (component[nb] < 0) {
          component[nb] = n_components;
          stack.push_back(nb);
        }
      }
    }
    ++n_components;
  }

  std::vector<InstanceCandidate> candidates(n_components);
  for (std::uint32_t i = 0; i < points.size(); ++i) {
    candidates[component[i]].indices.push_back(i);
  }
  std::erase_if(candidates, [&](const InstanceCandidate& c) {
    return c.indices.size() < min_cluster_size;
  });
  for (auto& c : candidates) c.provenance = CandidateProvenance::OffsetClustering;
  return candidates;
}

MeanShiftResult mean_shift(std::span<const double> vectors, int dim,
                           const MeanShiftParams& params) {
  if (!(params.bandwidth > 0.0)) throw ConfigError("mean shift bandwidth must be > 0");
  MeanShiftResult result;
  if (vectors.empty()) return result;
  const std::size_t n = vectors.size() / dim;

  SpatialIndex index(std::vector<double>(vectors.begin(), vectors.end()), dim);

  std::vector<double> modes(n * dim);
  std::vector<char> converged(n, 0);
  std::vector<double> pos(dim), next(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) pos[d] = vectors[i * dim + d];
    bool done = false;
    for (int it = 0; it < params.max_iterations && !done; ++it) {
      auto within = index.radius_query(pos, params.bandwidth);
      std::fill(next.begin(), next.end(), 0.0);
      for (std::uint32_t nb : within) {
        for (int d = 0; d < dim; ++d) next[d] += vectors[nb * dim + d];
      }
      double shift2 = 0.0;
      for (int d = 0; d < dim; ++d) {
        next[d] /= static_cast<double>(within.size());
        double delta = next[d] - pos[d];
        shift2 += delta * delta;
      }
      pos = next;
      done = shift2 <= params.tolerance * params.tolerance;
    }
    if (!done) ++result.non_converged;
    converged[i] = done ? 1 : 0;
    for (int d = 0; d < dim; ++d) modes[i * dim + d] = pos[d];
  }

  // modes within bandwidth/2 of an established cluster mode share the cluster
  auto mode_dist2 = [&](std::size_t i, const std::vector<double>& m) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
      double delta = modes[i * dim + d] - m[d];
      s += delta * delta;
    }
    return s;
  };
  const double merge2 = params.bandwidth * params.bandwidth / 4.0;
  std::vector<std::int32_t> labels(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!converged[i]) continue;
    std::int32_t best = -1;
    double best_d2 = merge2;
    for (std::size_t c = 0; c < result.modes.size(); ++c) {
      double d2 = mode_dist2(i, result.modes[c]);
      if (d2 <= best_d2) {
        best_d2 = d2;
        best = static_cast<std::int32_t>(c);
      }
    }
    if (best < 0) {
      best = static_cast<std::int32_t>(result.modes.size());
      result.modes.emplace_back(modes.begin() + i * dim, modes.begin() + (i + 1) * dim);
    }
    labels[i] = best;
  }
  // non-converged points: nearest established mode (or a fresh one if none)
  for (std::size_t i = 0; i < n; ++i) {
    if (converged[i]) continue;
    if (result.modes.empty()) {
      result.modes.emplace_back(modes.begin() + i * dim, modes.begin() + (i + 1) * dim);
      labels[i] = 0;
      continue;
    }
    std::int32_t best = 0;
    double best_d2 = mode_dist2(i, result.modes[0]);
    for (std::size_t c = 1; c < result.modes.size(); ++c) {
      double d2 = mode_dist2(i, result.modes[c]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<std::int32_t>(c);
      }
    }
    labels[i] = best;
  }

  result.candidates.resize(result.modes.size());
  for (std::size_t i = 0; i < n; ++i) {
    result.candidates[labels[i]].indices.push_back(static_cast<std::uint32_t>(i));
  }
  for (auto& c : result.candidates) c.provenance = CandidateProvenance::EmbeddingClustering;
  std::erase_if(result.candidates, [](const InstanceCandidate& c) { return c.indices.empty(); });
  return result;
}

std::vector<InstanceCandidate> score_candidates(std::vector<InstanceCandidate> candidates,
                                                const LabeledPointCloud& cloud,
                                                const std::vector<double>* external) {
  if (external) {
    if (external->size() != candidates.size()) {
      throw InputError("external score count " + std::to_string(external->size()) +
                       " does not match candidate count " + std::to_string(candidates.size()));
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      candidates[i].score = (*external)[i];
      candidates[i].provenance = CandidateProvenance::External;
    }
    return candidates;
  }

  for (auto& c : candidates) {
    if (c.indices.size() < 2) {
      c.score = 0.0;
      continue;
    }
    double z_lo = cloud.points[c.indices[0]].z, z_hi = z_lo;
    std::vector<Point3> pts;
    pts.reserve(c.indices.size());
    for (std::uint32_t idx : c.indices) {
      const Point3& p = cloud.points[idx];
      pts.push_back(p);
      z_lo = std::min(z_lo, p.z);
      z_hi = std::max(z_hi, p.z);
    }
    double h = z_hi - z_lo;

    SpatialIndex index = SpatialIndex::from_points(pts, 3);
    double spacing_sum = 0.0;
    for (const Point3& p : pts) {
      const double q[3] = {p.x, p.y, p.z};
      auto nn = index.knn_query(q, 2);  // nearest other point
      spacing_sum += distance(pts[nn[1]], p);
    }
    double mean_spacing = spacing_sum / static_cast<double>(pts.size());
    double denom = h + 10.0 * mean_spacing;
    c.score = denom > 0.0 ? std::clamp(h / denom, 0.0, 1.0) : 0.0;
  }
  return candidates;
}

double point_set_iou(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

NmsResult greedy_nms(std::span<const InstanceCandidate> scored, std::size_t cloud_size,
                     double iou_threshold) {
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].score > scored[b].score;  // stable: ties keep input order
  });

  NmsResult result;
  result.labels.assign(cloud_size, kNoInstance);
  for (std::size_t oi : order) {
    const InstanceCandidate& cand = scored[oi];
    if (cand.indices.empty()) continue;
    bool keep = true;
    for (const InstanceCandidate& kept : result.kept) {
      if (point_set_iou(cand.indices, kept.indices) >= iou_threshold) {
        keep = false;
        break;
      }
    }
    if (!keep) continue;
    std::int32_t id = static_cast<std::int32_t>(result.kept.size());
    for (std::uint32_t idx : cand.indices) {
      if (result.labels.at(idx) == kNoInstance) result.labels[idx] = id;  // higher score wins
    }
    result.kept.push_back(cand);
  }
  return result;
}

}  // namespace forest
