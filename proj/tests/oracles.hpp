// Test-only reference implementations, kept independent of the library code
// paths they check. Everything here is brute force on purpose.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "forest/core/types.hpp"
#include "forest/geometry/circle.hpp"
#include "forest/geometry/hull.hpp"
#include "forest/util/rng.hpp"

namespace forest::oracle {

/// Smallest enclosing circle by enumerating all point pairs and triples and
/// picking the smallest feasible circle.
inline Circle2 brute_force_sec(std::span<const Point2> pts) {
  const std::size_t n = pts.size();
  const double slack = 1e-9;
  auto contains_all = [&](const Circle2& c) {
    for (const Point2& p : pts) {
      if (distance(p, c.center) > c.radius * (1.0 + slack) + 1e-12) return false;
    }
    return true;
  };

  Circle2 best{{pts[0].x, pts[0].y}, 0.0};
  if (contains_all(best)) return best;
  best.radius = std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      Circle2 c{{(pts[i].x + pts[j].x) / 2, (pts[i].y + pts[j].y) / 2},
                distance(pts[i], pts[j]) / 2};
      if (c.radius < best.radius && contains_all(c)) best = c;
      for (std::size_t k = j + 1; k < n; ++k) {
        Circle2 cc;
        if (!circumcircle(pts[i], pts[j], pts[k], cc)) continue;
        if (cc.radius < best.radius && contains_all(cc)) best = cc;
      }
    }
  }
  return best;
}

/// Monte-Carlo volume of a convex polyhedron: containment fraction of
/// uniformly sampled bounding-box points.
inline double monte_carlo_hull_volume(const Polyhedron& poly, std::size_t samples,
                                      std::uint64_t seed) {
  Point3 lo = poly.vertices[0], hi = poly.vertices[0];
  for (const Point3& v : poly.vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  // flat plane array for the hot loop
  struct PlaneRow {
    double nx, ny, nz, off;
  };
  std::vector<PlaneRow> planes;
  planes.reserve(poly.faces.size());
  for (const auto& tri : poly.faces) {
    const Point3& a = poly.vertices[tri[0]];
    const Point3& b = poly.vertices[tri[1]];
    const Point3& c = poly.vertices[tri[2]];
    Point3 ab = b - a, ac = c - a;
    Point3 nrm{ab.y * ac.z - ab.z * ac.y, ab.z * ac.x - ab.x * ac.z, ab.x * ac.y - ab.y * ac.x};
    double len = nrm.norm();
    if (len == 0.0) continue;
    nrm = nrm * (1.0 / len);
    planes.push_back({nrm.x, nrm.y, nrm.z, nrm.dot(a)});
  }

  Rng rng(seed);
  std::size_t inside = 0;
  const double ex = hi.x - lo.x, ey = hi.y - lo.y, ez = hi.z - lo.z;
  for (std::size_t s = 0; s < samples; ++s) {
    double x = lo.x + ex * rng.uniform01();
    double y = lo.y + ey * rng.uniform01();
    double z = lo.z + ez * rng.uniform01();
    bool in = true;
    for (const PlaneRow& p : planes) {
      if (p.nx * x + p.ny * y + p.nz * z > p.off) {
        in = false;
        break;
      }
    }
    inside += in ? 1 : 0;
  }
  return ex * ey * ez * static_cast<double>(inside) / static_cast<double>(samples);
}

/// Max consensus over every 3-subset hypothesis (the exhaustive RANSAC bound).
inline int exhaustive_circle_consensus(std::span<const Point2> pts, double tol) {
  const std::size_t n = pts.size();
  int best = -1;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    for (std::size_t j = i + 1; j + 1 < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        Circle2 c;
        if (!circumcircle(pts[i], pts[j], pts[k], c)) continue;
        int count = 0;
        for (const Point2& p : pts) {
          if (std::abs(distance(p, c.center) - c.radius) <= tol) ++count;
        }
        best = std::max(best, count);
      }
    }
  }
  return best;
}

/// O(n^2) pairwise union-find over a distance threshold (the region-growing
/// oracle), as member sets.
inline std::vector<std::vector<std::uint32_t>> pairwise_components_oracle(
    const std::vector<Point3>& pts, double threshold) {
  std::vector<std::uint32_t> uf(pts.size());
  for (std::uint32_t i = 0; i < uf.size(); ++i) uf[i] = i;
  auto find = [&](std::uint32_t x) {
    while (uf[x] != x) {
      uf[x] = uf[uf[x]];
      x = uf[x];
    }
    return x;
  };
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    for (std::uint32_t j = i + 1; j < pts.size(); ++j) {
      if (distance(pts[i], pts[j]) <= threshold) uf[find(i)] = find(j);
    }
  }
  std::vector<std::vector<std::uint32_t>> groups;
  std::vector<std::int64_t> group_of(pts.size(), -1);
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    std::uint32_t root = find(i);
    if (group_of[root] < 0) {
      group_of[root] = static_cast<std::int64_t>(groups.size());
      groups.emplace_back();
    }
    groups[group_of[root]].push_back(i);
  }
  return groups;
}

struct OracleMstEdge {
  std::uint32_t a, b;
  double weight;
};

/// Textbook Prim on an explicitly materialized mutual-reachability matrix
/// (core distance = min_samples-th nearest neighbor, self counted first).
inline std::vector<OracleMstEdge> prim_mst_oracle(const std::vector<std::vector<double>>& pts,
                                                  std::size_t min_samples) {
  const std::size_t n = pts.size();
  auto dist = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t d = 0; d < pts[a].size(); ++d) {
      s += (pts[a][d] - pts[b][d]) * (pts[a][d] - pts[b][d]);
    }
    return std::sqrt(s);
  };
  std::vector<double> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> ds(n);
    for (std::size_t j = 0; j < n; ++j) ds[j] = dist(i, j);
    std::sort(ds.begin(), ds.end());
    core[i] = ds[std::min(min_samples, n) - 1];
  }
  std::vector<std::vector<double>> w(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) w[i][j] = std::max({dist(i, j), core[i], core[j]});
  }
  std::vector<char> used(n, 0);
  std::vector<double> best(n, 1e300);
  std::vector<std::uint32_t> src(n, 0);
  used[0] = 1;
  for (std::size_t j = 1; j < n; ++j) best[j] = w[0][j];
  std::vector<OracleMstEdge> edges;
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

/// Symmetric 3x3 eigenvalues via the trigonometric closed form, descending.
inline std::array<double, 3> symmetric_eigenvalues_3x3(double a11, double a12, double a13,
                                                       double a22, double a23, double a33) {
  double p1 = a12 * a12 + a13 * a13 + a23 * a23;
  std::array<double, 3> eig{};
  if (p1 == 0.0) {
    eig = {a11, a22, a33};
  } else {
    double q = (a11 + a22 + a33) / 3.0;
    double p2 = (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + (a33 - q) * (a33 - q) + 2.0 * p1;
    double p = std::sqrt(p2 / 6.0);
    double b11 = (a11 - q) / p, b12 = a12 / p, b13 = a13 / p;
    double b22 = (a22 - q) / p, b23 = a23 / p, b33 = (a33 - q) / p;
    double detb = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13) +
                  b13 * (b12 * b23 - b22 * b13);
    double r = std::clamp(detb / 2.0, -1.0, 1.0);
    double phi = std::acos(r) / 3.0;
    eig[0] = q + 2.0 * p * std::cos(phi);
    eig[2] = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    eig[1] = 3.0 * q - eig[0] - eig[2];
  }
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

}  // namespace forest::oracle
