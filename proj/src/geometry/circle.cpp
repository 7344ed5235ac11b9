#include "forest/geometry/circle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "forest/util/rng.hpp"

namespace forest {

bool circumcircle(const Point2& a, const Point2& b, const Point2& c, Circle2& out) {
  // translate to a to keep the determinant well conditioned
  Point2 ab = b - a, ac = c - a;
  double d = 2.0 * ab.cross(ac);
  double scale2 = std::max({ab.norm2(), ac.norm2(), (c - b).norm2()});
  if (std::abs(d) <= 1e-14 * scale2) return false;
  double ab2 = ab.norm2(), ac2 = ac.norm2();
  Point2 center_rel{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
  out.center = a + center_rel;
  out.radius = center_rel.norm();
  return true;
}

namespace {

Circle2 circle_from_diameter(const Point2& a, const Point2& b) {
  Circle2 c;
  c.center = (a + b) * 0.5;
  c.radius = distance(a, b) * 0.5;
  return c;
}

bool in_circle(const Circle2& c, const Point2& p) {
  // relative slack absorbs roundoff in the circumcircle construction
  return distance(p, c.center) <= c.radius * (1.0 + 1e-12) + 1e-14;
}

}  // namespace

Circle2 welzl_sec(std::span<const Point2> points) {
  if (points.empty()) throw InputError("smallest enclosing circle of an empty point set");

  std::vector<Point2> pts(points.begin(), points.end());
  Rng rng(0x5ec5ec5ec5ecULL);  // fixed seed: deterministic result, expected linear time
  rng.shuffle(pts);

  const std::size_t n = pts.size();
  Circle2 c{pts[0], 0.0};
  for (std::size_t i = 1; i < n; ++i) {
    if (in_circle(c, pts[i])) continue;
    c = Circle2{pts[i], 0.0};
    for (std::size_t j = 0; j < i; ++j) {
      if (in_circle(c, pts[j])) continue;
      c = circle_from_diameter(pts[i], pts[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (in_circle(c, pts[k])) continue;
        Circle2 cc;
        if (circumcircle(pts[i], pts[j], pts[k], cc)) {
          c = cc;
        } else {
          // collinear support: the widest diameter pair of the three
          Circle2 c1 = circle_from_diameter(pts[i], pts[k]);
          Circle2 c2 = circle_from_diameter(pts[j], pts[k]);
          c = std::max({c, c1, c2},
                       [](const Circle2& a, const Circle2& b) { return a.radius < b.radius; });
        }
      }
    }
  }
  return c;
}

namespace {

/// Kasa algebraic fit: minimizes sum (x^2+y^2 - 2ax - 2by - c)^2, linear in
/// (a,b,c). Coordinates are centered on the inlier centroid first; without
/// that, clouds far from the origin cancel away most of the precision.
bool kasa_fit(std::span<const Point2> points, const std::vector<char>& mask, Circle2& out) {
  Point2 mean{0.0, 0.0};
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!mask[i]) continue;
    mean = mean + points[i];
    ++count;
  }
  if (count < 3) return false;
  mean = mean * (1.0 / static_cast<double>(count));

  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!mask[i]) continue;
    Point2 p = points[i] - mean;
    Eigen::Vector3d row(2.0 * p.x, 2.0 * p.y, 1.0);
    double rhs = p.x * p.x + p.y * p.y;
    ata += row * row.transpose();
    atb += row * rhs;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
  if (!lu.isInvertible()) return false;
  Eigen::Vector3d sol = lu.solve(atb);
  double r2 = sol[2] + sol[0] * sol[0] + sol[1] * sol[1];
  if (!(r2 > 0.0) || !std::isfinite(r2)) return false;
  out.center = Point2{sol[0], sol[1]} + mean;
  out.radius = std::sqrt(r2);
  return true;
}

int count_inliers(std::span<const Point2> points, const Circle2& c, double tol,
                  std::vector<char>* mask) {
  int count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool in = std::abs(distance(points[i], c.center) - c.radius) <= tol;
    if (mask) (*mask)[i] = in ? 1 : 0;
    if (in) count += in;
  }
  return count;
}

}  // namespace

RansacCircleResult ransac_circle(std::span<const Point2> points, double inlier_tolerance,
                                 int iterations, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (n < 3) throw InputError("ransac_circle needs at least 3 points");
  if (!(inlier_tolerance > 0.0)) throw ConfigError("inlier tolerance must be > 0");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");

  const std::uint64_t total_triples = n * (n - 1) * (n - 2) / 6;
  const bool exhaustive = total_triples <= static_cast<std::uint64_t>(iterations);

  Circle2 best;
  int best_support = -1;
  bool any_valid = false;

  auto consider = [&](std::size_t i, std::size_t j, std::size_t k) {
    Circle2 hyp;
    if (!circumcircle(points[i], points[j], points[k], hyp)) return;
    any_valid = true;
    int support = count_inliers(points, hyp, inlier_tolerance, nullptr);
    if (support > best_support) {
      best_support = support;
      best = hyp;
    }
  };

  if (exhaustive) {
    for (std::size_t i = 0; i + 2 < n; ++i) {
      for (std::size_t j = i + 1; j + 1 < n; ++j) {
        for (std::size_t k = j + 1; k < n; ++k) consider(i, j, k);
      }
    }
  } else {
    Rng rng(seed);
    for (int it = 0; it < iterations; ++it) {
      std::size_t i = rng.below(n), j = rng.below(n), k = rng.below(n);
      if (i == j || j == k || i == k) continue;
      consider(i, j, k);
    }
  }
  if (!any_valid) {
    throw InputError("ransac_circle: all sampled hypotheses were collinear, slice is unfittable");
  }

  RansacCircleResult result;
  result.support = best_support;
  result.inliers.assign(n, 0);
  count_inliers(points, best, inlier_tolerance, &result.inliers);

  Circle2 refined;
  if (kasa_fit(points, result.inliers, refined)) {
    std::vector<char> refined_mask(n, 0);
    int refined_support = count_inliers(points, refined, inlier_tolerance, &refined_mask);
    if (refined_support >= best_support) {
      result.circle = refined;
      result.inliers = std::move(refined_mask);
      return result;
    }
  }
  result.circle = best;
  return result;
}

}  // namespace forest
