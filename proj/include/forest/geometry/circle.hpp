#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

struct Circle2 {
  Point2 center{0.0, 0.0};
  double radius = 0.0;

  bool contains(const Point2& p, double slack = 0.0) const {
    return distance(p, center) <= radius + slack;
  }
};

/// Smallest enclosing circle via randomized move-to-front Welzl (fixed
/// internal seed, expected linear time). Boundary inclusive.
/// Throws InputError on empty input.
Circle2 welzl_sec(std::span<const Point2> points);

struct RansacCircleResult {
  Circle2 circle;                // consensus circle, least-squares refined
  std::vector<char> inliers;    // mask w.r.t. the returned circle
  int support = 0;              // inlier count of the winning 3-point hypothesis
};

/// Robust circle fit from 3-point hypotheses. When the number of distinct
/// 3-subsets is <= iterations the hypotheses are enumerated exhaustively,
/// otherwise sampled with the given seed. The best-consensus circle is
/// refined by an algebraic least-squares fit on its inliers; the refinement
/// is kept only if it does not lose consensus.
/// A point is an inlier when | |p - center| - radius | <= inlier_tolerance.
/// Throws InputError if fewer than 3 points or every hypothesis is collinear.
RansacCircleResult ransac_circle(std::span<const Point2> points, double inlier_tolerance,
                                 int iterations, std::uint64_t seed);

/// Circumcircle of three points; returns false when they are (near) collinear.
bool circumcircle(const Point2& a, const Point2& b, const Point2& c, Circle2& out);

}  // namespace forest
