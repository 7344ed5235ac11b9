#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

struct Hull2Result {
  std::vector<Point2> polygon;  // counterclockwise; empty or degenerate chain when area == 0
  double area = 0.0;
};

/// Andrew monotone-chain hull with shoelace area. Degenerate inputs
/// (< 3 points, collinear) return the chain and area 0.
Hull2Result convex_hull_2d(std::span<const Point2> points);

/// True when p lies inside or on the hull polygon. Degenerate polygons
/// (fewer than 3 vertices) contain nothing.
bool point_in_hull_2d(const Hull2Result& hull, const Point2& p, double eps = 1e-9);

struct Polyhedron {
  std::vector<Point3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;  // outward-oriented triangles
  bool degenerate = false;
};

struct Hull3Result {
  Polyhedron polyhedron;
  double volume = 0.0;
};

/// Quickhull. Degenerate inputs (< 4 points or rank < 3) return volume 0 and
/// an empty, flagged polyhedron. Face planes are exact to 1e-9 of the input
/// bounding-box diagonal.
Hull3Result convex_hull_3d(std::span<const Point3> points);

/// Largest signed distance of p above any face plane (<= 0 means inside).
double hull_plane_excess(const Polyhedron& poly, const Point3& p);

}  // namespace forest
