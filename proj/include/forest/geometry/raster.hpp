#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

/// Regular (x,y) height grid. Nodes sit at cell centers:
/// node(col, row) = (origin.x + (col + 0.5) * cell, origin.y + (row + 0.5) * cell),
/// rows counted from the south edge. `covered` marks nodes inside the 2D
/// convex hull of the interpolation sites.
struct HeightRaster {
  Point2 origin{0.0, 0.0};  // lower-left corner
  double cell = 0.5;
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  std::vector<double> heights;  // row-major, row 0 = south
  std::vector<char> covered;
  double coverage_fraction = 0.0;

  std::size_t index(std::size_t col, std::size_t row) const { return row * ncols + col; }
  Point2 node(std::size_t col, std::size_t row) const {
    return {origin.x + (static_cast<double>(col) + 0.5) * cell,
            origin.y + (static_cast<double>(row) + 0.5) * cell};
  }
  bool same_geometry(const HeightRaster& o) const {
    return ncols == o.ncols && nrows == o.nrows && cell == o.cell && origin.x == o.origin.x &&
           origin.y == o.origin.y;
  }

  /// Height at the node nearest (x,y). Prefers covered nodes; when the node
  /// is uncovered, falls back to the nearest covered node, and to the plain
  /// node value when nothing is covered.
  double sample(const Point2& xy) const;
};

/// Nearest-neighbour interpolation of scattered sites (x,y -> z) onto a grid.
/// Every node takes the height of its nearest site; a node is covered iff it
/// lies inside the convex hull of the sites (a degenerate hull covers
/// nothing). Throws InputError when sites is empty or the grid has no nodes.
HeightRaster nn_raster_interpolate(std::span<const Point3> sites, Point2 origin, double cell,
                                   std::size_t ncols, std::size_t nrows);

/// ESRI ASCII grid with NODATA_value -9999 on uncovered nodes.
void write_esri_ascii(const HeightRaster& raster, const std::filesystem::path& path);

}  // namespace forest
