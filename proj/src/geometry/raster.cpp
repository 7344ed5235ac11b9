#include "forest/geometry/raster.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "forest/core/spatial_index.hpp"
#include "forest/geometry/hull.hpp"

namespace forest {

double HeightRaster::sample(const Point2& xy) const {
  if (heights.empty()) throw InputError("sampling an empty raster");
  auto clamp_axis = [](double v, std::size_t count) {
    double c = std::floor(v);
    if (c < 0.0) c = 0.0;
    if (c > static_cast<double>(count - 1)) c = static_cast<double>(count - 1);
    return static_cast<std::size_t>(c);
  };
  std::size_t col = clamp_axis((xy.x - origin.x) / cell, ncols);
  std::size_t row = clamp_axis((xy.y - origin.y) / cell, nrows);
  if (covered[index(col, row)]) return heights[index(col, row)];

  // nearest covered node, if any
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = index(col, row);
  bool found = false;
  for (std::size_t r = 0; r < nrows; ++r) {
    for (std::size_t c = 0; c < ncols; ++c) {
      if (!covered[index(c, r)]) continue;
      Point2 nd = node(c, r);
      double d2 = (nd - xy).norm2();
      if (d2 < best) {
        best = d2;
        best_idx = index(c, r);
        found = true;
      }
    }
  }
  (void)found;
  return heights[best_idx];
}

HeightRaster nn_raster_interpolate(std::span<const Point3> sites, Point2 origin, double cell,
                                   std::size_t ncols, std::size_t nrows) {
  if (sites.empty()) throw InputError("nearest-neighbour rasterization needs at least one site");
  if (!(cell > 0.0)) throw ConfigError("raster cell size must be > 0");
  if (ncols == 0 || nrows == 0) throw InputError("raster extent is empty");

  HeightRaster raster;
  raster.origin = origin;
  raster.cell = cell;
  raster.ncols = ncols;
  raster.nrows = nrows;
  raster.heights.resize(ncols * nrows);
  raster.covered.assign(ncols * nrows, 0);

  std::vector<double> coords;
  coords.reserve(sites.size() * 2);
  std::vector<Point2> site_xy;
  site_xy.reserve(sites.size());
  for (const Point3& s : sites) {
    coords.push_back(s.x);
    coords.push_back(s.y);
    site_xy.push_back({s.x, s.y});
  }
  SpatialIndex index(std::move(coords), 2);
  Hull2Result hull = convex_hull_2d(site_xy);

  std::size_t covered_count = 0;
  for (std::size_t row = 0; row < nrows; ++row) {
    for (std::size_t col = 0; col < ncols; ++col) {
      Point2 nd = raster.node(col, row);
      double q[2] = {nd.x, nd.y};
      std::uint32_t nearest = index.nearest(q);
      raster.heights[raster.index(col, row)] = sites[nearest].z;
      if (point_in_hull_2d(hull, nd)) {
        raster.covered[raster.index(col, row)] = 1;
        ++covered_count;
      }
    }
  }
  raster.coverage_fraction = static_cast<double>(covered_count) / static_cast<double>(ncols * nrows);
  return raster;
}

void write_esri_ascii(const HeightRaster& raster, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << "ncols " << raster.ncols << "\n";
  out << "nrows " << raster.nrows << "\n";
  char tmp[64];
  std::snprintf(tmp, sizeof(tmp), "%.17g", raster.origin.x);
  out << "xllcorner " << tmp << "\n";
  std::snprintf(tmp, sizeof(tmp), "%.17g", raster.origin.y);
  out << "yllcorner " << tmp << "\n";
  std::snprintf(tmp, sizeof(tmp), "%.17g", raster.cell);
  out << "cellsize " << tmp << "\n";
  out << "NODATA_value -9999\n";
  for (std::size_t r = raster.nrows; r-- > 0;) {  // top row first
    for (std::size_t c = 0; c < raster.ncols; ++c) {
      if (c > 0) out << ' ';
      if (raster.covered[raster.index(c, r)]) {
        std::snprintf(tmp, sizeof(tmp), "%.6f", raster.heights[raster.index(c, r)]);
        out << tmp;
      } else {
        out << "-9999";
      }
    }
    out << '\n';
  }
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace forest
