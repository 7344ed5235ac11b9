#include "forest/inventory/inventory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include "forest/geometry/circle.hpp"
#include "forest/geometry/hull.hpp"

namespace forest {

void RetrievalConfig::validate() const {
  if (!(dtm_cell > 0.0)) throw ConfigError("dtm_cell must be > 0");
  crown_filter.validate();
  dbh_filter.validate();
  if (!(breast_height > 0.0)) throw ConfigError("breast_height must be > 0");
  if (!(dbh_half_window > 0.0)) throw ConfigError("dbh_half_window must be > 0");
  if (!(dbh_widen_step > 0.0)) throw ConfigError("dbh_widen_step must be > 0");
  if (dbh_min_points < 3) throw ConfigError("dbh_min_points must be >= 3");
  if (!(ransac_tolerance > 0.0)) throw ConfigError("ransac_tolerance must be > 0");
  if (ransac_iterations < 1) throw ConfigError("ransac_iterations must be >= 1");
}

DtmRaster compute_dtm(const LabeledPointCloud& cloud, double cell) {
  std::vector<Point3> ground;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.semantic[i] == SemanticClass::Ground) ground.push_back(cloud.points[i]);
  }
  if (ground.empty()) throw InputError("compute_dtm: no points labeled Ground");
  if (cloud.empty()) throw InputError("compute_dtm: empty cloud");

  Point2 lo{cloud.points[0].x, cloud.points[0].y}, hi = lo;
  for (const Point3& p : cloud.points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  auto cells = [cell](double extent) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(extent / cell)));
  };
  return nn_raster_interpolate(ground, lo, cell, cells(hi.x - lo.x), cells(hi.y - lo.y));
}

StandDensity stand_density(const LabeledPointCloud& cloud) {
  std::vector<Point2> tree_xy;
  std::vector<char> seen_instance;
  std::size_t count = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!is_tree_class(cloud.semantic[i])) continue;
    tree_xy.push_back({cloud.points[i].x, cloud.points[i].y});
    std::int32_t inst = cloud.instance[i];
    if (inst >= 0) {
      if (static_cast<std::size_t>(inst) >= seen_instance.size()) {
        seen_instance.resize(inst + 1, 0);
      }
      if (!seen_instance[inst]) {
        seen_instance[inst] = 1;
        ++count;
      }
    }
  }
  if (count == 0) throw InputError("stand_density: no tree instances");
  Hull2Result hull = convex_hull_2d(tree_xy);
  if (!(hull.area > 0.0)) {
    throw InputError("stand_density: degenerate convex hull of the tree points");
  }
  StandDensity out;
  out.tree_count = count;
  out.hull_area = hull.area;
  out.density = static_cast<double>(count) / (hull.area / 1e4);
  return out;
}

double tree_height(std::span<const Point3> instance_points, const DtmRaster& dtm,
                   const HdbscanParams& filter, std::optional<Point2> location) {
  if (instance_points.empty()) throw InputError("tree_height: empty instance");
  auto clusters = hdbscan(instance_points, filter);
  double top = -std::numeric_limits<double>::infinity();
  for (std::uint32_t idx : hdbscan_dominant_indices(clusters)) {
    top = std::max(top, instance_points[idx].z);
  }
  Point2 anchor;
  if (location) {
    anchor = *location;
  } else {
    Point3 mean{0, 0, 0};
    for (const Point3& p : instance_points) mean = mean + p;
    mean = mean * (1.0 / static_cast<double>(instance_points.size()));
    anchor = {mean.x, mean.y};
  }
  return top - dtm.sample(anchor);
}

std::optional<double> crown_diameter(std::span<const Point3> crown_points) {
  if (crown_points.empty()) return std::nullopt;
  std::vector<Point2> xy;
  xy.reserve(crown_points.size());
  for (const Point3& p : crown_points) xy.push_back({p.x, p.y});
  return 2.0 * welzl_sec(xy).radius;
}

namespace {

std::pair<double, bool> filtered_hull_volume(std::span<const Point3> pts,
                                             const HdbscanParams& filter) {
  if (pts.size() < 4) return {0.0, true};
  auto clusters = hdbscan(pts, filter);
  std::vector<Point3> dominant;
  for (std::uint32_t idx : hdbscan_dominant_indices(clusters)) dominant.push_back(pts[idx]);
  auto hull = convex_hull_3d(dominant);
  return {hull.volume, hull.polyhedron.degenerate};
}

}  // namespace

CrownVolumes crown_volumes(std::span<const Point3> crown_all, std::span<const Point3> crown_live,
                           const HdbscanParams& filter) {
  CrownVolumes out;
  std::tie(out.all, out.all_degenerate) = filtered_hull_volume(crown_all, filter);
  std::tie(out.live, out.live_degenerate) = filtered_hull_volume(crown_live, filter);
  return out;
}

DbhResult dbh_and_location(std::span<const Point3> instance_points,
                           std::span<const SemanticClass> instance_semantic, double ground_z,
                           const RetrievalConfig& config) {
  if (instance_points.empty()) throw InputError("dbh_and_location: empty instance");
  DbhResult result;

  Point3 mean{0, 0, 0};
  for (const Point3& p : instance_points) mean = mean + p;
  mean = mean * (1.0 / static_cast<double>(instance_points.size()));
  result.location = {mean.x, mean.y};  // fallback until a circle fit succeeds

  std::vector<double> stem_rel_z;
  std::vector<Point2> stem_xy;
  for (std::size_t i = 0; i < instance_points.size(); ++i) {
    if (instance_semantic[i] != SemanticClass::Stem) continue;
    stem_rel_z.push_back(instance_points[i].z - ground_z);
    stem_xy.push_back({instance_points[i].x, instance_points[i].y});
  }
  if (stem_xy.empty()) {
    result.fallback = true;
    return result;
  }
  double stem_lo = *std::min_element(stem_rel_z.begin(), stem_rel_z.end());
  double stem_hi = *std::max_element(stem_rel_z.begin(), stem_rel_z.end());

  // widen the slice around breast height until it holds enough points or
  // spans the whole stem
  std::vector<Point2> slice;
  double half = config.dbh_half_window;
  while (true) {
    slice.clear();
    for (std::size_t i = 0; i < stem_xy.size(); ++i) {
      if (std::abs(stem_rel_z[i] - config.breast_height) <= half) slice.push_back(stem_xy[i]);
    }
    bool covers_stem = config.breast_height - half <= stem_lo &&
                       config.breast_height + half >= stem_hi;
    if (slice.size() >= config.dbh_min_points || covers_stem) break;
    half += config.dbh_widen_step;
  }
  result.slice_points = slice.size();
  if (slice.size() < 3) {
    result.fallback = true;
    return result;
  }

  // drop isolated projections before the circle fit
  std::vector<double> coords;
  coords.reserve(slice.size() * 2);
  for (const Point2& p : slice) {
    coords.push_back(p.x);
    coords.push_back(p.y);
  }
  auto clusters = hdbscan(coords, 2, config.dbh_filter);
  std::vector<Point2> kept;
  for (std::uint32_t idx : hdbscan_dominant_indices(clusters)) kept.push_back(slice[idx]);
  if (kept.size() < 3) {
    result.fallback = true;
    return result;
  }

  try {
    auto fit = ransac_circle(kept, config.ransac_tolerance, config.ransac_iterations,
                             config.ransac_seed);
    result.dbh_cm = 200.0 * fit.circle.radius;  // diameter in cm
    result.location = fit.circle.center;
    result.low_support = kept.size() < config.dbh_min_points;
  } catch (const InputError&) {
    result.fallback = true;  // collinear slice, keep the centroid location
  }
  return result;
}

namespace {

TreeRecord retrieve_tree(std::int32_t tree_id, const std::vector<std::uint32_t>& indices,
                         const LabeledPointCloud& cloud, const DtmRaster& dtm,
                         const RetrievalConfig& config) {
  TreeRecord record;
  record.tree_id = tree_id;
  record.point_count = indices.size();

  std::vector<Point3> pts;
  std::vector<SemanticClass> sem;
  std::vector<Point3> crown_all, crown_live;
  pts.reserve(indices.size());
  sem.reserve(indices.size());
  Point3 mean{0, 0, 0};
  for (std::uint32_t idx : indices) {
    const Point3& p = cloud.points[idx];
    pts.push_back(p);
    sem.push_back(cloud.semantic[idx]);
    mean = mean + p;
    if (cloud.semantic[idx] == SemanticClass::LiveBranches) {
      crown_all.push_back(p);
      crown_live.push_back(p);
    } else if (cloud.semantic[idx] == SemanticClass::DeadBranches) {
      crown_all.push_back(p);
    }
  }
  mean = mean * (1.0 / static_cast<double>(pts.size()));

  // pass 1: centroid anchors the ground level for the breast-height slice
  double ground = dtm.sample({mean.x, mean.y});
  DbhResult dbh = dbh_and_location(pts, sem, ground, config);
  record.dbh_cm = dbh.dbh_cm;
  record.location = dbh.location;
  record.location_fallback = dbh.fallback;
  record.dbh_low_support = dbh.low_support;

  // pass 2: height evaluated at the refined location
  record.height = tree_height(pts, dtm, config.crown_filter, record.location);

  record.crown_diameter = crown_diameter(crown_all);
  CrownVolumes volumes = crown_volumes(crown_all, crown_live, config.crown_filter);
  record.crown_volume_all = volumes.all;
  record.crown_volume_live = volumes.live;
  record.volume_all_degenerate = volumes.all_degenerate;
  record.volume_live_degenerate = volumes.live_degenerate;
  return record;
}

}  // namespace

PlotInventory build_inventory(const LabeledPointCloud& cloud, const RetrievalConfig& config,
                              int threads) {
  config.validate();
  cloud.validate();

  PlotInventory inventory;
  inventory.dtm = compute_dtm(cloud, config.dtm_cell);
  StandDensity density = stand_density(cloud);
  inventory.stand_density = density.density;
  inventory.hull_area = density.hull_area;

  std::map<std::int32_t, std::vector<std::uint32_t>> groups;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    if (cloud.instance[i] >= 0) groups[cloud.instance[i]].push_back(i);
  }

  std::vector<std::pair<std::int32_t, const std::vector<std::uint32_t>*>> work;
  work.reserve(groups.size());
  for (const auto& [id, indices] : groups) work.emplace_back(id, &indices);
  inventory.trees.resize(work.size());

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t w = begin; w < end; ++w) {
      inventory.trees[w] = retrieve_tree(work[w].first, *work[w].second, cloud, inventory.dtm,
                                         config);
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(work.size())));
  if (n_threads == 1) {
    run_range(0, work.size());
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (work.size() + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      std::size_t begin = t * chunk;
      std::size_t end = std::min(work.size(), begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return inventory;
}

void write_tree_csv(std::span<const TreeRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << "tree_id,x,y,height_m,crown_diameter_m,crown_volume_all_m3,crown_volume_live_m3,"
         "dbh_cm,location_fallback\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  for (const TreeRecord& r : records) {
    out << r.tree_id << ',' << num(r.location.x) << ',' << num(r.location.y) << ','
        << num(r.height) << ',' << (r.crown_diameter ? num(*r.crown_diameter) : std::string())
        << ',' << num(r.crown_volume_all) << ',' << num(r.crown_volume_live) << ','
        << (r.dbh_cm ? num(*r.dbh_cm) : std::string()) << ',' << (r.location_fallback ? 1 : 0)
        << '\n';
  }
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace forest
