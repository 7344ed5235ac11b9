#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "forest/clustering/hdbscan.hpp"
#include "forest/core/types.hpp"
#include "forest/geometry/raster.hpp"

namespace forest {

using DtmRaster = HeightRaster;

struct RetrievalConfig {
  double dtm_cell = 0.5;

  /// 3D filter that drops isolated artefacts before height / crown volume
  HdbscanParams crown_filter{.min_cluster_size = 10, .min_samples = 5};
  /// 2D filter on the projected breast-height slice
  HdbscanParams dbh_filter{.min_cluster_size = 5, .min_samples = 3};

  double breast_height = 1.3;      // m above local ground
  double dbh_half_window = 0.5;    // initial slice half-width
  double dbh_widen_step = 0.1;     // widening step until enough points
  std::size_t dbh_min_points = 10; // widening target

  double ransac_tolerance = 0.02;  // m
  int ransac_iterations = 500;
  std::uint64_t ransac_seed = 1;

  void validate() const;
};

struct TreeRecord {
  std::int32_t tree_id = 0;
  Point2 location{0.0, 0.0};
  bool location_fallback = false;      // mean of all points, no circle fit
  double height = 0.0;                 // m
  std::optional<double> crown_diameter;  // m; absent without crown points
  double crown_volume_all = 0.0;       // m^3
  double crown_volume_live = 0.0;      // m^3
  bool volume_all_degenerate = false;  // < 4 non-coplanar points
  bool volume_live_degenerate = false;
  std::optional<double> dbh_cm;
  bool dbh_low_support = false;        // circle fit on fewer than dbh_min_points
  std::size_t point_count = 0;
};

struct PlotInventory {
  std::vector<TreeRecord> trees;
  double stand_density = 0.0;  // trees/ha
  double hull_area = 0.0;      // m^2
  DtmRaster dtm;
};

/// 0.5 m (configurable) DTM over the cloud's xy bounding box from the points
/// labeled Ground. Throws InputError when there are none.
DtmRaster compute_dtm(const LabeledPointCloud& cloud, double cell = 0.5);

/// Tree count divided by the area of the 2D convex hull of all tree points.
/// Throws InputError on a degenerate hull or when no instance exists.
struct StandDensity {
  double density = 0.0;  // trees/ha
  double hull_area = 0.0;
  std::size_t tree_count = 0;
};
StandDensity stand_density(const LabeledPointCloud& cloud);

/// Elevation difference between the highest point of the dominant HDBSCAN
/// cluster and the DTM at the tree's location (centroid unless given).
double tree_height(std::span<const Point3> instance_points, const DtmRaster& dtm,
                   const HdbscanParams& filter,
                   std::optional<Point2> location = std::nullopt);

/// 2 x the smallest enclosing circle radius of the projected crown points
/// (live + dead branches). Absent when the instance has no crown points.
std::optional<double> crown_diameter(std::span<const Point3> crown_points);

struct CrownVolumes {
  double all = 0.0;
  double live = 0.0;
  bool all_degenerate = false;
  bool live_degenerate = false;
};

/// Convex hull volumes of the HDBSCAN-dominant crown cluster; the live
/// variant restricts to live branches before filtering. Degenerate point
/// sets give volume 0 with the flag set.
CrownVolumes crown_volumes(std::span<const Point3> crown_all, std::span<const Point3> crown_live,
                           const HdbscanParams& filter);

struct DbhResult {
  std::optional<double> dbh_cm;
  Point2 location{0.0, 0.0};
  bool fallback = false;
  bool low_support = false;
  std::size_t slice_points = 0;
};

/// Stem slice around breast height (widened until dbh_min_points points),
/// HDBSCAN-filtered in 2D, then a RANSAC circle: diameter = DBH, center =
/// location. Falls back to the mean (x,y) of all instance points when no
/// fittable slice exists.
DbhResult dbh_and_location(std::span<const Point3> instance_points,
                           std::span<const SemanticClass> instance_semantic, double ground_z,
                           const RetrievalConfig& config);

/// Per-tree records plus plot-level DTM and stand density. Per-tree failures
/// become absent attributes; only a missing ground class is fatal.
PlotInventory build_inventory(const LabeledPointCloud& cloud, const RetrievalConfig& config,
                              int threads = 1);

/// CSV with header tree_id,x,y,height_m,crown_diameter_m,crown_volume_all_m3,
/// crown_volume_live_m3,dbh_cm,location_fallback. Absent attributes are empty
/// fields.
void write_tree_csv(std::span<const TreeRecord> records, const std::filesystem::path& path);

}  // namespace forest
