#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "forest/core/types.hpp"
#include "forest/geometry/raster.hpp"

namespace forest {

/// rows = reference class, columns = predicted class, both indexed code-1
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumSemanticClasses>, kNumSemanticClasses> counts{};

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : counts) {
      for (auto v : row) t += v;
    }
    return t;
  }
};

struct SemanticMetrics {
  ConfusionMatrix confusion;
  double overall_accuracy = 0.0;
  double mean_class_accuracy = 0.0;  // mean recall over reference-present classes
  double mean_iou = 0.0;             // mean over reference-present classes
  std::array<double, kNumSemanticClasses> class_iou{};
  std::array<bool, kNumSemanticClasses> class_present{};
};

/// Point-level semantic metrics; reference Unlabeled points are excluded.
/// Throws InputError on length mismatch or a predicted Unlabeled on an
/// evaluated point.
SemanticMetrics semantic_metrics(std::span<const SemanticClass> reference,
                                 std::span<const SemanticClass> predicted);

struct InstanceMatch {
  std::int32_t reference_id = -1;
  std::int32_t predicted_id = -1;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<InstanceMatch> matches;          // one-to-one, descending IoU
  std::vector<std::int32_t> unmatched_reference;  // false negatives
  std::vector<std::int32_t> unmatched_predicted;  // false positives
  double iou_min = 0.5;
};

/// Greedy one-to-one point-set IoU matching. Pairs are taken in descending
/// IoU (ties: lower predicted id, then lower reference id); pairs below
/// iou_min stay unmatched.
MatchResult match_instances(std::span<const std::int32_t> reference,
                            std::span<const std::int32_t> predicted, double iou_min = 0.5);

struct DetectionCounts {
  std::size_t reference_trees = 0;  // N = TP + FN
  std::size_t true_positive = 0;
  std::size_t false_negative = 0;
  std::size_t false_positive = 0;
};

DetectionCounts detection_counts(const MatchResult& match);

struct DetectionMetrics {
  double completeness = 0.0;      // TP / N          (recall)
  double omission_error = 0.0;    // FN / N
  double commission_error = 0.0;  // FP / (TP + FP)
  double precision = 0.0;         // TP / (TP + FP)
  double f_score = 0.0;           // 2rp / (r + p)
  double accuracy_index = 0.0;    // (TP - FP) / N
  double matching_score = 0.0;    // TP / (N + FP)
  bool undefined = false;         // N == 0 or TP + FP == 0
};

DetectionMetrics detection_metrics(const DetectionCounts& counts);

struct RegressionStats {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double p_value = 1.0;        // two-sided test of slope != 0
  double rmse = 0.0;           // predicted vs reference, attribute units
  double rmse_percent = 0.0;   // rmse / mean(reference)
  std::size_t n = 0;
  bool slope_defined = false;  // needs >= 3 pairs and reference variance > 0
};

/// Ordinary least squares of predicted on reference over matched pairs.
RegressionStats attribute_regression(std::span<const double> reference,
                                     std::span<const double> predicted);

struct LocationMetrics {
  double rmse_x = 0.0;
  double rmse_y = 0.0;
  double mean_rmse = 0.0;
  std::vector<Point2> deviations;  // predicted - reference per matched tree
};

LocationMetrics location_metrics(std::span<const Point2> reference,
                                 std::span<const Point2> predicted);

struct DtmMetrics {
  double rmse_cm = 0.0;       // over cells covered in both rasters
  double coverage = 0.0;      // of the predicted raster
  std::size_t compared_cells = 0;
};

DtmMetrics dtm_metrics(const HeightRaster& predicted, const HeightRaster& reference);

struct Stratification {
  double threshold = 0.0;                 // max height / 3
  std::vector<std::size_t> dominant;      // indices of trees taller than it
  std::vector<std::size_t> understory;
};

/// Trees taller than 1/3 of the tallest tree are dominant (strictly taller).
Stratification stratify_dominant(std::span<const double> heights);

}  // namespace forest
