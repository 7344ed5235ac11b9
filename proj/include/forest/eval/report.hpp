#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "forest/eval/metrics.hpp"
#include "forest/inventory/inventory.hpp"

namespace forest {

struct EvaluationConfig {
  double iou_min = 0.5;
  RetrievalConfig retrieval;
};

struct StratumReport {
  DetectionCounts counts;
  DetectionMetrics metrics;
};

struct EvaluationReport {
  std::string plot_id;
  DetectionCounts counts;
  DetectionMetrics detection;
  SemanticMetrics semantic;

  // regressions over matched trees; absent when no usable pairs exist
  std::map<std::string, RegressionStats> attributes;
  std::optional<RegressionStats> dbh_field;  // against field-measured DBH
  bool field_data_used = false;

  std::optional<LocationMetrics> location;
  std::optional<DtmMetrics> dtm;

  StratumReport dominant;
  StratumReport understory;
  StratumReport all_trees;
  double strata_threshold = 0.0;

  MatchResult match;
};

/// Field-measured stem diameters: CSV with header tree_id,dbh_cm.
std::map<std::int32_t, double> read_field_dbh_csv(const std::filesystem::path& path);

/// Full evaluation protocol between a predicted and a reference labeling of
/// the same point array: instance matching, detection metrics, semantic
/// metrics, per-attribute regressions over matched trees, location and DTM
/// metrics, and dominant/understory strata.
EvaluationReport evaluate_clouds(const LabeledPointCloud& predicted,
                                 const LabeledPointCloud& reference,
                                 const std::map<std::int32_t, double>* field_dbh,
                                 const EvaluationConfig& config,
                                 const std::string& plot_id = "plot");

/// Pretty-printed JSON document of the report (stable field order).
std::string report_to_json(const EvaluationReport& report);

}  // namespace forest
