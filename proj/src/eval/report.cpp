#include "forest/eval/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace forest {

std::map<std::int32_t, double> read_field_dbh_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open field DBH file '" + path.string() + "'");
  std::map<std::int32_t, double> out;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (first) {
      first = false;
      if (line.rfind("tree_id", 0) == 0) continue;  // header
    }
    std::istringstream ss(line);
    std::string id_str, dbh_str;
    if (!std::getline(ss, id_str, ',') || !std::getline(ss, dbh_str, ',')) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected tree_id,dbh_cm");
    }
    try {
      out[std::stoi(id_str)] = std::stod(dbh_str);
    } catch (const std::exception&) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": unparseable row '" +
                       line + "'");
    }
  }
  return out;
}

namespace {

bool has_instances(const LabeledPointCloud& cloud) {
  return std::any_of(cloud.instance.begin(), cloud.instance.end(),
                     [](std::int32_t i) { return i >= 0; });
}

bool has_ground(const LabeledPointCloud& cloud) {
  return std::any_of(cloud.semantic.begin(), cloud.semantic.end(),
                     [](SemanticClass c) { return c == SemanticClass::Ground; });
}

StratumReport stratum_report(std::size_t tp, std::size_t fn, std::size_t fp) {
  StratumReport r;
  r.counts = {tp + fn, tp, fn, fp};
  r.metrics = detection_metrics(r.counts);
  return r;
}

}  // namespace

EvaluationReport evaluate_clouds(const LabeledPointCloud& predicted,
                                 const LabeledPointCloud& reference,
                                 const std::map<std::int32_t, double>* field_dbh,
                                 const EvaluationConfig& config, const std::string& plot_id) {
  if (predicted.size() != reference.size()) {
    throw InputError("evaluate_clouds: point counts differ (" +
                     std::to_string(predicted.size()) + " vs " +
                     std::to_string(reference.size()) + ")");
  }

  EvaluationReport report;
  report.plot_id = plot_id;

  report.match = match_instances(reference.instance, predicted.instance, config.iou_min);
  report.counts = detection_counts(report.match);
  report.detection = detection_metrics(report.counts);
  report.semantic = semantic_metrics(reference.semantic, predicted.semantic);

  // attribute retrieval on both labelings (same coordinates)
  std::optional<PlotInventory> ref_inventory, pred_inventory;
  if (has_ground(reference) && has_instances(reference)) {
    ref_inventory = build_inventory(reference, config.retrieval);
  }
  if (has_ground(predicted) && has_instances(predicted)) {
    pred_inventory = build_inventory(predicted, config.retrieval);
  }

  if (ref_inventory && pred_inventory) {
    std::map<std::int32_t, const TreeRecord*> ref_by_id, pred_by_id;
    for (const auto& t : ref_inventory->trees) ref_by_id[t.tree_id] = &t;
    for (const auto& t : pred_inventory->trees) pred_by_id[t.tree_id] = &t;

    std::vector<double> h_ref, h_pred, d_ref, d_pred, va_ref, va_pred, vl_ref, vl_pred;
    std::vector<double> dbh_ref, dbh_pred, field_ref, field_pred;
    std::vector<Point2> loc_ref, loc_pred;
    for (const InstanceMatch& m : report.match.matches) {
      const TreeRecord* r = ref_by_id.count(m.reference_id) ? ref_by_id[m.reference_id] : nullptr;
      const TreeRecord* p = pred_by_id.count(m.predicted_id) ? pred_by_id[m.predicted_id] : nullptr;
      if (!r || !p) continue;
      h_ref.push_back(r->height);
      h_pred.push_back(p->height);
      if (r->crown_diameter && p->crown_diameter) {
        d_ref.push_back(*r->crown_diameter);
        d_pred.push_back(*p->crown_diameter);
      }
      if (!r->volume_all_degenerate && !p->volume_all_degenerate) {
        va_ref.push_back(r->crown_volume_all);
        va_pred.push_back(p->crown_volume_all);
      }
      if (!r->volume_live_degenerate && !p->volume_live_degenerate) {
        vl_ref.push_back(r->crown_volume_live);
        vl_pred.push_back(p->crown_volume_live);
      }
      if (r->dbh_cm && p->dbh_cm) {
        dbh_ref.push_back(*r->dbh_cm);
        dbh_pred.push_back(*p->dbh_cm);
      }
      if (field_dbh && field_dbh->count(m.reference_id) && p->dbh_cm) {
        field_ref.push_back(field_dbh->at(m.reference_id));
        field_pred.push_back(*p->dbh_cm);
      }
      loc_ref.push_back(r->location);
      loc_pred.push_back(p->location);
    }
    auto add_regression = [&](const std::string& name, const std::vector<double>& ref,
                              const std::vector<double>& pred) {
      if (!ref.empty()) report.attributes[name] = attribute_regression(ref, pred);
    };
    add_regression("height", h_ref, h_pred);
    add_regression("crown_diameter", d_ref, d_pred);
    add_regression("crown_volume_all", va_ref, va_pred);
    add_regression("crown_volume_live", vl_ref, vl_pred);
    add_regression("dbh", dbh_ref, dbh_pred);
    if (field_dbh) {
      report.field_data_used = true;
      if (!field_ref.empty()) report.dbh_field = attribute_regression(field_ref, field_pred);
    }
    if (!loc_ref.empty()) report.location = location_metrics(loc_ref, loc_pred);
    report.dtm = dtm_metrics(pred_inventory->dtm, ref_inventory->dtm);

    // strata: reference trees by height threshold; false positives by the
    // predicted tree's own height against the same threshold
    std::vector<double> ref_heights;
    std::vector<std::int32_t> ref_ids;
    for (const auto& t : ref_inventory->trees) {
      ref_heights.push_back(t.height);
      ref_ids.push_back(t.tree_id);
    }
    Stratification strata = stratify_dominant(ref_heights);
    report.strata_threshold = strata.threshold;
    std::set<std::int32_t> dominant_ref;
    for (std::size_t idx : strata.dominant) dominant_ref.insert(ref_ids[idx]);

    std::size_t tp_dom = 0, tp_und = 0, fn_dom = 0, fn_und = 0, fp_dom = 0, fp_und = 0;
    for (const InstanceMatch& m : report.match.matches) {
      (dominant_ref.count(m.reference_id) ? tp_dom : tp_und) += 1;
    }
    for (std::int32_t id : report.match.unmatched_reference) {
      (dominant_ref.count(id) ? fn_dom : fn_und) += 1;
    }
    for (std::int32_t id : report.match.unmatched_predicted) {
      const TreeRecord* p = pred_by_id.count(id) ? pred_by_id[id] : nullptr;
      bool dom = p && p->height > strata.threshold;
      (dom ? fp_dom : fp_und) += 1;
    }
    report.dominant = stratum_report(tp_dom, fn_dom, fp_dom);
    report.understory = stratum_report(tp_und, fn_und, fp_und);
    report.all_trees = stratum_report(tp_dom + tp_und, fn_dom + fn_und, fp_dom + fp_und);
  }

  return report;
}

namespace {

using nlohmann::json;

json to_json(const DetectionCounts& c) {
  return {{"reference_trees", c.reference_trees},
          {"true_positive", c.true_positive},
          {"false_negative", c.false_negative},
          {"false_positive", c.false_positive}};
}

json to_json(const DetectionMetrics& m) {
  return {{"completeness", m.completeness},
          {"omission_error", m.omission_error},
          {"commission_error", m.commission_error},
          {"precision", m.precision},
          {"f_score", m.f_score},
          {"accuracy_index", m.accuracy_index},
          {"matching_score", m.matching_score},
          {"undefined", m.undefined}};
}

json to_json(const RegressionStats& r) {
  return {{"slope", r.slope},
          {"intercept", r.intercept},
          {"r_squared", r.r_squared},
          {"p_value", r.p_value},
          {"rmse", r.rmse},
          {"rmse_percent", r.rmse_percent},
          {"n", r.n},
          {"slope_defined", r.slope_defined}};
}

const char* kClassNames[kNumSemanticClasses] = {"low_vegetation", "ground", "stem",
                                                "live_branches", "dead_branches"};

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
  json doc;
  doc["plot_id"] = report.plot_id;
  doc["detection"] = {{"counts", to_json(report.counts)}, {"metrics", to_json(report.detection)}};

  json confusion = json::array();
  for (const auto& row : report.semantic.confusion.counts) {
    confusion.push_back(row);
  }
  json class_iou;
  for (std::size_t c = 0; c < kNumSemanticClasses; ++c) {
    if (report.semantic.class_present[c]) class_iou[kClassNames[c]] = report.semantic.class_iou[c];
  }
  doc["semantic"] = {{"overall_accuracy", report.semantic.overall_accuracy},
                     {"mean_class_accuracy", report.semantic.mean_class_accuracy},
                     {"mean_iou", report.semantic.mean_iou},
                     {"class_iou", class_iou},
                     {"confusion", confusion}};

  json attributes;
  for (const auto& [name, stats] : report.attributes) attributes[name] = to_json(stats);
  doc["attributes"] = attributes;
  doc["field_data_used"] = report.field_data_used;
  if (report.dbh_field) doc["dbh_with_field_data"] = to_json(*report.dbh_field);

  if (report.location) {
    json deviations = json::array();
    for (const Point2& d : report.location->deviations) deviations.push_back({d.x, d.y});
    doc["location"] = {{"rmse_x", report.location->rmse_x},
                       {"rmse_y", report.location->rmse_y},
                       {"mean_rmse", report.location->mean_rmse},
                       {"deviations", deviations}};
  }
  if (report.dtm) {
    doc["dtm"] = {{"rmse_cm", report.dtm->rmse_cm},
                  {"coverage", report.dtm->coverage},
                  {"compared_cells", report.dtm->compared_cells}};
  }

  doc["strata"] = {
      {"threshold_m", report.strata_threshold},
      {"dominant",
       {{"counts", to_json(report.dominant.counts)}, {"metrics", to_json(report.dominant.metrics)}}},
      {"understory",
       {{"counts", to_json(report.understory.counts)},
        {"metrics", to_json(report.understory.metrics)}}},
      {"all",
       {{"counts", to_json(report.all_trees.counts)},
        {"metrics", to_json(report.all_trees.metrics)}}},
  };

  json matches = json::array();
  for (const InstanceMatch& m : report.match.matches) {
    matches.push_back({{"reference_id", m.reference_id},
                       {"predicted_id", m.predicted_id},
                       {"iou", m.iou}});
  }
  doc["matches"] = matches;
  doc["unmatched_reference"] = report.match.unmatched_reference;
  doc["unmatched_predicted"] = report.match.unmatched_predicted;

  return doc.dump(2) + "\n";
}

}  // namespace forest
