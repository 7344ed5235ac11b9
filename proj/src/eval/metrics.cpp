#include "forest/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <boost/math/distributions/students_t.hpp>

namespace forest {

SemanticMetrics semantic_metrics(std::span<const SemanticClass> reference,
                                 std::span<const SemanticClass> predicted) {
  if (reference.size() != predicted.size()) {
    throw InputError("semantic_metrics: label arrays differ in length");
  }
  SemanticMetrics m;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference[i] == SemanticClass::Unlabeled) continue;
    if (predicted[i] == SemanticClass::Unlabeled) {
      throw InputError("semantic_metrics: predicted label is Unlabeled at evaluated point " +
                       std::to_string(i));
    }
    std::size_t r = static_cast<std::size_t>(reference[i]) - 1;
    std::size_t p = static_cast<std::size_t>(predicted[i]) - 1;
    m.confusion.counts[r][p] += 1;
  }

  const std::size_t total = m.confusion.total();
  std::size_t trace = 0;
  double recall_sum = 0.0, iou_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < kNumSemanticClasses; ++c) {
    std::size_t tp = m.confusion.counts[c][c];
    std::size_t ref_count = 0, pred_count = 0;
    for (std::size_t j = 0; j < kNumSemanticClasses; ++j) {
      ref_count += m.confusion.counts[c][j];
      pred_count += m.confusion.counts[j][c];
    }
    trace += tp;
    m.class_present[c] = ref_count > 0;
    std::size_t denom = ref_count + pred_count - tp;  // TP + FP + FN
    m.class_iou[c] = denom > 0 ? static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
    if (ref_count > 0) {
      ++present;
      recall_sum += static_cast<double>(tp) / static_cast<double>(ref_count);
      iou_sum += m.class_iou[c];
    }
  }
  if (total > 0) m.overall_accuracy = static_cast<double>(trace) / static_cast<double>(total);
  if (present > 0) {
    m.mean_class_accuracy = recall_sum / static_cast<double>(present);
    m.mean_iou = iou_sum / static_cast<double>(present);
  }
  return m;
}

MatchResult match_instances(std::span<const std::int32_t> reference,
                            std::span<const std::int32_t> predicted, double iou_min) {
  if (reference.size() != predicted.size()) {
    throw InputError("match_instances: labelings differ in length");
  }

  std::map<std::int32_t, std::size_t> ref_size, pred_size;
  std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> inter;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    std::int32_t r = reference[i], p = predicted[i];
    if (r >= 0) ++ref_size[r];
    if (p >= 0) ++pred_size[p];
    if (r >= 0 && p >= 0) ++inter[{r, p}];
  }

  struct Pair {
    double iou;
    std::int32_t ref, pred;
  };
  std::vector<Pair> pairs;
  pairs.reserve(inter.size());
  for (const auto& [key, shared] : inter) {
    double uni = static_cast<double>(ref_size[key.first] + pred_size[key.second] - shared);
    pairs.push_back({static_cast<double>(shared) / uni, key.first, key.second});
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.pred != b.pred) return a.pred < b.pred;
    return a.ref < b.ref;
  });

  MatchResult result;
  result.iou_min = iou_min;
  std::set<std::int32_t> used_ref, used_pred;
  for (const Pair& pair : pairs) {
    if (pair.iou < iou_min) break;
    if (used_ref.count(pair.ref) || used_pred.count(pair.pred)) continue;
    used_ref.insert(pair.ref);
    used_pred.insert(pair.pred);
    result.matches.push_back({pair.ref, pair.pred, pair.iou});
  }
  for (const auto& [id, size] : ref_size) {
    if (!used_ref.count(id)) result.unmatched_reference.push_back(id);
  }
  for (const auto& [id, size] : pred_size) {
    if (!used_pred.count(id)) result.unmatched_predicted.push_back(id);
  }
  return result;
}

DetectionCounts detection_counts(const MatchResult& match) {
  DetectionCounts c;
  c.true_positive = match.matches.size();
  c.false_negative = match.unmatched_reference.size();
  c.false_positive = match.unmatched_predicted.size();
  c.reference_trees = c.true_positive + c.false_negative;
  return c;
}

DetectionMetrics detection_metrics(const DetectionCounts& counts) {
  if (counts.reference_trees != counts.true_positive + counts.false_negative) {
    throw InputError("detection_metrics: N != TP + FN");
  }
  DetectionMetrics m;
  const double n = static_cast<double>(counts.reference_trees);
  const double tp = static_cast<double>(counts.true_positive);
  const double fn = static_cast<double>(counts.false_negative);
  const double fp = static_cast<double>(counts.false_positive);
  if (counts.reference_trees == 0 || counts.true_positive + counts.false_positive == 0) {
    m.undefined = true;
    return m;
  }
  m.completeness = tp / n;
  m.omission_error = fn / n;
  m.commission_error = fp / (tp + fp);
  m.precision = tp / (tp + fp);
  double r = m.completeness, p = m.precision;
  m.f_score = r + p > 0.0 ? 2.0 * r * p / (r + p) : 0.0;
  m.accuracy_index = (tp - fp) / n;
  m.matching_score = tp / (n + fp);
  return m;
}

RegressionStats attribute_regression(std::span<const double> reference,
                                     std::span<const double> predicted) {
  if (reference.size() != predicted.size()) {
    throw InputError("attribute_regression: arrays differ in length");
  }
  if (reference.empty()) throw InputError("attribute_regression: no pairs");

  RegressionStats stats;
  stats.n = reference.size();
  const double n = static_cast<double>(stats.n);

  double sq = 0.0, ref_sum = 0.0;
  for (std::size_t i = 0; i < stats.n; ++i) {
    double d = predicted[i] - reference[i];
    sq += d * d;
    ref_sum += reference[i];
  }
  stats.rmse = std::sqrt(sq / n);
  double ref_mean = ref_sum / n;
  stats.rmse_percent = ref_mean != 0.0 ? stats.rmse / ref_mean : 0.0;

  if (stats.n < 3) return stats;  // slope and p-value need 3+ pairs

  double pred_mean = 0.0;
  for (double v : predicted) pred_mean += v;
  pred_mean /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < stats.n; ++i) {
    double dx = reference[i] - ref_mean, dy = predicted[i] - pred_mean;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0)) return stats;  // zero-variance reference: slope undefined

  stats.slope_defined = true;
  stats.slope = sxy / sxx;
  stats.intercept = pred_mean - stats.slope * ref_mean;
  stats.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;

  // two-sided t test of slope != 0
  double ss_res = syy - stats.slope * sxy;
  if (ss_res <= 0.0) {
    stats.p_value = 0.0;
  } else {
    double dof = n - 2.0;
    double se = std::sqrt(ss_res / dof / sxx);
    if (se == 0.0) {
      stats.p_value = 0.0;
    } else {
      double t = std::abs(stats.slope) / se;
      boost::math::students_t_distribution<double> dist(dof);
      stats.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
    }
  }
  return stats;
}

LocationMetrics location_metrics(std::span<const Point2> reference,
                                 std::span<const Point2> predicted) {
  if (reference.size() != predicted.size()) {
    throw InputError("location_metrics: arrays differ in length");
  }
  if (reference.empty()) throw InputError("location_metrics: no pairs");
  LocationMetrics m;
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    Point2 d = predicted[i] - reference[i];
    m.deviations.push_back(d);
    sx += d.x * d.x;
    sy += d.y * d.y;
  }
  const double n = static_cast<double>(reference.size());
  m.rmse_x = std::sqrt(sx / n);
  m.rmse_y = std::sqrt(sy / n);
  m.mean_rmse = (m.rmse_x + m.rmse_y) / 2.0;
  return m;
}

DtmMetrics dtm_metrics(const HeightRaster& predicted, const HeightRaster& reference) {
  if (!predicted.same_geometry(reference)) {
    throw InputError("dtm_metrics: raster grids differ");
  }
  DtmMetrics m;
  m.coverage = predicted.coverage_fraction;
  double sq = 0.0;
  for (std::size_t i = 0; i < predicted.heights.size(); ++i) {
    if (!predicted.covered[i] || !reference.covered[i]) continue;
    double d = predicted.heights[i] - reference.heights[i];
    sq += d * d;
    ++m.compared_cells;
  }
  if (m.compared_cells > 0) {
    m.rmse_cm = 100.0 * std::sqrt(sq / static_cast<double>(m.compared_cells));
  }
  return m;
}

Stratification stratify_dominant(std::span<const double> heights) {
  if (heights.empty()) throw InputError("stratify_dominant: no reference trees");
  Stratification s;
  double tallest = *std::max_element(heights.begin(), heights.end());
  s.threshold = tallest / 3.0;
  for (std::size_t i = 0; i < heights.size(); ++i) {
    if (heights[i] > s.threshold) {
      s.dominant.push_back(i);
    } else {
      s.understory.push_back(i);
    }
  }
  return s;
}

}  // namespace forest
