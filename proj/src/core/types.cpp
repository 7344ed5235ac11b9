#include "forest/core/types.hpp"

namespace forest {

const char* semantic_name(SemanticClass c) {
  switch (c) {
    case SemanticClass::Unlabeled: return "unlabeled";
    case SemanticClass::LowVegetation: return "low_vegetation";
    case SemanticClass::Ground: return "ground";
    case SemanticClass::Stem: return "stem";
    case SemanticClass::LiveBranches: return "live_branches";
    case SemanticClass::DeadBranches: return "dead_branches";
  }
  return "unknown";
}

void LabeledPointCloud::validate() const {
  const std::size_t n = points.size();
  auto check_len = [&](std::size_t len, const char* name) {
    if (len != n) {
      throw InvariantError(std::string("cloud column '") + name + "' has length " +
                           std::to_string(len) + ", expected " + std::to_string(n));
    }
  };
  check_len(semantic.size(), "semantic");
  check_len(instance.size(), "instance");
  if (!intensity.empty()) check_len(intensity.size(), "intensity");
  if (!return_number.empty()) check_len(return_number.size(), "return_number");
  if (!scan_angle_rank.empty()) check_len(scan_angle_rank.size(), "scan_angle_rank");
  if (!extra_names.empty() && extra.size() != n * extra_names.size()) {
    throw InvariantError("extra feature matrix is not rectangular: " +
                         std::to_string(extra.size()) + " values for " + std::to_string(n) +
                         " points x " + std::to_string(extra_names.size()) + " columns");
  }
  if (extra_names.empty() && !extra.empty()) {
    throw InvariantError("extra feature values present but no column names");
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!points[i].finite()) {
      throw InvariantError("non-finite coordinates at point " + std::to_string(i));
    }
    if (instance[i] >= 0 && !is_tree_class(semantic[i])) {
      throw InvariantError("point " + std::to_string(i) + " has instance " +
                           std::to_string(instance[i]) + " but non-tree class '" +
                           semantic_name(semantic[i]) + "'");
    }
    if (!return_number.empty() && return_number[i] < 1) {
      throw InvariantError("return_number < 1 at point " + std::to_string(i));
    }
  }
}

LabeledPointCloud LabeledPointCloud::subset(const std::vector<std::uint32_t>& indices) const {
  LabeledPointCloud out;
  out.crs_offset = crs_offset;
  out.extra_names = extra_names;
  const std::size_t m = indices.size();
  out.points.reserve(m);
  out.semantic.reserve(m);
  out.instance.reserve(m);
  if (!intensity.empty()) out.intensity.reserve(m);
  if (!return_number.empty()) out.return_number.reserve(m);
  if (!scan_angle_rank.empty()) out.scan_angle_rank.reserve(m);
  if (!extra_names.empty()) out.extra.reserve(m * extra_names.size());
  for (std::uint32_t idx : indices) {
    out.points.push_back(points.at(idx));
    out.semantic.push_back(semantic.at(idx));
    out.instance.push_back(instance.at(idx));
    if (!intensity.empty()) out.intensity.push_back(intensity[idx]);
    if (!return_number.empty()) out.return_number.push_back(return_number[idx]);
    if (!scan_angle_rank.empty()) out.scan_angle_rank.push_back(scan_angle_rank[idx]);
    for (std::size_t f = 0; f < extra_names.size(); ++f) {
      out.extra.push_back(extra_at(idx, f));
    }
  }
  return out;
}

ClassHistogram class_histogram(const LabeledPointCloud& cloud) {
  ClassHistogram h;
  for (SemanticClass c : cloud.semantic) {
    if (c != SemanticClass::Unlabeled) h[c] += 1;
  }
  return h;
}

}  // namespace forest
