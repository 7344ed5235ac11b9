#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "forest/core/error.hpp"

namespace forest {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm2() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(norm2()); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Point3& a, const Point3& b) { return (a - b).norm(); }

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Point2& o) const { return x * o.x + y * o.y; }
  double cross(const Point2& o) const { return x * o.y - y * o.x; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

/// Semantic codes match the on-disk PLY encoding.
enum class SemanticClass : std::uint8_t {
  Unlabeled = 0,
  LowVegetation = 1,
  Ground = 2,
  Stem = 3,
  LiveBranches = 4,
  DeadBranches = 5,
};

constexpr int kNumSemanticClasses = 5;  // Unlabeled is not a class, just absence of one
constexpr std::int32_t kNoInstance = -1;

inline bool is_tree_class(SemanticClass c) {
  return c == SemanticClass::Stem || c == SemanticClass::LiveBranches ||
         c == SemanticClass::DeadBranches;
}

inline SemanticClass semantic_from_code(unsigned code) {
  return code >= 1 && code <= 5 ? static_cast<SemanticClass>(code) : SemanticClass::Unlabeled;
}

const char* semantic_name(SemanticClass c);

/// Per-class counts of labeled points, indexed by class code - 1.
struct ClassHistogram {
  std::array<std::size_t, kNumSemanticClasses> counts{};

  std::size_t& operator[](SemanticClass c) { return counts.at(static_cast<std::size_t>(c) - 1); }
  std::size_t operator[](SemanticClass c) const { return counts.at(static_cast<std::size_t>(c) - 1); }
  std::size_t total() const {
    std::size_t t = 0;
    for (auto n : counts) t += n;
    return t;
  }
};

/// A point cloud with parallel semantic / instance labels and optional sensor
/// attributes stored as columns (a column is either empty or has size N).
/// Coordinates are plot-local; crs_offset georeferences them.
struct LabeledPointCloud {
  std::vector<Point3> points;
  std::vector<SemanticClass> semantic;
  std::vector<std::int32_t> instance;

  std::vector<float> intensity;
  std::vector<std::uint8_t> return_number;
  std::vector<std::int8_t> scan_angle_rank;
  std::vector<std::string> extra_names;
  std::vector<double> extra;  // row-major N x extra_names.size()

  Point3 crs_offset{0.0, 0.0, 0.0};

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  std::size_t extra_dim() const { return extra_names.size(); }
  double extra_at(std::size_t point, std::size_t feature) const {
    return extra[point * extra_names.size() + feature];
  }

  /// Throws InvariantError if any parallel-array or label invariant is broken.
  void validate() const;

  /// Copy of the rows selected by `indices`, attributes included.
  LabeledPointCloud subset(const std::vector<std::uint32_t>& indices) const;
};

ClassHistogram class_histogram(const LabeledPointCloud& cloud);

}  // namespace forest
