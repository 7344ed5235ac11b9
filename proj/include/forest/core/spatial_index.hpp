#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

/// kd-tree over an immutable point array. Works for any small dimension
/// (2D xy, 3D xyz, 5D embeddings). Queries return exactly what a linear scan
/// would: radius results are index-sorted sets, k-NN results are ordered by
/// (distance, index).
class SpatialIndex {
 public:
  /// coords is row-major, size() == n * dim. Throws InputError when empty.
  SpatialIndex(std::vector<double> coords, int dim);

  /// dim must be 2 (uses x,y) or 3.
  static SpatialIndex from_points(std::span<const Point3> points, int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return count_; }

  const double* point(std::size_t i) const { return coords_.data() + i * dim_; }

  /// All indices within `radius` of q (boundary inclusive), ascending.
  std::vector<std::uint32_t> radius_query(std::span<const double> q, double radius) const;

  /// The k nearest indices, sorted by (distance, index). k is clamped to n.
  std::vector<std::uint32_t> knn_query(std::span<const double> q, std::size_t k) const;

  std::uint32_t nearest(std::span<const double> q) const { return knn_query(q, 1).front(); }

 private:
  struct Node {
    // leaf: [begin, end) into order_; internal: split axis/value and children
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
    std::int16_t axis = -1;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void radius_rec(std::int32_t node, std::span<const double> q, double r2,
                  std::vector<std::uint32_t>& out) const;
  void knn_rec(std::int32_t node, std::span<const double> q, std::size_t k,
               std::vector<std::pair<double, std::uint32_t>>& heap) const;

  std::vector<double> coords_;
  int dim_;
  std::size_t count_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;

  static constexpr std::uint32_t kLeafSize = 16;
};

}  // namespace forest
