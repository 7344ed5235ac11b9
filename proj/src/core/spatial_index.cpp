#include "forest/core/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace forest {

namespace {

double dist2(const double* a, std::span<const double> b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) {
    double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

}  // namespace

SpatialIndex::SpatialIndex(std::vector<double> coords, int dim)
    : coords_(std::move(coords)), dim_(dim) {
  if (dim_ < 1) throw InputError("spatial index dimension must be >= 1");
  if (coords_.empty()) throw InputError("cannot build a spatial index over an empty point array");
  if (coords_.size() % dim_ != 0) {
    throw InputError("coordinate array size is not a multiple of the dimension");
  }
  count_ = coords_.size() / dim_;
  order_.resize(count_);
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * count_ / kLeafSize + 2);
  root_ = build(0, static_cast<std::uint32_t>(count_));
}

SpatialIndex SpatialIndex::from_points(std::span<const Point3> points, int dim) {
  if (dim != 2 && dim != 3) throw InputError("from_points supports dim 2 or 3");
  std::vector<double> coords;
  coords.reserve(points.size() * dim);
  for (const Point3& p : points) {
    coords.push_back(p.x);
    coords.push_back(p.y);
    if (dim == 3) coords.push_back(p.z);
  }
  return SpatialIndex(std::move(coords), dim);
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  if (end - begin <= kLeafSize) {
    nodes_.push_back(node);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  // split on the axis with the widest spread
  int best_axis = 0;
  double best_spread = -1.0;
  for (int d = 0; d < dim_; ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::uint32_t i = begin; i < end; ++i) {
      double v = point(order_[i])[d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_axis = d;
    }
  }
  if (best_spread == 0.0) {  // all points identical: keep as leaf
    nodes_.push_back(node);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     double va = point(a)[best_axis], vb = point(b)[best_axis];
                     if (va != vb) return va < vb;
                     return a < b;
                   });
  node.axis = static_cast<std::int16_t>(best_axis);
  node.split = point(order_[mid])[best_axis];
  std::int32_t self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  std::int32_t left = build(begin, mid);
  std::int32_t right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

std::vector<std::uint32_t> SpatialIndex::radius_query(std::span<const double> q,
                                                      double radius) const {
  if (static_cast<int>(q.size()) != dim_) throw InputError("query dimension mismatch");
  if (radius < 0.0) throw InputError("radius must be >= 0");
  std::vector<std::uint32_t> out;
  radius_rec(root_, q, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void SpatialIndex::radius_rec(std::int32_t ni, std::span<const double> q, double r2,
                              std::vector<std::uint32_t>& out) const {
  const Node& node = nodes_[ni];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      std::uint32_t idx = order_[i];
      if (dist2(point(idx), q, dim_) <= r2) out.push_back(idx);
    }
    return;
  }
  double delta = q[node.axis] - node.split;
  // the median point sits in the right child, so both subtrees can hold
  // points on either side of the plane only up to the split value itself
  if (delta <= 0.0 || delta * delta <= r2) radius_rec(node.left, q, r2, out);
  if (delta >= 0.0 || delta * delta <= r2) radius_rec(node.right, q, r2, out);
}

std::vector<std::uint32_t> SpatialIndex::knn_query(std::span<const double> q,
                                                   std::size_t k) const {
  if (static_cast<int>(q.size()) != dim_) throw InputError("query dimension mismatch");
  k = std::min(k, count_);
  if (k == 0) return {};
  std::vector<std::pair<double, std::uint32_t>> heap;  // max-heap on (dist2, index)
  heap.reserve(k + 1);
  knn_rec(root_, q, k, heap);
  std::sort(heap.begin(), heap.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  std::vector<std::uint32_t> out(heap.size());
  for (std::size_t i = 0; i < heap.size(); ++i) out[i] = heap[i].second;
  return out;
}

void SpatialIndex::knn_rec(std::int32_t ni, std::span<const double> q, std::size_t k,
                           std::vector<std::pair<double, std::uint32_t>>& heap) const {
  // worst candidate ordering: larger distance first, then larger index, so the
  // kept set matches the lexicographic (distance, index) order of a full sort
  auto cmp = [](const std::pair<double, std::uint32_t>& a,
                const std::pair<double, std::uint32_t>& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  };
  const Node& node = nodes_[ni];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      std::uint32_t idx = order_[i];
      double d2 = dist2(point(idx), q, dim_);
      if (heap.size() < k) {
        heap.emplace_back(d2, idx);
        std::push_heap(heap.begin(), heap.end(), cmp);
      } else if (cmp({d2, idx}, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        heap.back() = {d2, idx};
        std::push_heap(heap.begin(), heap.end(), cmp);
      }
    }
    return;
  }
  double delta = q[node.axis] - node.split;
  std::int32_t near = delta <= 0.0 ? node.left : node.right;
  std::int32_t far = delta <= 0.0 ? node.right : node.left;
  knn_rec(near, q, k, heap);
  if (heap.size() < k || delta * delta <= heap.front().first) {
    knn_rec(far, q, k, heap);
  }
}

}  // namespace forest
