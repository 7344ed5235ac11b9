#include "forest/features/eigenfeatures.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "forest/core/spatial_index.hpp"

namespace forest {

const std::array<const char*, 9> kEigenFeatureNames = {
    "sum",       "omnivariance",      "eigenentropy", "anisotropy", "planarity",
    "linearity", "surface_variation", "sphericity",   "verticality"};

EigenFeatureVector eigenfeatures_of(std::span<const Point3> neighbors) {
  EigenFeatureVector f;
  const std::size_t n = neighbors.size();
  if (n < 3) return f;

  Point3 mean{0, 0, 0};
  for (const Point3& p : neighbors) mean = mean + p;
  mean = mean * (1.0 / static_cast<double>(n));

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Point3& p : neighbors) {
    Eigen::Vector3d d(p.x - mean.x, p.y - mean.y, p.z - mean.z);
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  // ascending from Eigen; we want descending
  Eigen::Vector3d lambda = solver.eigenvalues().reverse();
  for (int i = 0; i < 3; ++i) lambda[i] = std::max(lambda[i], 0.0);
  double total = lambda.sum();
  if (!(total > 0.0)) return f;

  double e1 = lambda[0] / total, e2 = lambda[1] / total, e3 = lambda[2] / total;
  f.sum = total;
  f.omnivariance = std::cbrt(e1 * e2 * e3);
  auto plogp = [](double e) { return e > 0.0 ? -e * std::log(e) : 0.0; };
  f.eigenentropy = plogp(e1) + plogp(e2) + plogp(e3);
  if (e1 > 0.0) {
    f.anisotropy = (e1 - e3) / e1;
    f.planarity = (e2 - e3) / e1;
    f.linearity = (e1 - e2) / e1;
    f.sphericity = e3 / e1;
  }
  f.surface_variation = e3;

  // normal = direction of least variance (first column after reversal)
  Eigen::Vector3d normal = solver.eigenvectors().col(0);
  f.verticality = 1.0 - std::abs(normal.z());
  return f;
}

std::vector<EigenFeatureVector> eigenfeatures(std::span<const Point3> points,
                                              const Neighborhood& neighborhood) {
  if (neighborhood.k.has_value() == neighborhood.radius.has_value()) {
    throw ConfigError("eigenfeatures: specify exactly one of k or radius");
  }
  if (neighborhood.k && *neighborhood.k < 3) throw ConfigError("eigenfeatures: k must be >= 3");
  if (neighborhood.radius && !(*neighborhood.radius > 0.0)) {
    throw ConfigError("eigenfeatures: radius must be > 0");
  }

  std::vector<EigenFeatureVector> out(points.size());
  if (points.empty()) return out;

  SpatialIndex index = SpatialIndex::from_points(points, 3);
  std::vector<Point3> nb;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double q[3] = {points[i].x, points[i].y, points[i].z};
    std::vector<std::uint32_t> ids = neighborhood.k ? index.knn_query(q, *neighborhood.k)
                                                    : index.radius_query(q, *neighborhood.radius);
    nb.clear();
    nb.reserve(ids.size());
    for (std::uint32_t id : ids) nb.push_back(points[id]);
    out[i] = eigenfeatures_of(nb);
  }
  return out;
}

}  // namespace forest
