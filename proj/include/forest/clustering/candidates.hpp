#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

enum class CandidateProvenance { OffsetClustering, EmbeddingClustering, External };

struct InstanceCandidate {
  std::vector<std::uint32_t> indices;  // tree-point indices, ascending
  double score = 0.0;                  // in [0, 1] once scored
  CandidateProvenance provenance = CandidateProvenance::OffsetClustering;
};

/// Adds the predicted offsets to the coordinates and connects shifted points
/// within distance_threshold (single-linkage region growing). Components
/// smaller than min_cluster_size are dropped.
std::vector<InstanceCandidate> region_grow_shifted(std::span<const Point3> points,
                                                   std::span<const Point3> offsets,
                                                   double distance_threshold,
                                                   std::size_t min_cluster_size);

struct MeanShiftParams {
  double bandwidth = 0.6;
  int max_iterations = 300;
  double tolerance = 1e-4;
};

struct MeanShiftResult {
  std::vector<InstanceCandidate> candidates;
  std::vector<std::vector<double>> modes;  // one per candidate
  std::size_t non_converged = 0;           // assigned to their nearest mode
};

/// Flat-kernel mean shift over row-major d-dimensional vectors. Each point
/// ascends to a mode; points whose modes lie within bandwidth/2 share a
/// cluster. Non-converged points join the nearest established mode.
MeanShiftResult mean_shift(std::span<const double> vectors, int dim, const MeanShiftParams& params);

/// Attaches scores: verbatim from `external` when given (must match the
/// candidate count), otherwise the documented geometric surrogate
///   score = h / (h + 10 * mean_nn_spacing),  h = vertical extent,
/// which prefers tall, densely sampled candidates. Single-point candidates
/// score 0.
std::vector<InstanceCandidate> score_candidates(std::vector<InstanceCandidate> candidates,
                                                const LabeledPointCloud& cloud,
                                                const std::vector<double>* external = nullptr);

struct NmsResult {
  std::vector<InstanceCandidate> kept;   // instance id = position in this list
  std::vector<std::int32_t> labels;      // per cloud point; -1 = unassigned
};

/// Greedy non-maximum suppression in descending score order. A candidate is
/// kept iff its point-set IoU with every kept candidate is < iou_threshold;
/// points claimed by several kept candidates go to the higher-scoring one.
NmsResult greedy_nms(std::span<const InstanceCandidate> scored, std::size_t cloud_size,
                     double iou_threshold);

/// |A intersect B| / |A union B| for ascending index sets.
double point_set_iou(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

}  // namespace forest
