#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "forest/core/types.hpp"

namespace forest {

/// Per-point predictions from an upstream model, parallel to the tree points
/// of a cloud (cloud order, non-tree points skipped): a 3D offset towards the
/// tree center and a 5D instance embedding.
struct EmbeddingAnnotation {
  std::vector<Point3> offsets;
  std::vector<std::array<double, 5>> embeddings;

  std::size_t size() const { return offsets.size(); }
  void validate() const;
};

/// Sidecar PLY: one vertex per tree point carrying x/y/z of that point plus
/// offset_x/_y/_z and emb_0..emb_4.
void write_embedding_ply(const EmbeddingAnnotation& annotation,
                         const LabeledPointCloud& cloud,
                         const std::filesystem::path& path);

EmbeddingAnnotation read_embedding_ply(const std::filesystem::path& path,
                                       const LabeledPointCloud& cloud);

}  // namespace forest
