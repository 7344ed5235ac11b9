#include "forest/clustering/embedding.hpp"

#include <cmath>

#include "forest/core/ply_io.hpp"

namespace forest {

void EmbeddingAnnotation::validate() const {
  if (offsets.size() != embeddings.size()) {
    throw InputError("embedding annotation: offsets and embeddings are not parallel");
  }
  for (const Point3& o : offsets) {
    if (!o.finite()) throw InputError("embedding annotation: non-finite offset");
  }
}

namespace {

std::size_t tree_point_count(const LabeledPointCloud& cloud) {
  std::size_t n = 0;
  for (SemanticClass c : cloud.semantic) n += is_tree_class(c) ? 1 : 0;
  return n;
}

const std::vector<std::string> kColumns = {"offset_x", "offset_y", "offset_z", "emb_0",
                                           "emb_1",    "emb_2",    "emb_3",    "emb_4"};

}  // namespace

void write_embedding_ply(const EmbeddingAnnotation& annotation, const LabeledPointCloud& cloud,
                         const std::filesystem::path& path) {
  annotation.validate();
  if (annotation.size() != tree_point_count(cloud)) {
    throw InputError("embedding annotation does not match the cloud's tree point count");
  }
  LabeledPointCloud sidecar;
  sidecar.extra_names = kColumns;
  std::size_t row = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!is_tree_class(cloud.semantic[i])) continue;
    sidecar.points.push_back(cloud.points[i]);
    sidecar.semantic.push_back(cloud.semantic[i]);
    sidecar.instance.push_back(kNoInstance);
    const Point3& o = annotation.offsets[row];
    const auto& e = annotation.embeddings[row];
    for (double v : {o.x, o.y, o.z, e[0], e[1], e[2], e[3], e[4]}) sidecar.extra.push_back(v);
    ++row;
  }
  // instance stays -1 in the sidecar; semantic is carried for sanity checks
  write_ply(sidecar, path);
}

EmbeddingAnnotation read_embedding_ply(const std::filesystem::path& path,
                                       const LabeledPointCloud& cloud) {
  LabeledPointCloud sidecar = read_ply(path);
  if (sidecar.extra_names.size() < kColumns.size()) {
    throw InputError("embedding sidecar '" + path.string() + "' is missing offset/emb columns");
  }
  std::array<std::size_t, 8> col{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    bool found = false;
    for (std::size_t e = 0; e < sidecar.extra_names.size(); ++e) {
      if (sidecar.extra_names[e] == kColumns[c]) {
        col[c] = e;
        found = true;
        break;
      }
    }
    if (!found) {
      throw InputError("embedding sidecar is missing column '" + kColumns[c] + "'");
    }
  }
  if (sidecar.size() != tree_point_count(cloud)) {
    throw InputError("embedding sidecar has " + std::to_string(sidecar.size()) +
                     " rows, expected one per tree point (" +
                     std::to_string(tree_point_count(cloud)) + ")");
  }
  EmbeddingAnnotation out;
  out.offsets.resize(sidecar.size());
  out.embeddings.resize(sidecar.size());
  for (std::size_t i = 0; i < sidecar.size(); ++i) {
    out.offsets[i] = {sidecar.extra_at(i, col[0]), sidecar.extra_at(i, col[1]),
                      sidecar.extra_at(i, col[2])};
    for (int d = 0; d < 5; ++d) out.embeddings[i][d] = sidecar.extra_at(i, col[3 + d]);
  }
  out.validate();
  return out;
}

}  // namespace forest
