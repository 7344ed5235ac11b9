#pragma once

#include <filesystem>
#include <string>

#include "forest/core/types.hpp"

namespace forest {

enum class PlyFormat { BinaryLittleEndian, Ascii };

/// Reads a PLY vertex cloud. Requires x/y/z; picks up the optional
/// intensity / return_number / scan_angle_rank / semantic / instance
/// properties and keeps any other scalar vertex property as a named extra
/// feature column. Unknown semantic codes map to Unlabeled; a missing
/// instance property yields instance = -1 everywhere.
/// Throws InputError with the byte offset on malformed or truncated files.
LabeledPointCloud read_ply(const std::filesystem::path& path);

/// Writes the cloud with float64 coordinates so that a read/write round trip
/// is bit-exact. crs_offset travels in a header comment.
void write_ply(const LabeledPointCloud& cloud, const std::filesystem::path& path,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

}  // namespace forest
