#include "forest/core/ply_io.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

namespace forest {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

enum class ScalarType { I8, U8, I16, U16, I32, U32, F32, F64 };

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::I8:
    case ScalarType::U8: return 1;
    case ScalarType::I16:
    case ScalarType::U16: return 2;
    case ScalarType::I32:
    case ScalarType::U32:
    case ScalarType::F32: return 4;
    case ScalarType::F64: return 8;
  }
  return 0;
}

std::optional<ScalarType> parse_scalar_type(const std::string& s) {
  if (s == "char" || s == "int8") return ScalarType::I8;
  if (s == "uchar" || s == "uint8") return ScalarType::U8;
  if (s == "short" || s == "int16") return ScalarType::I16;
  if (s == "ushort" || s == "uint16") return ScalarType::U16;
  if (s == "int" || s == "int32") return ScalarType::I32;
  if (s == "uint" || s == "uint32") return ScalarType::U32;
  if (s == "float" || s == "float32") return ScalarType::F32;
  if (s == "double" || s == "float64") return ScalarType::F64;
  return std::nullopt;
}

bool is_integer_type(ScalarType t) { return t != ScalarType::F32 && t != ScalarType::F64; }

struct Property {
  std::string name;
  ScalarType type = ScalarType::F64;
  bool is_list = false;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;

  bool fixed_size() const {
    for (const auto& p : properties) {
      if (p.is_list) return false;
    }
    return true;
  }
  std::size_t record_size() const {
    std::size_t s = 0;
    for (const auto& p : properties) s += scalar_size(p.type);
    return s;
  }
};

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t offset,
                       const std::string& what) {
  throw InputError(path.string() + ": " + what + " (byte offset " + std::to_string(offset) + ")");
}

/// Pulls one header line out of the buffer; returns false at end of buffer.
bool next_line(const std::string& buf, std::size_t& pos, std::string& line) {
  if (pos >= buf.size()) return false;
  std::size_t end = buf.find('\n', pos);
  if (end == std::string::npos) {
    line = buf.substr(pos);
    pos = buf.size();
  } else {
    line = buf.substr(pos, end - pos);
    pos = end + 1;
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

double read_binary_scalar(const char* p, ScalarType t) {
  auto load = [&]<typename T>() {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  switch (t) {
    case ScalarType::I8: return load.operator()<std::int8_t>();
    case ScalarType::U8: return load.operator()<std::uint8_t>();
    case ScalarType::I16: return load.operator()<std::int16_t>();
    case ScalarType::U16: return load.operator()<std::uint16_t>();
    case ScalarType::I32: return load.operator()<std::int32_t>();
    case ScalarType::U32: return load.operator()<std::uint32_t>();
    case ScalarType::F32: return load.operator()<float>();
    case ScalarType::F64: return load.operator()<double>();
  }
  return 0.0;
}

struct ParsedHeader {
  PlyFormat format = PlyFormat::BinaryLittleEndian;
  std::vector<Element> elements;
  Point3 crs_offset{0, 0, 0};
  std::size_t payload_start = 0;
};

ParsedHeader parse_header(const std::filesystem::path& path, const std::string& buf) {
  ParsedHeader hdr;
  std::size_t pos = 0;
  std::string line;
  if (!next_line(buf, pos, line) || line != "ply") fail(path, 0, "not a PLY file (missing 'ply')");

  bool have_format = false, ended = false;
  while (!ended) {
    std::size_t line_start = pos;
    if (!next_line(buf, pos, line)) fail(path, buf.size(), "header ended before end_header");
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") {
      if (tok.size() == 5 && tok[1] == "crs_offset") {
        hdr.crs_offset = {std::stod(tok[2]), std::stod(tok[3]), std::stod(tok[4])};
      }
      continue;
    }
    if (tok[0] == "format") {
      if (tok.size() < 2) fail(path, line_start, "malformed format line");
      if (tok[1] == "ascii") {
        hdr.format = PlyFormat::Ascii;
      } else if (tok[1] == "binary_little_endian") {
        hdr.format = PlyFormat::BinaryLittleEndian;
      } else {
        fail(path, line_start, "unsupported PLY format '" + tok[1] + "'");
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) fail(path, line_start, "malformed element line");
      Element e;
      e.name = tok[1];
      std::int64_t cnt = -1;
      auto [ptr, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), cnt);
      if (ec != std::errc{} || cnt < 0) fail(path, line_start, "bad element count '" + tok[2] + "'");
      e.count = static_cast<std::size_t>(cnt);
      hdr.elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (hdr.elements.empty()) fail(path, line_start, "property before any element");
      Property p;
      if (tok.size() == 5 && tok[1] == "list") {
        auto count_t = parse_scalar_type(tok[2]);
        auto value_t = parse_scalar_type(tok[3]);
        if (!count_t || !value_t) fail(path, line_start, "bad list property types");
        p.is_list = true;
        p.type = *value_t;
        p.name = tok[4];
      } else if (tok.size() == 3) {
        auto t = parse_scalar_type(tok[1]);
        if (!t) fail(path, line_start, "unknown property type '" + tok[1] + "'");
        p.type = *t;
        p.name = tok[2];
      } else {
        fail(path, line_start, "malformed property line");
      }
      hdr.elements.back().properties.push_back(std::move(p));
    } else if (tok[0] == "end_header") {
      ended = true;
    } else {
      fail(path, line_start, "unrecognized header line '" + tok[0] + "'");
    }
  }
  if (!have_format) fail(path, pos, "missing format line");
  hdr.payload_start = pos;
  return hdr;
}

}  // namespace

LabeledPointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  ParsedHeader hdr = parse_header(path, buf);

  const Element* vertex = nullptr;
  std::size_t offset = hdr.payload_start;

  // locate the vertex element, skipping any elements stored before it
  std::size_t vertex_elem_index = hdr.elements.size();
  for (std::size_t ei = 0; ei < hdr.elements.size(); ++ei) {
    if (hdr.elements[ei].name == "vertex") {
      vertex = &hdr.elements[ei];
      vertex_elem_index = ei;
      break;
    }
  }
  if (!vertex) fail(path, hdr.payload_start, "no 'vertex' element");
  if (vertex->fixed_size() == false) {
    fail(path, hdr.payload_start, "list properties on the vertex element are not supported");
  }

  if (hdr.format == PlyFormat::BinaryLittleEndian) {
    for (std::size_t ei = 0; ei < vertex_elem_index; ++ei) {
      const Element& e = hdr.elements[ei];
      if (!e.fixed_size()) {
        fail(path, offset, "cannot skip element '" + e.name + "' with list properties");
      }
      offset += e.count * e.record_size();
    }
  }

  // column layout of the vertex element
  int ix = -1, iy = -1, iz = -1, i_intensity = -1, i_return = -1, i_angle = -1, i_semantic = -1,
      i_instance = -1;
  std::vector<int> extra_columns;
  for (std::size_t c = 0; c < vertex->properties.size(); ++c) {
    const Property& p = vertex->properties[c];
    int ci = static_cast<int>(c);
    if (p.name == "x") {
      ix = ci;
    } else if (p.name == "y") {
      iy = ci;
    } else if (p.name == "z") {
      iz = ci;
    } else if (p.name == "intensity") {
      i_intensity = ci;
    } else if (p.name == "return_number") {
      i_return = ci;
    } else if (p.name == "scan_angle_rank") {
      i_angle = ci;
    } else if (p.name == "semantic" && is_integer_type(p.type)) {
      i_semantic = ci;
    } else if (p.name == "instance" && is_integer_type(p.type)) {
      i_instance = ci;
    } else {
      extra_columns.push_back(ci);
    }
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    fail(path, hdr.payload_start, "vertex element is missing x/y/z properties");
  }

  const std::size_t n = vertex->count;
  const std::size_t ncols = vertex->properties.size();
  LabeledPointCloud cloud;
  cloud.crs_offset = hdr.crs_offset;
  cloud.points.resize(n);
  cloud.semantic.assign(n, SemanticClass::Unlabeled);
  cloud.instance.assign(n, kNoInstance);
  if (i_intensity >= 0) cloud.intensity.resize(n);
  if (i_return >= 0) cloud.return_number.resize(n);
  if (i_angle >= 0) cloud.scan_angle_rank.resize(n);
  for (int c : extra_columns) cloud.extra_names.push_back(vertex->properties[c].name);
  cloud.extra.resize(n * extra_columns.size());

  std::vector<double> row(ncols);
  auto store_row = [&](std::size_t i) {
    cloud.points[i] = {row[ix], row[iy], row[iz]};
    if (i_semantic >= 0) {
      double code = row[i_semantic];
      cloud.semantic[i] = code >= 1 && code <= 5
                              ? static_cast<SemanticClass>(static_cast<unsigned>(code))
                              : SemanticClass::Unlabeled;
    }
    if (i_instance >= 0) cloud.instance[i] = static_cast<std::int32_t>(row[i_instance]);
    if (i_intensity >= 0) cloud.intensity[i] = static_cast<float>(row[i_intensity]);
    if (i_return >= 0) cloud.return_number[i] = static_cast<std::uint8_t>(row[i_return]);
    if (i_angle >= 0) cloud.scan_angle_rank[i] = static_cast<std::int8_t>(row[i_angle]);
    for (std::size_t e = 0; e < extra_columns.size(); ++e) {
      cloud.extra[i * extra_columns.size() + e] = row[extra_columns[e]];
    }
  };

  if (hdr.format == PlyFormat::BinaryLittleEndian) {
    const std::size_t rec = vertex->record_size();
    for (std::size_t i = 0; i < n; ++i) {
      if (offset + rec > buf.size()) {
        fail(path, offset,
             "truncated payload: vertex " + std::to_string(i) + " of " + std::to_string(n) +
                 " is incomplete");
      }
      std::size_t field_off = offset;
      for (std::size_t c = 0; c < ncols; ++c) {
        const Property& p = vertex->properties[c];
        row[c] = read_binary_scalar(buf.data() + field_off, p.type);
        field_off += scalar_size(p.type);
      }
      store_row(i);
      offset += rec;
    }
  } else {
    std::size_t pos = offset;
    std::string line;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t line_start = pos;
      // skip blank lines between records
      auto tokens = std::vector<std::string>{};
      while (tokens.empty()) {
        line_start = pos;
        if (!next_line(buf, pos, line)) {
          fail(path, buf.size(),
               "truncated payload: vertex " + std::to_string(i) + " of " + std::to_string(n) +
                   " is missing");
        }
        tokens = split_ws(line);
      }
      if (tokens.size() < ncols) {
        fail(path, line_start, "vertex " + std::to_string(i) + " has " +
                                   std::to_string(tokens.size()) + " values, expected " +
                                   std::to_string(ncols));
      }
      for (std::size_t c = 0; c < ncols; ++c) {
        char* endp = nullptr;
        row[c] = std::strtod(tokens[c].c_str(), &endp);
        if (endp == tokens[c].c_str()) {
          fail(path, line_start, "unparseable value '" + tokens[c] + "'");
        }
      }
      store_row(i);
    }
  }

  cloud.validate();
  return cloud;
}

namespace {

void append_binary(std::string& out, const void* p, std::size_t size) {
  out.append(reinterpret_cast<const char*>(p), size);
}

std::string format_double(double v) {
  char tmp[32];
  std::snprintf(tmp, sizeof(tmp), "%.17g", v);
  return tmp;
}

}  // namespace

void write_ply(const LabeledPointCloud& cloud, const std::filesystem::path& path,
               PlyFormat format) {
  cloud.validate();

  std::string header = "ply\n";
  header += format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  if (cloud.crs_offset.x != 0.0 || cloud.crs_offset.y != 0.0 || cloud.crs_offset.z != 0.0) {
    header += "comment crs_offset " + format_double(cloud.crs_offset.x) + " " +
              format_double(cloud.crs_offset.y) + " " + format_double(cloud.crs_offset.z) + "\n";
  }
  header += "element vertex " + std::to_string(cloud.size()) + "\n";
  header += "property double x\nproperty double y\nproperty double z\n";
  if (!cloud.intensity.empty()) header += "property float intensity\n";
  if (!cloud.return_number.empty()) header += "property uchar return_number\n";
  if (!cloud.scan_angle_rank.empty()) header += "property char scan_angle_rank\n";
  header += "property uchar semantic\nproperty int instance\n";
  for (const auto& name : cloud.extra_names) header += "property double " + name + "\n";
  header += "end_header\n";

  std::string body;
  const std::size_t n = cloud.size();
  if (format == PlyFormat::BinaryLittleEndian) {
    std::size_t rec = 3 * 8 + 1 + 4 + (cloud.intensity.empty() ? 0 : 4) +
                      (cloud.return_number.empty() ? 0 : 1) +
                      (cloud.scan_angle_rank.empty() ? 0 : 1) + 8 * cloud.extra_names.size();
    body.reserve(n * rec);
    for (std::size_t i = 0; i < n; ++i) {
      append_binary(body, &cloud.points[i].x, 8);
      append_binary(body, &cloud.points[i].y, 8);
      append_binary(body, &cloud.points[i].z, 8);
      if (!cloud.intensity.empty()) append_binary(body, &cloud.intensity[i], 4);
      if (!cloud.return_number.empty()) append_binary(body, &cloud.return_number[i], 1);
      if (!cloud.scan_angle_rank.empty()) append_binary(body, &cloud.scan_angle_rank[i], 1);
      auto sem = static_cast<std::uint8_t>(cloud.semantic[i]);
      append_binary(body, &sem, 1);
      append_binary(body, &cloud.instance[i], 4);
      for (std::size_t e = 0; e < cloud.extra_names.size(); ++e) {
        double v = cloud.extra_at(i, e);
        append_binary(body, &v, 8);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::string line = format_double(cloud.points[i].x) + " " +
                         format_double(cloud.points[i].y) + " " + format_double(cloud.points[i].z);
      if (!cloud.intensity.empty()) {
        char tmp[24];
        std::snprintf(tmp, sizeof(tmp), "%.9g", cloud.intensity[i]);
        line += std::string(" ") + tmp;
      }
      if (!cloud.return_number.empty()) line += " " + std::to_string(cloud.return_number[i]);
      if (!cloud.scan_angle_rank.empty()) line += " " + std::to_string(cloud.scan_angle_rank[i]);
      line += " " + std::to_string(static_cast<unsigned>(cloud.semantic[i]));
      line += " " + std::to_string(cloud.instance[i]);
      for (std::size_t e = 0; e < cloud.extra_names.size(); ++e) {
        line += " " + format_double(cloud.extra_at(i, e));
      }
      body += line + "\n";
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << header << body;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace forest
