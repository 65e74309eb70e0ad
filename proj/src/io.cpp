#include "mws/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "mws/errors.hpp"

namespace mws {

namespace {

constexpr std::string_view kDistanceComment = "# malleable robot distance set, lengths in mm";
constexpr std::array<std::string_view, 8> kFixedKeys = {"d12", "d13", "d14", "d23",
                                                        "d24", "d34", "d35", "d45"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> to_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

double require_number(std::string_view s, std::string_view what, std::string_view where) {
  const auto v = to_number(s);
  if (!v) throw ParseError(fmt::format("{}{} is not a number: '{}'", where, what, s));
  return *v;
}

std::string at_line(std::size_t line) { return fmt::format("line {}: ", line); }

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

DistanceSetRecord record_from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::map<std::string, std::string> values;
  std::size_t index = 0;
  for (const auto& [key, value] : pairs) {
    ++index;
    if (!values.emplace(key, value).second) {
      throw ParseError(fmt::format("entry {}: duplicate key '{}'", index, key));
    }
  }

  DistanceSetRecord rec;
  std::array<double, 8> d{};
  for (std::size_t i = 0; i < kFixedKeys.size(); ++i) {
    const auto it = values.find(std::string(kFixedKeys[i]));
    if (it == values.end()) throw ParseError(fmt::format("missing key '{}'", kFixedKeys[i]));
    d[i] = require_number(it->second, kFixedKeys[i], "");
    if (d[i] < 0) throw ParseError(fmt::format("'{}' must be nonnegative", kFixedKeys[i]));
    values.erase(it);
  }
  rec.distances = DistanceSet::from_distances(d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7]);

  for (auto& [key, value] : values) {
    if (key == "name") {
      rec.name = value;
    } else if (key == "label") {
      rec.label = topology_from_string(value);
      if (!rec.label) throw ParseError(fmt::format("unknown label '{}'", value));
    } else if (key == "d15") {
      rec.d15 = require_number(value, key, "");
    } else if (key == "d25") {
      rec.d25 = require_number(value, key, "");
    } else {
      throw ParseError(fmt::format("unknown key '{}'", key));
    }
  }
  return rec;
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

void append_number(std::string& out, float v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

DistanceSetRecord parse_distance_set(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return record_from_pairs(pairs);
}

DistanceSetRecord parse_inline_distance_set(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string normalized(text);
  for (char& c : normalized) {
    if (c == ',' || c == ';') c = ' ';
  }
  for (auto token : split_ws(normalized)) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(fmt::format("inline entry '{}' is not key=value", token));
    }
    pairs.emplace_back(trim(token.substr(0, eq)), trim(token.substr(eq + 1)));
  }
  return record_from_pairs(pairs);
}

std::string format_distance_set(const DistanceSetRecord& record) {
  std::string out(kDistanceComment);
  out += '\n';
  if (!record.name.empty()) out += fmt::format("name = {}\n", record.name);
  if (record.label) out += fmt::format("label = {}\n", to_string(*record.label));
  const auto values = record.distances.values();
  for (std::size_t i = 0; i < kFixedKeys.size(); ++i) {
    out += fmt::format("{} = {:.9g}\n", kFixedKeys[i], std::sqrt(values[i]));
  }
  if (record.d15) out += fmt::format("d15 = {:.9g}\n", *record.d15);
  if (record.d25) out += fmt::format("d25 = {:.9g}\n", *record.d25);
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DistanceSetRecord load_distance_set(const std::string& path) {
  return parse_distance_set(read_text_file(path));
}

void save_distance_set(const std::string& path, const DistanceSetRecord& record) {
  std::ofstream out(path, std::ios::binary);
  out << format_distance_set(record);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
}

MarkerFrame parse_marker_frame(std::string_view text) {
  MarkerFrame frame;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_ws(line);
    if (fields[0] == "time") {
      if (fields.size() != 2 || frame.timestamp) {
        throw ParseError(fmt::format("line {}: expected a single 'time t'", line_no));
      }
      frame.timestamp = require_number(fields[1], "time", at_line(line_no));
      continue;
    }
    if (fields.size() != 4 || fields[0].size() != 2 || fields[0][0] != 'P' ||
        fields[0][1] < '1' || fields[0][1] > '5') {
      throw ParseError(fmt::format("line {}: expected 'P<1-5> x y z'", line_no));
    }
    const int label = fields[0][1] - '0';
    if (frame[label]) throw ParseError(fmt::format("line {}: duplicate {}", line_no, fields[0]));
    frame[label] = Vec3(require_number(fields[1], "x", at_line(line_no)),
                        require_number(fields[2], "y", at_line(line_no)),
                        require_number(fields[3], "z", at_line(line_no)));
  }
  return frame;
}

MarkerFrame load_marker_frame(const std::string& path) {
  return parse_marker_frame(read_text_file(path));
}

std::string format_marker_frame(const MarkerFrame& frame) {
  std::string out = "# marker positions in mm\n";
  if (frame.timestamp) out += fmt::format("time {}\n", *frame.timestamp);
  for (int label = 1; label <= 5; ++label) {
    if (const auto& p = frame[label]) {
      out += fmt::format("P{} {} {} {}\n", label, p->x(), p->y(), p->z());
    }
  }
  return out;
}

CsvCloudWriter::CsvCloudWriter(std::ostream& out) : out_(out) {
  out_ << kCsvUnitComment << '\n' << kCsvHeader << '\n';
}

void CsvCloudWriter::write(std::span<const SweepPoint> rows) {
  buffer_.clear();
  for (const auto& pt : rows) {
    append_number(buffer_, pt.theta1);
    buffer_ += ',';
    append_number(buffer_, pt.theta2);
    for (int k = 0; k < 3; ++k) {
      buffer_ += ',';
      append_number(buffer_, pt.position[k]);
    }
    buffer_ += ',';
    append_number(buffer_, pt.residual);
    buffer_ += '\n';
  }
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  count_ += rows.size();
}

void write_cloud_csv(std::ostream& out, std::span<const SweepPoint> points) {
  CsvCloudWriter writer(out);
  writer.write(points);
}

std::vector<SweepPoint> read_cloud_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvUnitComment) {
    throw ParseError("csv: missing unit comment line");
  }
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("csv: bad header");
  std::vector<SweepPoint> points;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    std::array<double, 6> v{};
    std::string_view rest(line);
    for (std::size_t k = 0; k < v.size(); ++k) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (k == v.size() - 1)) {
        throw ParseError(fmt::format("csv line {}: expected 6 fields", line_no));
      }
      const std::string_view field = rest.substr(0, comma);
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v[k]);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(fmt::format("csv line {}: bad number '{}'", line_no, field));
      }
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    points.push_back({v[0], v[1], Vec3(v[2], v[3], v[4]), v[5]});
  }
  return points;
}

MeshOutput build_mesh(const SweepCloud& grid, const AzimuthRange& wedge) {
  if (grid.points.size() != grid.rows * grid.cols) {
    throw std::invalid_argument("mesh needs the full, unmasked sweep grid");
  }
  MeshOutput mesh;
  std::vector<int> index(grid.points.size(), -1);
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    const auto& pt = grid.points[k];
    if (wedge.contains(azimuth_deg(pt.position))) continue;
    index[k] = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(pt.position);
    mesh.residuals.push_back(static_cast<float>(pt.residual));
  }
  const auto at = [&](std::size_t i, std::size_t j) { return index[i * grid.cols + j]; };
  const auto add = [&](int a, int b, int c) {
    if (a >= 0 && b >= 0 && c >= 0) mesh.faces.push_back({a, b, c});
  };
  for (std::size_t i = 0; i + 1 < grid.rows; ++i) {
    for (std::size_t j = 0; j + 1 < grid.cols; ++j) {
      add(at(i, j), at(i + 1, j), at(i + 1, j + 1));
      add(at(i, j), at(i + 1, j + 1), at(i, j + 1));
    }
  }
  return mesh;
}

void write_mesh_ply(std::ostream& out, const MeshOutput& mesh) {
  out << "ply\n"
      << "format ascii 1.0\n"
      << "comment malleable robot workspace, lengths in mm\n"
      << "element vertex " << mesh.vertices.size() << '\n'
      << "property double x\n"
      << "property double y\n"
      << "property double z\n"
      << "property float gamma_residual\n"
      << "element face " << mesh.faces.size() << '\n'
      << "property list uchar int vertex_indices\n"
      << "end_header\n";
  std::string buffer;
  for (std::size_t k = 0; k < mesh.vertices.size(); ++k) {
    buffer.clear();
    for (int c = 0; c < 3; ++c) {
      append_number(buffer, mesh.vertices[k][c]);
      buffer += ' ';
    }
    append_number(buffer, mesh.residuals[k]);
    buffer += '\n';
    out << buffer;
  }
  for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

MeshOutput read_mesh_ply(std::istream& in) {
  const auto expect = [&](std::string_view wanted) {
    std::string line;
    if (!std::getline(in, line) || line != wanted) {
      throw ParseError(fmt::format("ply: expected '{}', got '{}'", wanted, line));
    }
  };
  std::string line;
  expect("ply");
  expect("format ascii 1.0");

  std::size_t vertex_count = 0;
  std::size_t face_count = 0;
  std::vector<std::string> vertex_props;
  bool face_seen = false;
  bool face_list_seen = false;
  int section = 0;  // 1 = vertex, 2 = face
  while (true) {
    if (!std::getline(in, line)) throw ParseError("ply: header not terminated");
    if (line == "end_header") break;
    const auto f = split_ws(line);
    if (f.empty()) throw ParseError("ply: empty header line");
    if (f[0] == "comment" || f[0] == "obj_info") continue;
    if (f[0] == "element" && f.size() == 3) {
      const auto n = to_number(f[2]);
      if (!n || *n < 0 || *n != std::floor(*n)) throw ParseError("ply: bad element count");
      if (f[1] == "vertex" && section == 0) {
        vertex_count = static_cast<std::size_t>(*n);
        section = 1;
      } else if (f[1] == "face" && section == 1) {
        face_count = static_cast<std::size_t>(*n);
        face_seen = true;
        section = 2;
      } else {
        throw ParseError(fmt::format("ply: unexpected element '{}'", f[1]));
      }
      continue;
    }
    if (f[0] == "property" && section == 1 && f.size() == 3) {
      if (f[1] != "double" && f[1] != "float") throw ParseError("ply: vertex property type");
      vertex_props.emplace_back(f[2]);
      continue;
    }
    if (f[0] == "property" && section == 2 && !face_list_seen && f.size() == 5 &&
        f[1] == "list" && f[2] == "uchar" && f[3] == "int" && f[4] == "vertex_indices") {
      face_list_seen = true;
      continue;
    }
    throw ParseError(fmt::format("ply: unsupported header line '{}'", line));
  }
  const std::vector<std::string> expected_props = {"x", "y", "z", "gamma_residual"};
  if (vertex_props != expected_props) throw ParseError("ply: vertex properties must be x y z gamma_residual");
  if (!face_seen || !face_list_seen) throw ParseError("ply: missing face element");

  MeshOutput mesh;
  mesh.vertices.reserve(vertex_count);
  mesh.residuals.reserve(vertex_count);
  for (std::size_t k = 0; k < vertex_count; ++k) {
    if (!std::getline(in, line)) throw ParseError("ply: truncated vertex list");
    const auto f = split_ws(line);
    if (f.size() != 4) throw ParseError(fmt::format("ply: vertex {} needs 4 values", k));
    std::array<double, 4> v{};
    for (int c = 0; c < 4; ++c) {
      const auto n = to_number(f[c]);
      if (!n) throw ParseError(fmt::format("ply: vertex {} has a bad number", k));
      v[c] = *n;
    }
    mesh.vertices.emplace_back(v[0], v[1], v[2]);
    mesh.residuals.push_back(static_cast<float>(v[3]));
  }
  mesh.faces.reserve(face_count);
  for (std::size_t k = 0; k < face_count; ++k) {
    if (!std::getline(in, line)) throw ParseError("ply: truncated face list");
    const auto f = split_ws(line);
    if (f.size() != 4 || f[0] != "3") throw ParseError(fmt::format("ply: face {} must be a triangle", k));
    std::array<int, 3> tri{};
    for (int c = 0; c < 3; ++c) {
      const auto [ptr, ec] = std::from_chars(f[c + 1].data(), f[c + 1].data() + f[c + 1].size(), tri[c]);
      if (ec != std::errc() || ptr != f[c + 1].data() + f[c + 1].size() || tri[c] < 0 ||
          static_cast<std::size_t>(tri[c]) >= vertex_count) {
        throw ParseError(fmt::format("ply: face {} has an out-of-range index", k));
      }
    }
    mesh.faces.push_back(tri);
  }
  while (std::getline(in, line)) {
    if (!trim(line).empty()) throw ParseError("ply: trailing data after face list");
  }
  return mesh;
}

}  // namespace mws
