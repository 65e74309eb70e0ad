#pragma once

// Text formats: distance-set files, marker files, CSV clouds and ascii PLY
// meshes. Every writer has a strict reader counterpart.

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mws/calibration.hpp"
#include "mws/kinematics.hpp"
#include "mws/surface.hpp"

namespace mws {

/// Distance-set file contents. Lengths are plain distances (not squares) in
/// mm, written as `key = value` lines in a fixed key order with 9
/// significant digits, so load -> save is byte-identical.
struct DistanceSetRecord {
  std::string name;
  std::optional<Topology> label;  ///< expected category, when known
  DistanceSet distances;
  std::optional<double> d15;  ///< reference-pose diagnostics
  std::optional<double> d25;
};

/// Parses `key = value` lines ('#' comments). Throws ParseError.
DistanceSetRecord parse_distance_set(std::string_view text);
/// Parses `d12=58,d13=671,...` (also accepts ';' or whitespace separators).
DistanceSetRecord parse_inline_distance_set(std::string_view text);
std::string format_distance_set(const DistanceSetRecord& record);

DistanceSetRecord load_distance_set(const std::string& path);
void save_distance_set(const std::string& path, const DistanceSetRecord& record);

/// Marker file: rows `P1 x y z` ... `P5 x y z` in mm, optional `time t`.
MarkerFrame parse_marker_frame(std::string_view text);
MarkerFrame load_marker_frame(const std::string& path);
std::string format_marker_frame(const MarkerFrame& frame);

/// Reads a whole file; throws ParseError when it cannot be opened.
std::string read_text_file(const std::string& path);

inline constexpr std::string_view kCsvUnitComment =
    "# units: theta1,theta2 deg; x,y,z mm; gamma_residual = |D|/L^8 (dimensionless)";
inline constexpr std::string_view kCsvHeader = "theta1,theta2,x,y,z,gamma_residual";

/// Streaming CSV cloud writer. Numbers use the shortest round-trip form.
class CsvCloudWriter {
public:
  explicit CsvCloudWriter(std::ostream& out);
  void write(std::span<const SweepPoint> rows);
  std::size_t rows_written() const { return count_; }

private:
  std::ostream& out_;
  std::string buffer_;
  std::size_t count_ = 0;
};

void write_cloud_csv(std::ostream& out, std::span<const SweepPoint> points);
/// Strict reader: unit comment, exact header, six numeric fields per row.
std::vector<SweepPoint> read_cloud_csv(std::istream& in);

/// Triangulated sweep grid.
struct MeshOutput {
  std::vector<Vec3> vertices;
  std::vector<float> residuals;  ///< per-vertex |Gamma| / L^8
  std::vector<std::array<int, 3>> faces;
};

/// Triangulates a full row-major grid cloud, dropping the vertices inside
/// `wedge` together with every triangle that touches them.
MeshOutput build_mesh(const SweepCloud& grid, const AzimuthRange& wedge = {});

void write_mesh_ply(std::ostream& out, const MeshOutput& mesh);
/// Strict ascii PLY reader for the layout written above.
MeshOutput read_mesh_ply(std::istream& in);

}  // namespace mws
