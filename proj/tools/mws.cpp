// mws: workspace analysis for two-joint malleable robots.
//
// Exit codes: 0 ok, 1 other geometry error, 2 unreadable input,
// 3 not embeddable, 4 write failure, 5 residual bound exceeded.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "mws/calibration.hpp"
#include "mws/datasets.hpp"
#include "mws/errors.hpp"
#include "mws/io.hpp"
#include "mws/kinematics.hpp"
#include "mws/surface.hpp"

namespace fs = std::filesystem;
using namespace mws;

namespace {

enum Exit { kOk = 0, kGeometry = 1, kBadInput = 2, kNotEmbeddable = 3, kWriteFailed = 4,
            kResidual = 5 };

struct WriteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResidualExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string input;
  std::string inline_set;
  std::string markers;
  double tau = 0.05;
  std::string branch = "positive";
  double max_projection = 0.005;

  std::string limits;
  double step = 0.088;
  int decimation = 32;
  bool full = false;
  std::string wedge;
  std::string format;
  std::string output;
  double residual_bound = 1e-6;
  unsigned threads = 0;

  std::string surface = "sphere";
  std::string frame;
};

std::string output_path(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  if (const char* dir = std::getenv("MWS_OUTPUT_DIR"); dir && *dir) {
    return (fs::path(dir) / path).string();
  }
  return path;
}

DistanceSetRecord record_from_markers(const std::string& path, bool need_effector) {
  const MarkerFrame frame = load_marker_frame(path);
  if (need_effector && !frame[5]) throw MissingMarker("marker P5 is missing");
  const MarkerDistances md = distances_from_markers(frame);
  DistanceSetRecord rec;
  rec.name = fs::path(path).stem().string();
  rec.distances = md.distances;
  if (md.s15) rec.d15 = std::sqrt(*md.s15);
  if (md.s25) rec.d25 = std::sqrt(*md.s25);
  return rec;
}

DistanceSetRecord load_input(const Options& o) {
  const int given = !o.input.empty() + !o.inline_set.empty() + !o.markers.empty();
  if (given != 1) {
    throw CLI::ValidationError("input", "give exactly one of <input>, --inline, --markers");
  }
  if (!o.inline_set.empty()) {
    auto rec = parse_inline_distance_set(o.inline_set);
    if (rec.name.empty()) rec.name = "inline";
    return rec;
  }
  if (!o.markers.empty()) return record_from_markers(o.markers, true);
  if (!fs::exists(o.input)) {
    if (auto rec = bundled_dataset(o.input)) return *rec;
  }
  auto rec = load_distance_set(o.input);
  if (rec.name.empty()) rec.name = fs::path(o.input).stem().string();
  return rec;
}

Branch parse_branch(const std::string& s) { return s == "negative" ? Branch::Negative : Branch::Positive; }

ConsistencyProjection prepare(const Options& o, const DistanceSetRecord& rec) {
  return project_consistent(rec.distances, o.max_projection, parse_branch(o.branch));
}

std::vector<double> split_numbers(const std::string& s, std::size_t want, const char* what) {
  std::vector<double> out;
  std::string_view rest(s);
  while (true) {
    const auto colon = rest.find(':');
    const std::string field(rest.substr(0, colon));
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != field.size()) {
      throw CLI::ValidationError(what, "expected numbers separated by ':'");
    }
    out.push_back(v);
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  if (out.size() != want) {
    throw CLI::ValidationError(what, fmt::format("expected {} values", want));
  }
  return out;
}

JointLimits limits_of(const Options& o) {
  JointLimits limits;
  if (!o.limits.empty()) {
    const auto v = split_numbers(o.limits, 4, "--limits");
    limits.theta1_min = v[0];
    limits.theta1_max = v[1];
    limits.theta2_min = v[2];
    limits.theta2_max = v[3];
  }
  limits.step = o.step;
  try {
    limits.validate();
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("--limits", e.what());
  }
  return limits;
}

AzimuthRange wedge_of(const Options& o) {
  if (o.wedge.empty()) return {};
  const auto v = split_numbers(o.wedge, 2, "--wedge");
  return {v[0], v[1]};
}

void print_projection(const ConsistencyProjection& proj) {
  fmt::print("strictly_embeddable: {}\n", proj.strictly_embeddable ? "yes" : "no");
  fmt::print("projection_max_delta_mm: {:.6g}\n", proj.max_delta);
  if (proj.max_delta > 0) fmt::print("projection_worst_pair: {}\n", proj.worst_pair);
}

int run_classify(const Options& o) {
  const auto rec = load_input(o);
  const auto proj = prepare(o, rec);
  const TopologyClass tc = classify(proj.embedding, o.tau);
  const double length = tc.scale;
  fmt::print("input: {}\n", rec.name);
  fmt::print("category: {}\n", to_string(tc.category()));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SphericalParams>) {
          fmt::print("radius: {:.6f}\n", p.radius);
        } else if constexpr (std::is_same_v<T, PumaParams>) {
          fmt::print("center_z: {:.6f}\nradius: {:.6f}\n", p.center_height, p.radius);
        } else if constexpr (std::is_same_v<T, ScaraParams>) {
          fmt::print("z5: {:.6f}\n", p.plane_height);
        } else {
          fmt::print("tube_radius: {:.6f}\n", p.tube_radius);
          fmt::print("foot_z_axis2: {:.6f}\n", p.foot_height_axis2);
          fmt::print("degenerate_tube: {}\n", p.degenerate_tube ? "yes" : "no");
        }
      },
      tc.params);
  fmt::print("g: {:.6f}\n", tc.axes.common_normal);
  fmt::print("alpha_deg: {:.6f}\n", tc.axes.angle * 180.0 / M_PI);
  fmt::print("z_star: {:.6f}\n", tc.axes.foot_height);
  fmt::print("L: {:.6f}\n", length);
  fmt::print("tau: {}\n", o.tau);
  if (rec.label) {
    fmt::print("label: {} ({})\n", to_string(*rec.label),
               *rec.label == tc.category() ? "match" : "differs");
  }
  print_projection(proj);
  return kOk;
}

int run_coeffs(const Options& o) {
  const auto rec = load_input(o);
  const auto proj = prepare(o, rec);
  const auto c = extract_coefficients(proj.projected);
  static constexpr const char* kTerms[] = {"r^4", "d12*z*r^2", "x^2+y^2", "z^2", "d12*z", "1"};
  fmt::print("# Gamma/L^8 = normalization * sum q_i * term_i, coordinates scaled by 1/L\n");
  for (std::size_t i = 0; i < c.q.size(); ++i) {
    fmt::print("q{} {:.17g} {}\n", i, c.q[i], kTerms[i]);
  }
  fmt::print("normalization {:.17g}\n", c.normalization);
  fmt::print("L {:.17g}\n", c.scale);
  fmt::print("holdout_residual {:.3e}\n", c.holdout_residual);
  fmt::print("condition {:.3e}\n", c.condition);
  return kOk;
}

// Opens the output file, or falls back to stdout for an empty path.
struct Sink {
  std::ofstream file;
  std::ostream* out = &std::cout;
  std::string path;

  explicit Sink(const std::string& requested) : path(output_path(requested)) {
    if (path.empty()) return;
    file.open(path, std::ios::binary);
    if (!file) throw WriteError("cannot open '" + path + "' for writing");
    out = &file;
  }
  void finish() {
    out->flush();
    if (!*out) throw WriteError("write to '" + (path.empty() ? "stdout" : path) + "' failed");
  }
  // Summaries go to stderr when the data itself goes to stdout.
  std::ostream& report() { return path.empty() ? std::cerr : std::cout; }
};

int run_sweep(const Options& o, bool mesh) {
  const auto rec = load_input(o);
  const auto proj = prepare(o, rec);
  const JointLimits limits = limits_of(o);
  const int decimation = o.full ? 1 : o.decimation;
  const AzimuthRange wedge = wedge_of(o);
  const std::string format = o.format.empty() ? (mesh ? "ply" : "csv") : o.format;

  Sink sink(o.output);
  std::size_t written = 0;
  double max_residual = 0, mean_residual = 0;
  if (format == "csv") {
    CsvCloudWriter writer(*sink.out);
    std::vector<SweepPoint> kept;
    std::tie(max_residual, mean_residual) = sweep_rows(
        proj.embedding, limits, decimation,
        [&](std::span<const SweepPoint> row) {
          kept.clear();
          for (const auto& pt : row) {
            if (!wedge.contains(azimuth_deg(pt.position))) kept.push_back(pt);
          }
          writer.write(kept);
        },
        o.threads);
    written = writer.rows_written();
  } else {
    const SweepCloud grid = sweep(proj.embedding, limits, decimation, o.threads);
    max_residual = grid.max_residual;
    mean_residual = grid.mean_residual;
    const MeshOutput m = build_mesh(grid, wedge);
    write_mesh_ply(*sink.out, m);
    written = m.vertices.size();
    fmt::print(sink.report(), "faces: {}\n", m.faces.size());
  }
  sink.finish();

  auto& rep = sink.report();
  fmt::print(rep, "input: {}\n", rec.name);
  fmt::print(rep, "grid: {} x {}\n", limits.theta1_count(decimation),
             limits.theta2_count(decimation));
  fmt::print(rep, "points_written: {}\n", written);
  fmt::print(rep, "max_residual: {:.3e}\n", max_residual);
  fmt::print(rep, "mean_residual: {:.3e}\n", mean_residual);
  if (!sink.path.empty()) fmt::print(rep, "output: {}\n", sink.path);
  if (proj.max_delta > 0) {
    fmt::print(rep, "projection_max_delta_mm: {:.6g} ({})\n", proj.max_delta, proj.worst_pair);
  }
  rep.flush();
  if (max_residual > o.residual_bound) {
    throw ResidualExceeded(fmt::format("max residual {:.3e} exceeds bound {:.3e}", max_residual,
                                       o.residual_bound));
  }
  return kOk;
}

int run_calibrate(const Options& o) {
  if (o.markers.empty() && o.input.empty()) {
    throw CLI::ValidationError("input", "give a marker file");
  }
  const std::string path = o.markers.empty() ? o.input : o.markers;
  const MarkerFrame frame = load_marker_frame(path);
  auto rec = record_from_markers(path, false);

  Sink sink(o.output);
  *sink.out << format_distance_set(rec);
  sink.finish();

  auto& rep = sink.report();
  if (!frame[5]) fmt::print(rep, "warning: P5 not tracked, d35 and d45 set to 0\n");
  const auto report = is_embeddable(rec.distances);
  fmt::print(rep, "embeddable: {}\n", report.embeddable ? "yes" : "no");
  if (!report.embeddable) fmt::print(rep, "violated: {}\n", report.violated);
  if (rec.distances.d34() == 0) fmt::print(rep, "warning: P3 and P4 coincide, joint 2 has no axis\n");
  try {
    const auto t = canonical_transform(frame);
    for (int label = 1; label <= 5; ++label) {
      if (!frame[label]) continue;
      const Vec3 p = t * *frame[label];
      fmt::print(rep, "canonical P{}: {:.6f} {:.6f} {:.6f}\n", label, p.x(), p.y(), p.z());
    }
  } catch (const DegenerateCloud& e) {
    fmt::print(rep, "warning: {}\n", e.what());
  }
  if (!sink.path.empty()) fmt::print(rep, "output: {}\n", sink.path);
  return kOk;
}

// Reference-pose diagnostics for the optional d15/d25 entries: P5 at
// (rho, 0, z) must satisfy both distances and lie on the workspace surface.
void print_pose_check(const DistanceSetRecord& rec, const DistanceSet& usable) {
  if (!rec.d15 || !rec.d25) return;
  const double s12 = usable.s12, d12 = usable.d12();
  const double s15 = *rec.d15 * *rec.d15, s25 = *rec.d25 * *rec.d25;
  const double z = (s15 - s25 + s12) / (2 * d12);
  const double rho2 = s15 - z * z;
  const bool triangle_ok = rho2 >= -1e-9 * s15;
  fmt::print("pose_triangle(1,2,5): {}\n", triangle_ok ? "feasible" : "infeasible");
  bool consistent = triangle_ok;
  if (triangle_ok) {
    const double gamma = WorkspaceSurface(usable)(Vec3(std::sqrt(std::max(0.0, rho2)), 0, z));
    fmt::print("pose_gamma: {:.3e}\n", gamma);
    consistent = std::abs(gamma) <= 1e-6;
  }
  if (!consistent) fmt::print("warning: d15/d25 are inconsistent with the fixed distances\n");
}

int run_check(const Options& o) {
  const auto rec = load_input(o);
  const auto report = is_embeddable(rec.distances);
  fmt::print("input: {}\n", rec.name);
  fmt::print("embeddable: {}\n", report.embeddable ? "yes" : "no");
  if (!report.embeddable) fmt::print("violated: {}\n", report.violated);
  for (const auto& c : report.checks) fmt::print("  {} {:.6e}\n", c.name, c.normalized_value);
  try {
    const auto proj = prepare(o, rec);
    fmt::print("projection_max_delta_mm: {:.6g}\n", proj.max_delta);
    if (proj.max_delta > 0) fmt::print("projection_worst_pair: {}\n", proj.worst_pair);
    print_pose_check(rec, proj.projected);
  } catch (const NotEmbeddable& e) {
    fmt::print("projection: failed ({})\n", e.what());
    return kNotEmbeddable;
  }
  return kOk;
}

int run_fit(const Options& o) {
  std::ifstream in(o.input, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + o.input + "'");
  const auto cloud = read_cloud_csv(in);
  std::vector<Vec3> points;
  points.reserve(cloud.size());
  for (const auto& pt : cloud) points.push_back(pt.position);
  if (!o.frame.empty()) {
    points = transform_points(canonical_transform(load_marker_frame(o.frame)), points);
  }
  FitReport r;
  if (o.surface == "sphere") {
    r = to_report(fit_sphere(points));
  } else if (o.surface == "plane") {
    r = to_report(fit_plane(points));
  } else {
    r = to_report(fit_torus_of_revolution(points));
  }
  fmt::print("surface: {}\n", r.surface);
  for (const auto& [key, value] : r.parameters) fmt::print("{}: {:.9g}\n", key, value);
  if (!r.hint.empty()) fmt::print("hint: {}\n", r.hint);
  fmt::print("points: {}\nrms: {:.6g}\nmax_abs: {:.6g}\ninlier_fraction: {:.4f}\n", r.stats.count,
             r.stats.rms, r.stats.max_abs, r.stats.inlier_fraction);
  return kOk;
}

void add_input(CLI::App* cmd, Options& o) {
  cmd->add_option("input", o.input, "bundled set name (fig5_a ... fig5_l) or distance-set file");
  cmd->add_option("--inline", o.inline_set, "distances as d12=..,d13=..,...");
  cmd->add_option("--markers", o.markers, "marker file with P1..P5 rows");
  cmd->add_option("--branch", o.branch, "mirror solution for P4")
      ->check(CLI::IsMember({"positive", "negative"}));
  cmd->add_option("--max-projection", o.max_projection,
                  "largest distance change allowed when projecting measured data, relative to L")
      ->check(CLI::NonNegativeNumber);
}

void add_sweep_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--limits", o.limits, "t1min:t1max:t2min:t2max in degrees");
  cmd->add_option("--step", o.step, "joint step in degrees")->check(CLI::PositiveNumber);
  cmd->add_option("--decimation", o.decimation, "use every n-th step")->check(CLI::Range(1, 1 << 20));
  cmd->add_flag("--full", o.full, "full resolution, same as --decimation 1");
  cmd->add_option("--wedge", o.wedge, "drop azimuths in [a, b) degrees, e.g. 300:330");
  cmd->add_option("--format", o.format)->check(CLI::IsMember({"csv", "ply"}));
  cmd->add_option("-o,--output", o.output, "output file (default stdout)");
  cmd->add_option("--residual-bound", o.residual_bound, "max allowed |Gamma|/L^8");
  cmd->add_option("--threads", o.threads, "worker threads, 0 = all cores");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Workspace analysis for two-joint malleable robots"};
  app.require_subcommand(1);
  Options o;

  auto* classify_cmd = app.add_subcommand("classify", "workspace category and parameters");
  add_input(classify_cmd, o);
  classify_cmd->add_option("--tau", o.tau, "relative tolerance")->check(CLI::PositiveNumber);

  auto* coeffs_cmd = app.add_subcommand("coeffs", "quartic coefficients of the surface");
  add_input(coeffs_cmd, o);

  auto* sweep_cmd = app.add_subcommand("sweep", "forward-kinematics point cloud");
  add_input(sweep_cmd, o);
  add_sweep_options(sweep_cmd, o);

  auto* mesh_cmd = app.add_subcommand("mesh", "triangulated sweep grid");
  add_input(mesh_cmd, o);
  add_sweep_options(mesh_cmd, o);

  auto* calibrate_cmd = app.add_subcommand("calibrate", "distance set from a marker file");
  calibrate_cmd->add_option("input", o.input, "marker file");
  calibrate_cmd->add_option("--markers", o.markers, "marker file");
  calibrate_cmd->add_option("-o,--output", o.output, "distance-set file (default stdout)");

  auto* check_cmd = app.add_subcommand("check", "embeddability and consistency report");
  add_input(check_cmd, o);

  auto* fit_cmd = app.add_subcommand("fit", "fit a canonical surface to a CSV cloud");
  fit_cmd->add_option("cloud", o.input, "CSV cloud")->required();
  fit_cmd->add_option("--surface", o.surface)->check(CLI::IsMember({"sphere", "plane", "torus"}));
  fit_cmd->add_option("--frame", o.frame, "marker file defining the canonical frame");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*classify_cmd) return run_classify(o);
    if (*coeffs_cmd) return run_coeffs(o);
    if (*sweep_cmd) return run_sweep(o, false);
    if (*mesh_cmd) return run_sweep(o, true);
    if (*calibrate_cmd) return run_calibrate(o);
    if (*check_cmd) return run_check(o);
    if (*fit_cmd) return run_fit(o);
  } catch (const CLI::ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kBadInput;
  } catch (const ParseError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kBadInput;
  } catch (const MissingMarker& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kBadInput;
  } catch (const NotEmbeddable& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kNotEmbeddable;
  } catch (const WriteError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kWriteFailed;
  } catch (const ResidualExceeded& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kResidual;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kGeometry;
  }
  return kOk;
}
