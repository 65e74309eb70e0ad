#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mws/calibration.hpp"
#include "mws/io.hpp"
#include "support/oracles.hpp"

using namespace mws;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + MWS_CLI + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string value_of(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + ": ", 0) == 0) return line.substr(key.size() + 2);
  }
  return {};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "mws_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string inline_of(const DistanceSet& ds) {
  return fmt::format("\"d12={:.17g},d13={:.17g},d14={:.17g},d23={:.17g},d24={:.17g},"
                     "d34={:.17g},d35={:.17g},d45={:.17g}\"",
                     std::sqrt(ds.s12), std::sqrt(ds.s13), std::sqrt(ds.s14), std::sqrt(ds.s23),
                     std::sqrt(ds.s24), std::sqrt(ds.s34), std::sqrt(ds.s35), std::sqrt(ds.s45));
}

std::vector<SweepPoint> read_csv(const fs::path& p) {
  std::ifstream in(p);
  return read_cloud_csv(in);
}

// Vertical second axis, effector plane z = 100.
std::string scara_input() {
  return "--inline " + inline_of(oracle::set_of({Vec3::Zero(), Vec3(0, 0, 80), Vec3(300, 0, 50),
                                                 Vec3(300, 0, 150), Vec3(480, 60, 100)}));
}

}  // namespace

TEST(Cli, ClassifyMeasuredGeneral) {
  const auto r = run("classify fig5_a");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(value_of(r.out, "category"), "GeneralArticulated");
}

TEST(Cli, ClassifyMeasuredScara) {
  const auto r = run("classify fig5_g");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(value_of(r.out, "category"), "Scara");
}

TEST(Cli, ClassifyInlineSpherical) {
  const auto ds = oracle::set_of({Vec3::Zero(), Vec3(0, 0, 58), Vec3::Zero(), Vec3(300, 40, 500),
                                  Vec3(120, -300, 320)});
  const auto r = run("classify --inline " + inline_of(ds));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(value_of(r.out, "category"), "Spherical");
  EXPECT_NEAR(std::stod(value_of(r.out, "radius")), std::sqrt(ds.s35), 1e-6);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("classify /nonexistent/set.dist").code, 2);
  EXPECT_EQ(run("classify fig5_a --inline d12=1").code, 2);
  EXPECT_EQ(run("classify").code, 2);
  const auto bad = run("classify --inline d12=1,d13=3,d14=1.5,d23=1,d24=1.2,d34=1,d35=1,d45=1");
  EXPECT_EQ(bad.code, 3);
  EXPECT_EQ(run("sweep fig5_a -o /nonexistent/dir/cloud.csv").code, 4);
  EXPECT_EQ(run("sweep fig5_a --decimation 64 --residual-bound 1e-30 -o " +
                scratch("bound.csv").string())
                .code,
            5);
}

TEST(Cli, NotEmbeddableNamesTheSimplex) {
  const std::string cmd = std::string(MWS_CLI) +
                          " classify --inline d12=1,d13=3,d14=1.5,d23=1,d24=1.2,d34=1,d35=1,d45=1"
                          " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  char buf[1024] = {};
  const auto n = fread(buf, 1, sizeof(buf) - 1, pipe);
  pclose(pipe);
  EXPECT_NE(std::string(buf, n).find("triangle(1,2,3)"), std::string::npos);
}

TEST(Cli, Coeffs) {
  const auto r = run("coeffs fig5_a");
  EXPECT_EQ(r.code, 0);
  for (int i = 0; i < 6; ++i) EXPECT_NE(r.out.find(fmt::format("q{} ", i)), std::string::npos);
  const auto pos = r.out.find("holdout_residual ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LE(std::stod(r.out.substr(pos + 17)), 1e-8);
}

TEST(Cli, SweepSphericalMeasuredSet) {
  const auto path = scratch("fig5_j.csv");
  ASSERT_EQ(run("sweep fig5_j --decimation 32 -o " + path.string()).code, 0);
  std::vector<Vec3> pts;
  for (const auto& pt : read_csv(path)) pts.push_back(pt.position);
  EXPECT_EQ(pts.size(), 121u * 91u);
  EXPECT_NEAR(fit_sphere(pts).radius, 455.0, 2.0);
}

TEST(Cli, MeshOfScaraSetIsFlat) {
  const auto path = scratch("scara.ply");
  ASSERT_EQ(run("mesh " + scara_input() + " -o " + path.string()).code, 0);
  std::ifstream in(path);
  const auto mesh = read_mesh_ply(in);
  ASSERT_EQ(mesh.vertices.size(), 121u * 91u);
  for (const auto& v : mesh.vertices) EXPECT_NEAR(v.z(), mesh.vertices.front().z(), 1e-9);
}

TEST(Cli, WedgeRemovesAzimuths) {
  const auto path = scratch("wedge.csv");
  ASSERT_EQ(run("sweep fig5_c --wedge 300:330 -o " + path.string()).code, 0);
  const auto pts = read_csv(path);
  EXPECT_LT(pts.size(), 121u * 91u);
  for (const auto& pt : pts) {
    const double a = azimuth_deg(pt.position);
    EXPECT_TRUE(a < 300 || a >= 330) << a;
  }
  const auto ply = scratch("wedge.ply");
  ASSERT_EQ(run("mesh fig5_c --wedge 300:330 -o " + ply.string()).code, 0);
  std::ifstream in(ply);
  EXPECT_EQ(read_mesh_ply(in).vertices.size(), pts.size());
}

TEST(Cli, OutputDirectoryOverride) {
  const auto dir = scratch("outdir");
  fs::create_directories(dir);
  fs::remove(dir / "cloud.csv");
  ASSERT_EQ(run("sweep fig5_a --decimation 64 -o cloud.csv", "MWS_OUTPUT_DIR=" + dir.string()).code,
            0);
  EXPECT_TRUE(fs::exists(dir / "cloud.csv"));
}

TEST(Cli, Deterministic) {
  const auto a = run("sweep fig5_d --decimation 48");
  const auto b = run("sweep fig5_d --decimation 48 --threads 3");
  EXPECT_EQ(a.code, 0);
  EXPECT_FALSE(a.out.empty());
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, CalibrateMarkers) {
  std::mt19937_64 rng(5);
  const auto p = oracle::random_points(rng, -400, 400);
  MarkerFrame frame;
  for (int i = 0; i < 5; ++i) frame.markers[i] = p[i];
  const auto markers = scratch("frame.txt");
  std::ofstream(markers) << format_marker_frame(frame);
  const auto out = scratch("frame.dist");
  ASSERT_EQ(run("calibrate " + markers.string() + " -o " + out.string()).code, 0);
  const auto rec = load_distance_set(out.string());
  const auto expected = oracle::set_of(p).values();
  const auto got = rec.distances.values();
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(std::sqrt(got[i]), std::sqrt(expected[i]), 1e-6);
  }
  ASSERT_TRUE(rec.d15.has_value());
  EXPECT_NEAR(*rec.d15, (p[0] - p[4]).norm(), 1e-6);

  std::ofstream(markers) << "P1 0 0 0\nP2 0 0 1\n";
  EXPECT_EQ(run("calibrate " + markers.string()).code, 2);
}

TEST(Cli, CheckReports) {
  auto r = run("check fig5_a");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(value_of(r.out, "embeddable"), "yes");
  EXPECT_FALSE(value_of(r.out, "projection_max_delta_mm").empty());

  r = run("check --inline d12=1,d13=3,d14=1.5,d23=1,d24=1.2,d34=1,d35=1,d45=1");
  EXPECT_EQ(value_of(r.out, "embeddable"), "no");
  EXPECT_EQ(value_of(r.out, "violated"), "triangle(1,2,3)");

  r = run("check " + scara_input());
  EXPECT_EQ(std::stod(value_of(r.out, "projection_max_delta_mm")), 0.0);

  r = run("check fig5_i");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(value_of(r.out, "embeddable"), "no");
  EXPECT_EQ(value_of(r.out, "projection_worst_pair"), "d34");
}

TEST(Cli, CheckFlagsImplausibleEffectorDistance) {
  const auto r = run("check fig5_b");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("warning: d15/d25 are inconsistent"), std::string::npos);
  EXPECT_EQ(run("check fig5_a").out.find("warning"), std::string::npos);
}

TEST(Cli, FitCloud) {
  const auto path = scratch("scara_fit.csv");
  ASSERT_EQ(run("sweep " + scara_input() + " -o " + path.string()).code, 0);
  const auto r = run("fit " + path.string() + " --surface plane");
  EXPECT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(value_of(r.out, "z5")), 100.0, 1e-6);
}
