#include "mws/distance_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "mws/errors.hpp"

namespace mws {

namespace {

double clamped_sqrt(double v) { return std::sqrt(std::max(0.0, v)); }

// Bordered matrix [[0, 1^T], [1, S]].
template <int N>
Eigen::Matrix<double, N + 1, N + 1> bordered(const Eigen::Matrix<double, N, N>& s) {
  Eigen::Matrix<double, N + 1, N + 1> m;
  m(0, 0) = 0.0;
  m.template block<1, N>(0, 1).setOnes();
  m.template block<N, 1>(1, 0).setOnes();
  m.template block<N, N>(1, 1) = s;
  return m;
}

double max_entry_length(const Eigen::MatrixXd& s) {
  return std::sqrt(std::max(0.0, s.maxCoeff()));
}

// P5 on its circle about the line P3P4, at the phase of maximal z.
Vec3 place_end_effector(const Vec3& p3, const Vec3& p4, double s35, double s45, double length) {
  const Vec3 axis = p4 - p3;
  const double d34 = axis.norm();
  if (d34 <= 1e-12 * length) {
    return p3 + Vec3(0, 0, std::sqrt(std::max(0.0, s35)));
  }
  const Vec3 u = axis / d34;
  const double along = (s35 - s45 + d34 * d34) / (2.0 * d34);
  const double radius = clamped_sqrt(s35 - along * along);
  Vec3 w = Vec3::UnitZ() - u.z() * u;
  if (w.norm() < 1e-9) w = Vec3::UnitX() - u.x() * u;
  return p3 + along * u + radius * w.normalized();
}

Embedding place(const DistanceSet& ds, Branch branch) {
  const double length = ds.characteristic_length();
  const double d12 = ds.d12();
  Embedding e;
  e.p2 = Vec3(0, 0, d12);

  const double z3 = (ds.s13 - ds.s23 + ds.s12) / (2.0 * d12);
  const double x3 = clamped_sqrt(ds.s13 - z3 * z3);
  e.p3 = Vec3(x3, 0, z3);

  const double z4 = (ds.s14 - ds.s24 + ds.s12) / (2.0 * d12);
  const double r4sq = std::max(0.0, ds.s14 - z4 * z4);
  if (x3 > 1e-9 * length) {
    const double dz = z4 - z3;
    const double x4 = (r4sq + x3 * x3 + dz * dz - ds.s34) / (2.0 * x3);
    double y4 = clamped_sqrt(r4sq - x4 * x4);
    if (branch == Branch::Negative) y4 = -y4;
    e.p4 = Vec3(x4, y4, z4);
  } else {
    // P3 on the first axis: P4's azimuth is free, pin it to the xz-plane.
    e.p4 = Vec3(std::sqrt(r4sq), 0, z4);
  }
  e.p5 = place_end_effector(e.p3, e.p4, ds.s35, ds.s45, length);
  return e;
}

constexpr std::array<const char*, 8> kPairNames = {"d12", "d13", "d14", "d23",
                                                   "d24", "d34", "d35", "d45"};

// Largest absolute distance change between two sets; returns the index.
std::pair<double, std::size_t> max_distance_delta(const DistanceSet& a, const DistanceSet& b) {
  const auto va = a.values();
  const auto vb = b.values();
  double worst = 0.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double delta = std::abs(std::sqrt(va[i]) - std::sqrt(vb[i]));
    if (delta > worst) {
      worst = delta;
      at = i;
    }
  }
  return {worst, at};
}

}  // namespace

DistanceSet DistanceSet::from_distances(double d12, double d13, double d14, double d23,
                                        double d24, double d34, double d35, double d45) {
  return {d12 * d12, d13 * d13, d14 * d14, d23 * d23,
          d24 * d24, d34 * d34, d35 * d35, d45 * d45};
}

double DistanceSet::squared(int i, int j) const {
  if (i > j) std::swap(i, j);
  switch (i * 10 + j) {
    case 12: return s12;
    case 13: return s13;
    case 14: return s14;
    case 23: return s23;
    case 24: return s24;
    case 34: return s34;
    case 35: return s35;
    case 45: return s45;
    default:
      if (i == j && i >= 1 && i <= 5) return 0.0;
      throw std::out_of_range("pair (" + std::to_string(i) + "," + std::to_string(j) +
                              ") is not a fixed distance");
  }
}

double DistanceSet::distance(int i, int j) const { return std::sqrt(squared(i, j)); }
double DistanceSet::d12() const { return std::sqrt(s12); }
double DistanceSet::d34() const { return std::sqrt(s34); }
double DistanceSet::d35() const { return std::sqrt(s35); }
double DistanceSet::d45() const { return std::sqrt(s45); }

double DistanceSet::characteristic_length() const {
  const auto v = values();
  return std::sqrt(std::max(0.0, *std::max_element(v.begin(), v.end())));
}

DistanceTable DistanceSet::table(double s15, double s25) const {
  DistanceTable t;
  // clang-format off
  t <<   0, s12, s13, s14, s15,
       s12,   0, s23, s24, s25,
       s13, s23,   0, s34, s35,
       s14, s24, s34,   0, s45,
       s15, s25, s35, s45,   0;
  // clang-format on
  return t;
}

DistanceSet DistanceSet::scaled(double factor) const {
  const double f2 = factor * factor;
  return {s12 * f2, s13 * f2, s14 * f2, s23 * f2, s24 * f2, s34 * f2, s35 * f2, s45 * f2};
}

DistanceTable table_of(const std::array<Vec3, 5>& points) {
  DistanceTable t;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) t(i, j) = (points[i] - points[j]).squaredNorm();
  }
  return t;
}

DistanceTable Embedding::table() const { return table_of(points()); }

DistanceSet Embedding::distances() const {
  const DistanceTable t = table();
  return {t(0, 1), t(0, 2), t(0, 3), t(1, 2), t(1, 3), t(2, 3), t(2, 4), t(3, 4)};
}

double cayley_menger(const Eigen::MatrixXd& squared_distances) {
  const auto n = squared_distances.rows();
  Eigen::MatrixXd m(n + 1, n + 1);
  m(0, 0) = 0.0;
  m.row(0).tail(n).setOnes();
  m.col(0).tail(n).setOnes();
  m.bottomRightCorner(n, n) = squared_distances;
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  return sign / std::ldexp(1.0, static_cast<int>(n - 1)) * m.determinant();
}

double cm_det_3(const Eigen::Matrix3d& squared_distances) {
  return -0.25 * bordered<3>(squared_distances).determinant();
}

double cm_det_4(const Eigen::Matrix4d& squared_distances) {
  return 0.125 * bordered<4>(squared_distances).determinant();
}

double cm_det_5(const DistanceTable& table) {
  return -bordered<5>(table).partialPivLu().determinant() / 16.0;
}

double cm_det_block(const DistanceTable& table) {
  const double s12 = table(0, 1), s13 = table(0, 2), s14 = table(0, 3), s15 = table(0, 4);
  const double s23 = table(1, 2), s24 = table(1, 3), s25 = table(1, 4);
  const double s34 = table(2, 3), s35 = table(2, 4), s45 = table(3, 4);

  const double length = max_entry_length(table);
  const double floor = 1e-12 * length * length;
  if (!(s12 > floor) || !(s15 > floor) || !(s25 > floor)) {
    throw DegenerateFrame("block form needs s12, s15, s25 > 1e-12 L^2");
  }

  Eigen::Matrix3d a;
  a << 0, 1, 1,
       1, 0, s34,
       1, s34, 0;
  Eigen::Matrix3d b;
  b << 1, 1, 1,
       s24, s14, s45,
       s23, s13, s35;
  Eigen::Matrix3d c;
  c << -s15 / (s12 * s25), 1 / s12, 1 / s25,
       1 / s12, -s25 / (s12 * s15), 1 / s15,
       1 / s25, 1 / s15, -s12 / (s15 * s25);
  c *= 0.5;

  const double bordered_det = 2.0 * s12 * s15 * s25 * (a - b * c * b.transpose()).determinant();
  return -bordered_det / 16.0;
}

double simplex_content(double cm_value, int n) {
  if (cm_value < 0) return std::numeric_limits<double>::quiet_NaN();
  double factorial = 1.0;
  for (int k = 2; k < n; ++k) factorial *= k;
  return std::sqrt(cm_value) / factorial;
}

double CmResult::normalized() const {
  const double l2 = scale * scale;
  const double l4 = l2 * l2;
  return value / (l4 * l4);
}

CmResult cm_residual(const DistanceTable& table) {
  const double length = max_entry_length(table);
  if (!(length > 0)) return {0.0, 0.0};
  const DistanceTable unit = table / (length * length);
  const double l4 = std::pow(length, 4);
  return {cm_det_5(unit) * l4 * l4, length};
}

EmbeddabilityReport is_embeddable(const DistanceSet& ds, double epsilon) {
  EmbeddabilityReport report;
  const auto fail = [&](std::string name) {
    if (report.violated.empty()) report.violated = std::move(name);
  };

  const auto values = ds.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0) fail(std::string("distance ") + kPairNames[i]);
  }
  const double length = ds.characteristic_length();
  if (!(ds.s12 > 1e-24 * length * length) || !(length > 0)) fail("edge(1,2)");
  if (!report.violated.empty()) return report;

  const double l2 = length * length;
  const auto triangle = [&](int i, int j, int k) {
    Eigen::Matrix3d s;
    s << 0, ds.squared(i, j), ds.squared(i, k),
         ds.squared(i, j), 0, ds.squared(j, k),
         ds.squared(i, k), ds.squared(j, k), 0;
    const std::string name = "triangle(" + std::to_string(i) + "," + std::to_string(j) + "," +
                             std::to_string(k) + ")";
    const double value = cm_det_3(s / l2);
    report.checks.push_back({name, value});
    if (value < -epsilon) fail(name);
  };
  triangle(1, 2, 3);
  triangle(1, 2, 4);
  triangle(1, 3, 4);
  triangle(2, 3, 4);

  Eigen::Matrix4d s;
  s << 0, ds.s12, ds.s13, ds.s14,
       ds.s12, 0, ds.s23, ds.s24,
       ds.s13, ds.s23, 0, ds.s34,
       ds.s14, ds.s24, ds.s34, 0;
  const double tet = cm_det_4(s / l2);
  report.checks.push_back({"tetrahedron(1,2,3,4)", tet});
  if (tet < -epsilon) fail("tetrahedron(1,2,3,4)");

  triangle(3, 4, 5);
  report.embeddable = report.violated.empty();
  return report;
}

Embedding embed(const DistanceSet& ds, Branch branch) {
  const EmbeddabilityReport report = is_embeddable(ds);
  if (!report.embeddable) {
    throw NotEmbeddable(report.violated, "Cayley-Menger sign condition violated");
  }
  Embedding e = place(ds, branch);
  // Coincident or collinear frames can pass the sign checks and still be
  // inconsistent; catch gross mismatches.
  const auto [delta, at] = max_distance_delta(ds, e.distances());
  if (delta > 3e-5 * ds.characteristic_length()) {
    throw NotEmbeddable("tetrahedron(1,2,3,4)",
                        std::string(kPairNames[at]) + " cannot be reproduced");
  }
  return e;
}

ConsistencyProjection project_consistent(const DistanceSet& ds, double max_relative_delta,
                                         Branch branch) {
  const EmbeddabilityReport report = is_embeddable(ds);
  const double length = ds.characteristic_length();
  if (!report.embeddable &&
      (report.violated == "edge(1,2)" || report.violated.rfind("distance", 0) == 0)) {
    throw NotEmbeddable(report.violated, "cannot build a frame");
  }

  ConsistencyProjection out;
  out.raw = ds;
  out.strictly_embeddable = report.embeddable;
  out.embedding = place(ds, branch);
  // A realizable set is its own projection; only rounding would differ.
  out.projected = report.embeddable ? ds : out.embedding.distances();
  const auto [delta, at] = max_distance_delta(ds, out.projected);
  out.max_delta = delta;
  out.worst_pair = kPairNames[at];
  if (delta > max_relative_delta * length) {
    throw NotEmbeddable(report.violated.empty() ? "tetrahedron(1,2,3,4)" : report.violated,
                        out.worst_pair + " moves by " + std::to_string(delta) +
                            " under projection");
  }
  return out;
}

}  // namespace mws
