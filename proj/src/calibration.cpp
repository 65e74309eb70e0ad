#include "mws/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "mws/errors.hpp"
#include "mws/kinematics.hpp"

namespace mws {

namespace {

template <int D>
using Point = Eigen::Matrix<double, D, 1>;

template <int D>
struct Ball {
  Point<D> center;
  double radius;
};

// Least-squares circle (D = 2) or sphere (D = 3): algebraic solve of
// |q|^2 = 2 c.q + k, then one Gauss-Newton step on |q - c| - r. Works in
// centered coordinates scaled to unit spread. Sums run in input order.
template <int D>
Ball<D> fit_ball(std::span<const Point<D>> pts) {
  const auto n = static_cast<double>(pts.size());
  Point<D> mean = Point<D>::Zero();
  for (const auto& p : pts) mean += p;
  mean /= n;
  double spread = 0;
  for (const auto& p : pts) spread += (p - mean).squaredNorm();
  spread = std::sqrt(spread / n);
  if (!(spread > 0)) throw DegenerateCloud("all points coincide");

  Eigen::Matrix<double, D, D> cov = Eigen::Matrix<double, D, D>::Zero();
  for (const auto& p : pts) {
    const Point<D> q = (p - mean) / spread;
    cov += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, D, D>> es(cov / n);
  if (es.eigenvalues()(0) <= 1e-12 * es.eigenvalues()(D - 1)) {
    throw DegenerateCloud(D == 3 ? "points are coplanar" : "points are collinear");
  }

  using Normal = Eigen::Matrix<double, D + 1, D + 1>;
  using Rhs = Eigen::Matrix<double, D + 1, 1>;
  Normal ata = Normal::Zero();
  Rhs atb = Rhs::Zero();
  for (const auto& p : pts) {
    const Point<D> q = (p - mean) / spread;
    Rhs a;
    a.template head<D>() = 2.0 * q;
    a(D) = 1.0;
    ata += a * a.transpose();
    atb += a * q.squaredNorm();
  }
  const Rhs sol = ata.ldlt().solve(atb);
  Point<D> c = sol.template head<D>();
  double r = std::sqrt(std::max(0.0, sol(D) + c.squaredNorm()));

  ata.setZero();
  atb.setZero();
  for (const auto& p : pts) {
    const Point<D> d = (p - mean) / spread - c;
    const double dist = d.norm();
    if (dist == 0) continue;
    Rhs j;
    j.template head<D>() = -d / dist;
    j(D) = -1.0;
    ata += j * j.transpose();
    atb -= j * (dist - r);
  }
  const Rhs step = ata.ldlt().solve(atb);
  if (step.allFinite()) {
    c += step.template head<D>();
    r += step(D);
  }
  return {mean + spread * c, spread * r};
}

FitStats stats_of(const std::vector<double>& residuals, double extent) {
  FitStats s;
  s.count = residuals.size();
  if (residuals.empty()) return s;
  double sq = 0;
  for (double r : residuals) {
    sq += r * r;
    s.max_abs = std::max(s.max_abs, std::abs(r));
  }
  s.rms = std::sqrt(sq / static_cast<double>(residuals.size()));
  const double gate = std::max(3.0 * s.rms, 1e-9 * extent);
  const auto inliers = std::count_if(residuals.begin(), residuals.end(),
                                     [&](double r) { return std::abs(r) <= gate; });
  s.inlier_fraction = static_cast<double>(inliers) / static_cast<double>(residuals.size());
  return s;
}

double extent_of(std::span<const Vec3> points) {
  double e = 0;
  for (const auto& p : points) e = std::max(e, p.norm());
  return e;
}

double meridian_rms(std::span<const Point<2>> meridian, const Ball<2>& circle) {
  double sq = 0;
  for (const auto& m : meridian) {
    const double r = (m - circle.center).norm() - circle.radius;
    sq += r * r;
  }
  return std::sqrt(sq / static_cast<double>(meridian.size()));
}

}  // namespace

MarkerDistances distances_from_markers(const MarkerFrame& frame) {
  for (int label = 1; label <= 4; ++label) {
    if (!frame[label]) throw MissingMarker("marker P" + std::to_string(label) + " is missing");
  }
  const auto sq = [&](int i, int j) { return (*frame[i] - *frame[j]).squaredNorm(); };
  MarkerDistances out;
  out.distances = {sq(1, 2), sq(1, 3), sq(1, 4), sq(2, 3), sq(2, 4), sq(3, 4), 0.0, 0.0};
  if (frame[5]) {
    out.distances.s35 = sq(3, 5);
    out.distances.s45 = sq(4, 5);
    out.s15 = sq(1, 5);
    out.s25 = sq(2, 5);
  }
  return out;
}

Eigen::Isometry3d canonical_transform(const MarkerFrame& frame) {
  for (int label = 1; label <= 3; ++label) {
    if (!frame[label]) throw MissingMarker("marker P" + std::to_string(label) + " is missing");
  }
  const Vec3 origin = *frame[1];
  const Vec3 up = *frame[2] - origin;
  if (!(up.norm() > 0)) throw DegenerateCloud("P1 and P2 coincide");
  const Vec3 ez = up.normalized();
  Vec3 ex = (*frame[3] - origin) - ez.dot(*frame[3] - origin) * ez;
  if (ex.norm() <= 1e-12 * up.norm()) {
    ex = ez.unitOrthogonal();
  } else {
    ex.normalize();
  }
  const Vec3 ey = ez.cross(ex);
  Eigen::Matrix3d rot;
  rot.row(0) = ex.transpose();
  rot.row(1) = ey.transpose();
  rot.row(2) = ez.transpose();
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = rot;
  t.translation() = -rot * origin;
  return t;
}

std::vector<Vec3> transform_points(const Eigen::Isometry3d& t, std::span<const Vec3> points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(t * p);
  return out;
}

std::string_view to_string(TorusShape s) {
  switch (s) {
    case TorusShape::Ring: return "ring";
    case TorusShape::Horn: return "horn";
    case TorusShape::Spindle: return "spindle";
  }
  return "?";
}

SphereFit fit_sphere(std::span<const Vec3> points) {
  if (points.size() < 4) throw DegenerateCloud("sphere fit needs at least 4 points");
  const Ball<3> ball = fit_ball<3>(points);
  SphereFit fit;
  fit.center = ball.center;
  fit.radius = ball.radius;
  std::vector<double> residuals;
  residuals.reserve(points.size());
  for (const auto& p : points) residuals.push_back((p - ball.center).norm() - ball.radius);
  fit.stats = stats_of(residuals, extent_of(points));
  return fit;
}

PlaneFit fit_plane(std::span<const Vec3> points) {
  if (points.size() < 3) throw DegenerateCloud("plane fit needs at least 3 points");
  const auto n = static_cast<double>(points.size());
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= n;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();
  cov /= n;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  if (!(es.eigenvalues()(1) > 1e-12 * es.eigenvalues()(2))) {
    throw DegenerateCloud("points are collinear");
  }

  PlaneFit fit;
  fit.centroid = mean;
  fit.normal = es.eigenvectors().col(0).normalized();
  if (fit.normal.z() < 0 || (fit.normal.z() == 0 && fit.normal.x() < 0)) fit.normal = -fit.normal;
  fit.tilt = std::atan2(fit.normal.head<2>().norm(), fit.normal.z());
  if (fit.tilt <= 10.0 * std::numbers::pi / 180.0) {
    fit.height = fit.normal.dot(mean) / fit.normal.z();
  }
  std::vector<double> residuals;
  residuals.reserve(points.size());
  for (const auto& p : points) residuals.push_back(fit.normal.dot(p - mean));
  fit.stats = stats_of(residuals, extent_of(points));
  return fit;
}

TorusFit fit_torus_of_revolution(std::span<const Vec3> points) {
  if (points.size() < 10) throw DegenerateCloud("torus fit needs at least 10 points");
  std::vector<Point<2>> meridian;
  meridian.reserve(points.size());
  for (const auto& p : points) meridian.emplace_back(std::hypot(p.x(), p.y()), p.z());

  const Ball<2> circle = fit_ball<2>(meridian);
  TorusFit fit;
  fit.rho0 = circle.center.x();
  fit.z0 = circle.center.y();
  fit.radius = circle.radius;
  if (std::abs(fit.rho0 - fit.radius) <= 0.01 * fit.radius) {
    fit.shape = TorusShape::Horn;
  } else {
    fit.shape = fit.rho0 > fit.radius ? TorusShape::Ring : TorusShape::Spindle;
  }

  std::vector<double> residuals;
  residuals.reserve(points.size());
  for (const auto& m : meridian) residuals.push_back((m - circle.center).norm() - circle.radius);
  const double extent = extent_of(points);
  fit.stats = stats_of(residuals, extent);

  // Refit per 30 degree azimuth sector; what the global fit misses beyond
  // the pooled sector residual is azimuth-dependent structure.
  constexpr int kSectors = 12;
  std::array<std::vector<Point<2>>, kSectors> sectors;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto k = static_cast<int>(azimuth_deg(points[i]) / (360.0 / kSectors)) % kSectors;
    sectors[k].push_back(meridian[i]);
  }
  double pooled_sq = 0;
  std::size_t pooled_n = 0;
  double covered_sq = 0;
  for (const auto& sector : sectors) {
    if (sector.size() < 6) continue;
    try {
      const double rms = meridian_rms(sector, fit_ball<2>(sector));
      pooled_sq += rms * rms * static_cast<double>(sector.size());
      covered_sq += std::pow(meridian_rms(sector, circle), 2) * static_cast<double>(sector.size());
      pooled_n += sector.size();
    } catch (const DegenerateCloud&) {
    }
  }
  if (pooled_n > 0) {
    const double pooled = std::sqrt(pooled_sq / static_cast<double>(pooled_n));
    const double global = std::sqrt(covered_sq / static_cast<double>(pooled_n));
    fit.azimuthal_rms = std::sqrt(std::max(0.0, global * global - pooled * pooled));
    if (fit.azimuthal_rms > 3.0 * pooled && fit.azimuthal_rms > 1e-9 * extent) {
      throw NotAxisymmetric("azimuthal residual " + std::to_string(fit.azimuthal_rms) +
                            " exceeds 3x meridian rms " + std::to_string(pooled));
    }
  }
  return fit;
}

FitReport to_report(const SphereFit& fit) {
  return {"sphere",
          {{"center_x", fit.center.x()},
           {"center_y", fit.center.y()},
           {"center_z", fit.center.z()},
           {"radius", fit.radius}},
          "",
          fit.stats};
}

FitReport to_report(const PlaneFit& fit) {
  FitReport r{"plane",
              {{"normal_x", fit.normal.x()},
               {"normal_y", fit.normal.y()},
               {"normal_z", fit.normal.z()},
               {"tilt_rad", fit.tilt}},
              "",
              fit.stats};
  if (fit.height) r.parameters.emplace_back("z5", *fit.height);
  return r;
}

FitReport to_report(const TorusFit& fit) {
  return {"torus",
          {{"rho0", fit.rho0},
           {"z0", fit.z0},
           {"radius", fit.radius},
           {"azimuthal_rms", fit.azimuthal_rms}},
          std::string(to_string(fit.shape)),
          fit.stats};
}

}  // namespace mws
