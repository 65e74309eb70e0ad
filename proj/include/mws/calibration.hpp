#pragma once

// Marker data to distance sets, and canonical-surface fits for measured
// end-effector clouds. All fits minimize orthogonal (geometric) distance.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Geometry>

#include "mws/distance_geometry.hpp"

namespace mws {

/// One motion-capture snapshot of the framework markers, in mm.
struct MarkerFrame {
  std::array<std::optional<Vec3>, 5> markers;  ///< P1..P5, index 0 = P1
  std::optional<double> timestamp;

  const std::optional<Vec3>& operator[](int label) const { return markers.at(label - 1); }
  std::optional<Vec3>& operator[](int label) { return markers.at(label - 1); }
};

struct MarkerDistances {
  DistanceSet distances;
  /// Pose-dependent diagnostics, present when P5 was tracked.
  std::optional<double> s15;
  std::optional<double> s25;
};

/// Exact pairwise squared distances. Throws MissingMarker if any of P1..P4
/// is absent. Coincident markers are passed through unchanged.
MarkerDistances distances_from_markers(const MarkerFrame& frame);

/// Rigid transform taking P1 to the origin, P2 onto +z and P3 into the
/// x >= 0 half of the xz-plane. Throws MissingMarker or DegenerateCloud
/// (P1 == P2).
Eigen::Isometry3d canonical_transform(const MarkerFrame& frame);

std::vector<Vec3> transform_points(const Eigen::Isometry3d& t, std::span<const Vec3> points);

struct FitStats {
  std::size_t count = 0;
  double rms = 0;
  double max_abs = 0;
  double inlier_fraction = 0;  ///< share of |residual| <= max(3 rms, 1e-9 extent)
};

struct SphereFit {
  Vec3 center = Vec3::Zero();
  double radius = 0;
  FitStats stats;
};

struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();  ///< unit, oriented with n.z >= 0
  Vec3 centroid = Vec3::Zero();
  double tilt = 0;  ///< angle between normal and +z, radians
  /// Height where the plane meets the z-axis, reported when tilt <= 10 deg.
  std::optional<double> height;
  FitStats stats;
};

enum class TorusShape { Ring, Horn, Spindle };
std::string_view to_string(TorusShape s);

struct TorusFit {
  double rho0 = 0;    ///< meridian circle center, distance from axis
  double z0 = 0;      ///< meridian circle center, height
  double radius = 0;  ///< meridian circle radius
  TorusShape shape = TorusShape::Ring;
  double azimuthal_rms = 0;  ///< residual explained by azimuth alone
  FitStats stats;            ///< meridian residuals
};

/// Algebraic sphere fit followed by one Gauss-Newton pass on geometric
/// residuals. Throws DegenerateCloud for fewer than 4 or coplanar points.
SphereFit fit_sphere(std::span<const Vec3> points);

/// Total-least-squares plane. Throws DegenerateCloud for fewer than 3 or
/// collinear points.
PlaneFit fit_plane(std::span<const Vec3> points);

/// Torus of revolution about the z-axis: each point is reduced to meridian
/// coordinates (rho, z) and a circle is fitted there. Throws DegenerateCloud
/// (fewer than 10 points, collinear meridian) or NotAxisymmetric when the
/// azimuth-dependent residual exceeds 3x the per-sector meridian RMS.
TorusFit fit_torus_of_revolution(std::span<const Vec3> points);

/// Flat summary used by the CLI.
struct FitReport {
  std::string surface;
  std::vector<std::pair<std::string, double>> parameters;
  std::string hint;
  FitStats stats;
};

FitReport to_report(const SphereFit& fit);
FitReport to_report(const PlaneFit& fit);
FitReport to_report(const TorusFit& fit);

}  // namespace mws
