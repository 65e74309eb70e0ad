#pragma once

// Workspace quartic Gamma(x, y, z): the locus of P5 for which the five-point
// Cayley-Menger determinant vanishes, with P1 at the origin and P2 on +z.

#include <array>
#include <optional>
#include <string_view>
#include <variant>

#include "mws/distance_geometry.hpp"

namespace mws {

/// Gamma for one DistanceSet. Values are D(1,2,3,4,5) / L^8, dimensionless.
class WorkspaceSurface {
public:
  /// Throws NotEmbeddable when the set fails the strict realizability gate.
  explicit WorkspaceSurface(const DistanceSet& ds);

  double operator()(const Vec3& p) const;

  const DistanceSet& distances() const { return source_; }
  double scale() const { return scale_; }

private:
  DistanceSet source_;
  DistanceSet unit_;  // source scaled to L = 1
  double scale_;
};

/// One-shot evaluation; validates `ds` on every call.
double gamma_eval(const DistanceSet& ds, const Vec3& p);

/// Coefficients of Gamma / L^8 in the monomial basis
///   q0 r^4 + q1 d12 z r^2 + q2 (x^2 + y^2) + q3 z^2 + q4 d12 z + q5,
/// r^2 = x^2 + y^2 + z^2, written in coordinates scaled by 1/L. The stored
/// vector is normalized to max |q_i| = 1; `normalization` restores Gamma.
struct QuarticCoefficients {
  std::array<double, 6> q{};
  double d12 = 0;
  double scale = 1;          ///< L
  double normalization = 1;  ///< Gamma(p) = normalization * evaluate(p)
  double holdout_residual = 0;
  double condition = 0;

  /// Basis function values at p (p in physical units).
  std::array<double, 6> basis(const Vec3& p) const;
  /// Normalized polynomial sum q_i * basis_i(p).
  double evaluate(const Vec3& p) const;
  /// normalization * evaluate(p); matches WorkspaceSurface.
  double gamma(const Vec3& p) const;
  /// normalization * sum |q_i basis_i(p)|, the scale for relative comparisons.
  double term_magnitude(const Vec3& p) const;
  /// q_i in physical units, q_i / L^deg_i.
  double physical(std::size_t i) const;
};

/// Recovers the coefficients by least-squares interpolation of Gamma at
/// deterministic quasi-random points. Throws IllConditioned when the column
/// scaled design matrix has condition number above 1e12 (e.g. d12 = 0).
QuarticCoefficients extract_coefficients(const DistanceSet& ds);

enum class Topology { Spherical, PumaLike, Scara, GeneralArticulated };

std::string_view to_string(Topology t);
std::optional<Topology> topology_from_string(std::string_view s);

/// Line geometry of the two joint axes in the canonical frame.
struct AxisGeometry {
  Vec3 axis2_point = Vec3::Zero();
  Vec3 axis2_direction = Vec3::UnitZ();
  double common_normal = 0;  ///< g, shortest distance between the axes
  double angle = 0;          ///< alpha in [0, pi/2], radians
  /// Foot of the common normal on axis 1 (height z*). Undefined for parallel
  /// axes; set to P3's height there.
  double foot_height = 0;
  Vec3 foot_on_axis2 = Vec3::Zero();
};

/// End-effector circle about axis 2.
struct EffectorCircle {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double radius = 0;  ///< r5
};

struct SphericalParams {
  double radius;  ///< sphere about P1
};
struct PumaParams {
  double center_height;
  double radius;
};
struct ScaraParams {
  double plane_height;  ///< z5
};
struct GeneralParams {
  double common_normal;
  double angle;
  double foot_height_axis1;
  double foot_height_axis2;
  double tube_radius;
  bool degenerate_tube;
};

struct TopologyClass {
  std::variant<SphericalParams, PumaParams, ScaraParams, GeneralParams> params;
  double tau = 0.05;
  double scale = 1;
  AxisGeometry axes;
  EffectorCircle effector;
  DistanceSet distances;

  Topology category() const { return static_cast<Topology>(params.index()); }
};

/// Axis geometry and end-effector circle of an embedding. Throws
/// DegenerateAxis2 when P3 and P4 coincide.
AxisGeometry axis_geometry(const Embedding& emb);
EffectorCircle effector_circle(const Embedding& emb);

/// Decides the workspace category from line geometry, tolerances relative to
/// L. Checks run Scara, then Spherical, then PumaLike; the first satisfied
/// constraint wins.
TopologyClass classify(const Embedding& emb, double tau = 0.05);

/// Evaluator for the canonical surface of a category: the sphere or plane of
/// the special cases (dimensionless: sphere residual / L^2, plane residual /
/// L) or the full Gamma for the general case.
class CanonicalSurface {
public:
  explicit CanonicalSurface(TopologyClass tc);

  double operator()(const Vec3& p) const;

  /// Surface-of-revolution generator, general case only: the effector circle
  /// at phase `phi`, rotated by `theta1` about the z-axis.
  std::optional<Vec3> generator(double theta1, double phi) const;

  const TopologyClass& topology() const { return tc_; }

private:
  TopologyClass tc_;
  std::optional<WorkspaceSurface> gamma_;
};

CanonicalSurface canonical_reduce(const TopologyClass& tc);

}  // namespace mws
