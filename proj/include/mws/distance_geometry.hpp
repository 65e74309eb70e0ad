#pragma once

// Distance model of the 2-DOF framework: five points, P1 P2 on the first
// joint axis, P3 P4 on the second, P5 the end effector. Everything here is
// expressed through squared distances s_ij = |p_i - p_j|^2.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mws {

using Vec3 = Eigen::Vector3d;

/// Full symmetric table of squared distances between P1..P5 (0-based).
using DistanceTable = Eigen::Matrix<double, 5, 5>;

/// The eight pose-independent squared distances of a robot geometry.
/// s15 and s25 depend on the pose and are not part of the set.
struct DistanceSet {
  double s12 = 0, s13 = 0, s14 = 0, s23 = 0, s24 = 0, s34 = 0, s35 = 0, s45 = 0;

  /// Builds a set from plain (unsquared) distances.
  static DistanceSet from_distances(double d12, double d13, double d14, double d23,
                                    double d24, double d34, double d35, double d45);

  /// Squared distance between P_i and P_j, 1-based. Throws std::out_of_range
  /// for the pose-dependent pairs (1,5) and (2,5).
  double squared(int i, int j) const;
  double distance(int i, int j) const;

  double d12() const;
  double d34() const;
  double d35() const;
  double d45() const;

  /// L = max d_ij over the eight fixed distances.
  double characteristic_length() const;

  /// Completes the set with pose-dependent values into a 5-point table.
  DistanceTable table(double s15, double s25) const;

  /// Uniformly rescales lengths by `factor` (squared distances by factor^2).
  DistanceSet scaled(double factor) const;

  std::array<double, 8> values() const { return {s12, s13, s14, s23, s24, s34, s35, s45}; }
  bool operator==(const DistanceSet&) const = default;
};

/// Cartesian realization of a DistanceSet in the canonical frame:
/// p1 at the origin, p2 = (0, 0, d12).
struct Embedding {
  Vec3 p1 = Vec3::Zero(), p2 = Vec3::Zero(), p3 = Vec3::Zero(), p4 = Vec3::Zero(),
       p5 = Vec3::Zero();

  std::array<Vec3, 5> points() const { return {p1, p2, p3, p4, p5}; }
  DistanceSet distances() const;
  DistanceTable table() const;
};

/// Mirror solution used when placing P4 (sign of its y coordinate).
enum class Branch { Positive, Negative };

DistanceTable table_of(const std::array<Vec3, 5>& points);

/// Generic Cayley-Menger determinant of n points given their n x n table of
/// squared distances, scaled by (-1)^n / 2^(n-1) so that the result equals
/// ((n-1)!)^2 times the squared (n-1)-volume of the simplex. Valid point sets
/// therefore give nonnegative values.
double cayley_menger(const Eigen::MatrixXd& squared_distances);

/// Triangle: returns 4 * area^2.
double cm_det_3(const Eigen::Matrix3d& squared_distances);
/// Tetrahedron: returns 36 * volume^2.
double cm_det_4(const Eigen::Matrix4d& squared_distances);
/// Five points: -1/16 times the 6x6 bordered determinant. Zero for any
/// five points in 3-space.
double cm_det_5(const DistanceTable& table);

/// Same quantity as cm_det_5, evaluated through the 3x3 block form
/// -(1/16) * 2 s12 s15 s25 det(A - B C B^T). Throws DegenerateFrame when s12,
/// s15 or s25 is below 1e-12 L^2.
double cm_det_block(const DistanceTable& table);

/// Simplex content (length, area, volume, ...) induced by a value returned
/// from cayley_menger for `n` points. Negative inputs yield NaN.
double simplex_content(double cm_value, int n);

/// Value of a 5-point determinant together with its characteristic length.
struct CmResult {
  double value = 0;
  double scale = 1;  ///< L, the largest distance in the table

  /// value / L^8, the dimensionless residual.
  double normalized() const;
};

CmResult cm_residual(const DistanceTable& table);

struct SimplexCheck {
  std::string name;         ///< e.g. "triangle(1,2,3)"
  double normalized_value;  ///< determinant / L^(2(n-1))
};

struct EmbeddabilityReport {
  bool embeddable = false;
  std::string violated;  ///< first violated simplex, empty when embeddable
  std::vector<SimplexCheck> checks;
};

/// Realizability gate for P1..P4 (plus the P3 P4 P5 triangle). A simplex
/// fails when its normalized determinant is below -epsilon.
EmbeddabilityReport is_embeddable(const DistanceSet& ds, double epsilon = 1e-9);

/// Places the points in the canonical frame. P3 goes in the x >= 0 half of
/// the xz-plane, P4 is trilaterated from P1 P2 P3 with the sign of y chosen
/// by `branch`, and P5 sits on its circle about axis P3P4 at the phase of
/// maximal z (the joint-angle reference pose). Slightly negative radicands
/// are clamped to zero. Throws NotEmbeddable.
Embedding embed(const DistanceSet& ds, Branch branch = Branch::Positive);

/// Result of replacing a measured set by the distances of its clamped
/// embedding.
struct ConsistencyProjection {
  DistanceSet raw;
  DistanceSet projected;
  Embedding embedding;
  bool strictly_embeddable = false;
  double max_delta = 0;    ///< max |d_raw - d_projected| in length units
  std::string worst_pair;  ///< e.g. "d34"
};

/// Clamped embedding without the strict gate. Throws NotEmbeddable when a
/// distance has to move by more than `max_relative_delta * L`.
ConsistencyProjection project_consistent(const DistanceSet& ds, double max_relative_delta,
                                         Branch branch = Branch::Positive);

}  // namespace mws
