#pragma once

// Forward-kinematics sweep: the independent oracle for the workspace surface.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mws/distance_geometry.hpp"

namespace mws {

/// Joint ranges in degrees, measured from the embedding's reference pose.
struct JointLimits {
  double theta1_min = 10.0;
  double theta1_max = 350.0;
  double theta2_min = 53.0;
  double theta2_max = 307.0;
  double step = 0.088;

  /// Throws std::invalid_argument unless min < max and 0 < step <= span.
  void validate() const;
  std::size_t theta1_count(int decimation = 1) const;
  std::size_t theta2_count(int decimation = 1) const;
};

struct SweepPoint {
  double theta1;  ///< degrees
  double theta2;  ///< degrees
  Vec3 position;
  double residual;  ///< |Gamma| / L^8 at position
};

struct SweepCloud {
  std::vector<SweepPoint> points;
  DistanceSet source;
  std::size_t rows = 0;  ///< theta1 samples
  std::size_t cols = 0;  ///< theta2 samples
  double max_residual = 0;
  double mean_residual = 0;

  /// Recomputes max/mean from `points`.
  void update_stats();
};

/// Rigid rotation of `p` about the line through `axis_point` along the unit
/// vector `axis_dir`. Throws NonUnitAxis if |axis_dir| differs from 1 by
/// more than 1e-12.
Vec3 rotate_about_axis(const Vec3& p, const Vec3& axis_point, const Vec3& axis_dir,
                       double angle);

/// The five framework points after turning joint 1 by theta1 and then joint
/// 2 by theta2 about the turned second axis (radians).
Embedding pose(const Embedding& reference, double theta1, double theta2);

/// Receives consecutive theta1 rows of the grid, in order.
using RowSink = std::function<void(std::span<const SweepPoint> row)>;

/// Streams the row-major grid to `sink` without holding the whole cloud.
/// Rows are computed concurrently in blocks and emitted in order, so output
/// is identical for any thread count. Returns {max, mean} residual.
/// Throws DegenerateAxis2 when d34 is (near) zero.
std::pair<double, double> sweep_rows(const Embedding& emb, const JointLimits& limits,
                                     int decimation, const RowSink& sink,
                                     unsigned threads = 0);

/// Collects the full grid into a cloud.
SweepCloud sweep(const Embedding& emb, const JointLimits& limits = {}, int decimation = 32,
                 unsigned threads = 0);

/// Half-open azimuth interval [start, end) in degrees; wraps through 360
/// when start > end. start == end is empty.
struct AzimuthRange {
  double start_deg = 0;
  double end_deg = 0;

  bool contains(double azimuth_deg) const;
  bool full() const { return end_deg - start_deg >= 360.0; }
};

/// Drops the points whose azimuth atan2(y, x) falls in `range`.
SweepCloud wedge_mask(const SweepCloud& cloud, const AzimuthRange& range);

/// Azimuth of p in [0, 360).
double azimuth_deg(const Vec3& p);

}  // namespace mws
