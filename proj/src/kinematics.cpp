#include "mws/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include <Eigen/Geometry>

#include "mws/errors.hpp"
#include "mws/surface.hpp"

namespace mws {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

std::size_t grid_count(double lo, double hi, double step) {
  return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

}  // namespace

void JointLimits::validate() const {
  if (!(theta1_min < theta1_max) || !(theta2_min < theta2_max)) {
    throw std::invalid_argument("joint limits need min < max");
  }
  if (!(step > 0) || step > theta1_max - theta1_min || step > theta2_max - theta2_min) {
    throw std::invalid_argument("joint step must lie in (0, max - min]");
  }
}

std::size_t JointLimits::theta1_count(int decimation) const {
  return grid_count(theta1_min, theta1_max, step * decimation);
}

std::size_t JointLimits::theta2_count(int decimation) const {
  return grid_count(theta2_min, theta2_max, step * decimation);
}

void SweepCloud::update_stats() {
  max_residual = 0;
  double sum = 0;
  for (const auto& pt : points) {
    max_residual = std::max(max_residual, pt.residual);
    sum += pt.residual;
  }
  mean_residual = points.empty() ? 0.0 : sum / static_cast<double>(points.size());
}

Vec3 rotate_about_axis(const Vec3& p, const Vec3& axis_point, const Vec3& axis_dir,
                       double angle) {
  if (!(std::abs(axis_dir.norm() - 1.0) <= 1e-12)) {
    throw NonUnitAxis("rotation axis must be a unit vector");
  }
  return axis_point + Eigen::AngleAxisd(angle, axis_dir) * (p - axis_point);
}

Embedding pose(const Embedding& reference, double theta1, double theta2) {
  const Eigen::AngleAxisd joint1(theta1, Vec3::UnitZ());
  Embedding e = reference;
  e.p3 = joint1 * reference.p3;
  e.p4 = joint1 * reference.p4;
  e.p5 = joint1 * reference.p5;
  const Vec3 axis2 = (e.p4 - e.p3).normalized();
  e.p5 = rotate_about_axis(e.p5, e.p3, axis2, theta2);
  return e;
}

std::pair<double, double> sweep_rows(const Embedding& emb, const JointLimits& limits,
                                     int decimation, const RowSink& sink, unsigned threads) {
  limits.validate();
  if (decimation < 1) throw std::invalid_argument("decimation must be >= 1");
  const DistanceSet ds = emb.distances();
  if (!(ds.d34() > 1e-12 * ds.characteristic_length())) {
    throw DegenerateAxis2("d34 is zero; joint 2 has no axis");
  }
  const WorkspaceSurface gamma(ds);

  const double step = limits.step * decimation;
  const std::size_t rows = limits.theta1_count(decimation);
  const std::size_t cols = limits.theta2_count(decimation);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t block_rows = std::max<std::size_t>(threads * 4, 16);

  const auto fill_row = [&](std::size_t i, std::span<SweepPoint> out) {
    const double t1 = limits.theta1_min + static_cast<double>(i) * step;
    for (std::size_t j = 0; j < cols; ++j) {
      const double t2 = limits.theta2_min + static_cast<double>(j) * step;
      const Vec3 p = pose(emb, t1 * kDegree, t2 * kDegree).p5;
      out[j] = SweepPoint{t1, t2, p, std::abs(gamma(p))};
    }
  };

  std::vector<SweepPoint> buffer(block_rows * cols);
  double max_residual = 0;
  double sum = 0;
  for (std::size_t first = 0; first < rows; first += block_rows) {
    const std::size_t count = std::min(block_rows, rows - first);
    const auto work = [&](unsigned worker) {
      for (std::size_t r = worker; r < count; r += threads) {
        fill_row(first + r, std::span<SweepPoint>(buffer).subspan(r * cols, cols));
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(threads);
      for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }
    for (std::size_t r = 0; r < count; ++r) {
      const std::span<const SweepPoint> row(buffer.data() + r * cols, cols);
      for (const auto& pt : row) {
        max_residual = std::max(max_residual, pt.residual);
        sum += pt.residual;
      }
      sink(row);
    }
  }
  return {max_residual, sum / static_cast<double>(rows * cols)};
}

SweepCloud sweep(const Embedding& emb, const JointLimits& limits, int decimation,
                 unsigned threads) {
  SweepCloud cloud;
  cloud.source = emb.distances();
  cloud.rows = limits.theta1_count(decimation);
  cloud.cols = limits.theta2_count(decimation);
  cloud.points.reserve(cloud.rows * cloud.cols);
  const auto [max_res, mean_res] = sweep_rows(
      emb, limits, decimation,
      [&](std::span<const SweepPoint> row) {
        cloud.points.insert(cloud.points.end(), row.begin(), row.end());
      },
      threads);
  cloud.max_residual = max_res;
  cloud.mean_residual = mean_res;
  return cloud;
}

double azimuth_deg(const Vec3& p) {
  double a = std::atan2(p.y(), p.x()) / kDegree;
  if (a < 0) a += 360.0;
  if (a >= 360.0) a -= 360.0;
  return a;
}

bool AzimuthRange::contains(double azimuth) const {
  if (full()) return true;
  if (start_deg == end_deg) return false;
  if (start_deg < end_deg) return azimuth >= start_deg && azimuth < end_deg;
  return azimuth >= start_deg || azimuth < end_deg;
}

SweepCloud wedge_mask(const SweepCloud& cloud, const AzimuthRange& range) {
  SweepCloud out;
  out.source = cloud.source;
  out.rows = cloud.rows;
  out.cols = cloud.cols;
  out.points.reserve(cloud.points.size());
  std::copy_if(cloud.points.begin(), cloud.points.end(), std::back_inserter(out.points),
               [&](const SweepPoint& pt) { return !range.contains(azimuth_deg(pt.position)); });
  out.update_stats();
  return out;
}

}  // namespace mws
