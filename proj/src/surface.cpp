#include "mws/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "mws/errors.hpp"

namespace mws {

namespace {

// Below this (in units of L^2) the block form loses accuracy to its 1/s terms.
constexpr double kBlockFloor = 1e-6;

double radical_inverse(unsigned index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * (index % base);
    index /= base;
    f /= base;
  }
  return result;
}

// Deterministic, well spread sample points in [-1.5, 1.5]^3 (units of L).
Vec3 halton_point(unsigned index) {
  return 3.0 * Vec3(radical_inverse(index, 2), radical_inverse(index, 3),
                    radical_inverse(index, 5)) -
         Vec3::Constant(1.5);
}

std::array<double, 6> unit_basis(const Vec3& u, double d12) {
  const double rho2 = u.x() * u.x() + u.y() * u.y();
  const double r2 = rho2 + u.z() * u.z();
  return {r2 * r2, d12 * u.z() * r2, rho2, u.z() * u.z(), d12 * u.z(), 1.0};
}

constexpr std::array<int, 6> kBasisDegree = {4, 4, 2, 2, 2, 0};

}  // namespace

WorkspaceSurface::WorkspaceSurface(const DistanceSet& ds)
    : source_(ds), scale_(ds.characteristic_length()) {
  const EmbeddabilityReport report = is_embeddable(ds);
  if (!report.embeddable) {
    throw NotEmbeddable(report.violated, "workspace surface needs a realizable set");
  }
  unit_ = ds.scaled(1.0 / scale_);
}

double WorkspaceSurface::operator()(const Vec3& p) const {
  const Vec3 u = p / scale_;
  const double s15 = u.squaredNorm();
  const double s25 = s15 - 2.0 * std::sqrt(unit_.s12) * u.z() + unit_.s12;
  const DistanceTable t = unit_.table(s15, s25);
  if (s15 > kBlockFloor && s25 > kBlockFloor) return cm_det_block(t);
  return cm_det_5(t);
}

double gamma_eval(const DistanceSet& ds, const Vec3& p) { return WorkspaceSurface(ds)(p); }

std::array<double, 6> QuarticCoefficients::basis(const Vec3& p) const {
  return unit_basis(p / scale, d12 / scale);
}

double QuarticCoefficients::evaluate(const Vec3& p) const {
  const auto b = basis(p);
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) sum += q[i] * b[i];
  return sum;
}

double QuarticCoefficients::gamma(const Vec3& p) const { return normalization * evaluate(p); }

double QuarticCoefficients::term_magnitude(const Vec3& p) const {
  const auto b = basis(p);
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) sum += std::abs(q[i] * b[i]);
  return normalization * sum;
}

double QuarticCoefficients::physical(std::size_t i) const {
  return q.at(i) / std::pow(scale, kBasisDegree[i]);
}

QuarticCoefficients extract_coefficients(const DistanceSet& ds) {
  const double length = ds.characteristic_length();
  if (!(ds.d12() > 1e-9 * length)) {
    throw IllConditioned("d12 = 0: the z-dependent basis terms vanish");
  }
  const WorkspaceSurface surface(ds);

  constexpr int kFit = 16;
  constexpr int kHoldout = 8;
  const double d12 = ds.d12() / length;

  Eigen::Matrix<double, kFit, 6> design;
  Eigen::Matrix<double, kFit, 1> rhs;
  for (int k = 0; k < kFit; ++k) {
    const Vec3 u = halton_point(static_cast<unsigned>(k + 1));
    const auto b = unit_basis(u, d12);
    for (int j = 0; j < 6; ++j) design(k, j) = b[j];
    rhs(k) = surface(u * length);
  }

  Eigen::JacobiSVD<Eigen::Matrix<double, kFit, 6>> svd(design,
                                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double condition = sv(5) > 0 ? sv(0) / sv(5) : std::numeric_limits<double>::infinity();
  if (!(condition <= 1e12)) {
    throw IllConditioned("interpolation matrix condition " + std::to_string(condition));
  }
  const Eigen::Matrix<double, 6, 1> raw = svd.solve(rhs);

  QuarticCoefficients out;
  out.d12 = ds.d12();
  out.scale = length;
  out.condition = condition;
  out.normalization = raw.cwiseAbs().maxCoeff();
  if (!(out.normalization > 0)) out.normalization = 1.0;
  for (int j = 0; j < 6; ++j) out.q[j] = raw(j) / out.normalization;

  double worst = 0.0;
  for (int k = 0; k < kHoldout; ++k) {
    const Vec3 p = halton_point(static_cast<unsigned>(kFit + 1 + k)) * length;
    worst = std::max(worst, std::abs(out.gamma(p) - surface(p)) / out.normalization);
  }
  out.holdout_residual = worst;
  return out;
}

std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::Spherical: return "Spherical";
    case Topology::PumaLike: return "PumaLike";
    case Topology::Scara: return "Scara";
    case Topology::GeneralArticulated: return "GeneralArticulated";
  }
  return "?";
}

std::optional<Topology> topology_from_string(std::string_view s) {
  for (auto t : {Topology::Spherical, Topology::PumaLike, Topology::Scara,
                 Topology::GeneralArticulated}) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

AxisGeometry axis_geometry(const Embedding& emb) {
  const Vec3 axis = emb.p4 - emb.p3;
  const double length = emb.distances().characteristic_length();
  if (!(axis.norm() > 1e-12 * length)) throw DegenerateAxis2("P3 and P4 coincide");

  AxisGeometry g;
  g.axis2_point = emb.p3;
  g.axis2_direction = axis.normalized();
  const Vec3& u = g.axis2_direction;
  const Vec3 cross = Vec3::UnitZ().cross(u);
  const double sin_a = cross.norm();
  const double cos_a = u.z();
  g.angle = std::atan2(sin_a, std::abs(cos_a));

  if (sin_a < 1e-12) {
    g.common_normal = std::hypot(emb.p3.x(), emb.p3.y());
    g.foot_height = emb.p3.z();
    g.foot_on_axis2 = emb.p3;
    return g;
  }
  // Closest points t*e_z and p3 + s*u.
  const double s = (u.dot(emb.p3) - cos_a * emb.p3.z()) / (cos_a * cos_a - 1.0);
  g.foot_height = emb.p3.z() + s * cos_a;
  g.foot_on_axis2 = emb.p3 + s * u;
  g.common_normal = std::abs(emb.p3.dot(cross)) / sin_a;
  return g;
}

EffectorCircle effector_circle(const Embedding& emb) {
  const Vec3 axis = emb.p4 - emb.p3;
  const double length = emb.distances().characteristic_length();
  if (!(axis.norm() > 1e-12 * length)) throw DegenerateAxis2("P3 and P4 coincide");
  const Vec3 u = axis.normalized();
  EffectorCircle c;
  c.normal = u;
  c.center = emb.p3 + u.dot(emb.p5 - emb.p3) * u;
  c.radius = (emb.p5 - c.center).norm();
  return c;
}

TopologyClass classify(const Embedding& emb, double tau) {
  TopologyClass tc;
  tc.tau = tau;
  tc.distances = emb.distances();
  tc.scale = tc.distances.characteristic_length();
  tc.axes = axis_geometry(emb);
  tc.effector = effector_circle(emb);

  const double length = tc.scale;
  const auto& axes = tc.axes;
  const auto& circle = tc.effector;

  if (std::sin(axes.angle) <= tau) {
    tc.params = ScaraParams{circle.center.z()};
    return tc;
  }
  if (axes.common_normal <= tau * length) {
    const Vec3 meet(0, 0, axes.foot_height);
    if (std::abs(axes.foot_height) <= tau * length) {
      tc.params = SphericalParams{std::sqrt(circle.center.squaredNorm() +
                                            circle.radius * circle.radius)};
    } else {
      tc.params = PumaParams{axes.foot_height, std::sqrt((circle.center - meet).squaredNorm() +
                                                         circle.radius * circle.radius)};
    }
    return tc;
  }
  tc.params = GeneralParams{axes.common_normal,
                            axes.angle,
                            axes.foot_height,
                            axes.foot_on_axis2.z(),
                            circle.radius,
                            circle.radius <= tau * length};
  return tc;
}

CanonicalSurface::CanonicalSurface(TopologyClass tc) : tc_(std::move(tc)) {
  if (tc_.category() == Topology::GeneralArticulated) gamma_.emplace(tc_.distances);
}

double CanonicalSurface::operator()(const Vec3& p) const {
  const double length = tc_.scale;
  return std::visit(
      [&](const auto& params) -> double {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, SphericalParams>) {
          return (p.squaredNorm() - params.radius * params.radius) / (length * length);
        } else if constexpr (std::is_same_v<T, PumaParams>) {
          const Vec3 c(0, 0, params.center_height);
          return ((p - c).squaredNorm() - params.radius * params.radius) / (length * length);
        } else if constexpr (std::is_same_v<T, ScaraParams>) {
          return (p.z() - params.plane_height) / length;
        } else {
          return (*gamma_)(p);
        }
      },
      tc_.params);
}

std::optional<Vec3> CanonicalSurface::generator(double theta1, double phi) const {
  if (tc_.category() != Topology::GeneralArticulated) return std::nullopt;
  const auto& circle = tc_.effector;
  Vec3 a = Vec3::UnitZ() - circle.normal.z() * circle.normal;
  if (a.norm() < 1e-9) a = Vec3::UnitX() - circle.normal.x() * circle.normal;
  a.normalize();
  const Vec3 b = circle.normal.cross(a);
  const Vec3 on_circle = circle.center + circle.radius * (std::cos(phi) * a + std::sin(phi) * b);
  return Eigen::AngleAxisd(theta1, Vec3::UnitZ()) * on_circle;
}

CanonicalSurface canonical_reduce(const TopologyClass& tc) { return CanonicalSurface(tc); }

}  // namespace mws
