#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mws/datasets.hpp"
#include "mws/errors.hpp"
#include "mws/surface.hpp"
#include "support/oracles.hpp"

using namespace mws;

namespace {

// P3 at the origin: the two axes meet at P1.
DistanceSet spherical_set(double d35 = 0.8) {
  const Vec3 p4(0.6, 0.2, 0.9);
  const Vec3 p5 = Vec3(0.3, -0.5, 0.4).normalized() * d35;
  return oracle::set_of({Vec3::Zero(), Vec3(0, 0, 1), Vec3::Zero(), p4, p5});
}

// P4 on P2: the axes meet at height d12.
DistanceSet puma_set(double d12 = 2.0, double d45 = 1.0) {
  const Vec3 p3(0.9, 0.1, 0.4);
  const Vec3 p4(0, 0, d12);
  const Vec3 p5 = p4 + Vec3(0.2, 0.7, -0.3).normalized() * d45;
  return oracle::set_of({Vec3::Zero(), Vec3(0, 0, d12), p3, p4, p5});
}

// Vertical second axis, effector at height z5.
DistanceSet scara_set(double z5 = 100.0) {
  return oracle::set_of({Vec3::Zero(), Vec3(0, 0, 80), Vec3(300, 0, 50), Vec3(300, 0, 150),
                         Vec3(480, 60, z5)});
}

TopologyClass classify_set(const DistanceSet& ds, double tau = 0.05) {
  return classify(embed(ds), tau);
}

}  // namespace

TEST(Gamma, VanishesOnReachablePoints) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto p = oracle::random_points(rng);
    // Move the frame so that P1 is at the origin and P2 on +z.
    const DistanceSet ds = oracle::set_of(p);
    const Embedding e = embed(ds);
    EXPECT_LE(std::abs(gamma_eval(ds, e.p5)), 1e-12);
  }
}

TEST(Gamma, AxisymmetricAboutFirstAxis) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const DistanceSet ds = oracle::set_of(oracle::random_points(rng));
  const WorkspaceSurface surface(ds);
  for (int k = 0; k < 20; ++k) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const double angle = 2 * M_PI * (u(rng) + 1) / 2;
    const Vec3 q = Eigen::AngleAxisd(angle, Vec3::UnitZ()) * p;
    EXPECT_NEAR(surface(p), surface(q), 1e-13);
  }
}

TEST(Gamma, SphereAboutOrigin) {
  const DistanceSet ds = spherical_set(0.8);
  const WorkspaceSurface surface(ds);
  EXPECT_NEAR(surface(Vec3(0, 0, 0.8)), 0.0, 1e-14);
  EXPECT_NEAR(surface(Vec3(0.8, 0, 0) * std::sqrt(0.5) + Vec3(0, 0.8, 0) * std::sqrt(0.5)), 0.0,
              1e-14);
  EXPECT_GT(std::abs(surface(Vec3(0, 0, 0.9))), 1e-8);
}

TEST(Gamma, PumaNorthPole) {
  const WorkspaceSurface surface(puma_set(2.0, 1.0));
  EXPECT_NEAR(surface(Vec3(0, 0, 3)), 0.0, 1e-14);
  EXPECT_NEAR(surface(Vec3(1, 0, 2)), 0.0, 1e-14);
}

TEST(Gamma, NearPoleUsesDirectDeterminant) {
  // s15 -> 0 is outside the block form's domain; the value stays continuous.
  std::mt19937_64 rng(6);
  const DistanceSet ds = oracle::set_of(oracle::random_points(rng));
  const WorkspaceSurface surface(ds);
  const double at = surface(Vec3::Zero());
  const double near = surface(Vec3(1e-4, 0, 0));
  EXPECT_NEAR(at, near, 1e-6);
  const Eigen::MatrixXd t = ds.table(0, ds.s12);
  EXPECT_NEAR(at * std::pow(ds.characteristic_length(), 8), oracle::cm5(t), 1e-12);
}

TEST(Gamma, RejectsNonEmbeddable) {
  const auto ds = DistanceSet::from_distances(1, 3, 1.5, 1, 1.2, 1, 1, 1);
  EXPECT_THROW(WorkspaceSurface{ds}, NotEmbeddable);
}

TEST(Coefficients, SphericalIsSquaredSphere) {
  const DistanceSet ds = spherical_set(0.8);
  const auto c = extract_coefficients(ds);
  const double q0 = c.physical(0);
  ASSERT_GT(std::abs(q0), 1e-6);
  EXPECT_NEAR(c.physical(1) / q0, 0.0, 1e-8);
  EXPECT_NEAR(c.physical(2) / q0, -2 * ds.s35, 1e-8);
  EXPECT_NEAR(c.physical(3) / q0, -2 * ds.s35, 1e-8);
  EXPECT_NEAR(c.physical(4) / q0, 0.0, 1e-8);
  EXPECT_NEAR(c.physical(5) / q0, ds.s35 * ds.s35, 1e-8);
}

TEST(Coefficients, PumaIsSquaredOffsetSphere) {
  const DistanceSet ds = puma_set(2.0, 1.0);
  const auto c = extract_coefficients(ds);
  const double k = ds.s12 - ds.s45;
  const double d12 = ds.d12();
  const double q0 = c.physical(0);
  // (r^2 - 2 d12 z + s12 - s45)^2 expanded in the basis.
  EXPECT_NEAR(c.physical(1) / q0, -4.0, 1e-8);
  EXPECT_NEAR(c.physical(2) / q0, 2 * k, 1e-8);
  EXPECT_NEAR(c.physical(3) / q0, 2 * k + 4 * d12 * d12, 1e-8);
  EXPECT_NEAR(c.physical(4) / q0, -4 * k, 1e-8);
  EXPECT_NEAR(c.physical(5) / q0, k * k, 1e-8);
}

TEST(Coefficients, RandomSetsMatchDeterminant) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 20; ++k) {
    const DistanceSet ds = oracle::set_of(oracle::random_points(rng));
    const auto c = extract_coefficients(ds);
    EXPECT_LE(c.holdout_residual, 1e-8);
    EXPECT_DOUBLE_EQ(std::abs(*std::max_element(c.q.begin(), c.q.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    })), 1.0);
    const WorkspaceSurface surface(ds);
    for (int j = 0; j < 20; ++j) {
      const Vec3 p(u(rng), u(rng), u(rng));
      EXPECT_LE(std::abs(c.gamma(p) - surface(p)), 1e-8 * c.term_magnitude(p));
    }
  }
}

TEST(Coefficients, ScaleInvariantInUnitCoordinates) {
  std::mt19937_64 rng(12);
  const DistanceSet ds = oracle::set_of(oracle::random_points(rng));
  const auto a = extract_coefficients(ds);
  const auto b = extract_coefficients(ds.scaled(250.0));
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(a.q[i], b.q[i], 1e-9);
}

TEST(Coefficients, ZeroD12IsIllConditioned) {
  const auto ds = DistanceSet::from_distances(0, 1, 1.2, 1, 1.2, 0.7, 0.5, 0.6);
  EXPECT_THROW(extract_coefficients(ds), IllConditioned);
}

TEST(Classify, SphericalSet) {
  const auto tc = classify_set(spherical_set(0.8));
  ASSERT_EQ(tc.category(), Topology::Spherical);
  EXPECT_NEAR(std::get<SphericalParams>(tc.params).radius, 0.8, 1e-12);
}

TEST(Classify, PumaSet) {
  const auto tc = classify_set(puma_set(2.0, 1.0));
  ASSERT_EQ(tc.category(), Topology::PumaLike);
  EXPECT_NEAR(std::get<PumaParams>(tc.params).center_height, 2.0, 1e-12);
  EXPECT_NEAR(std::get<PumaParams>(tc.params).radius, 1.0, 1e-12);
}

TEST(Classify, ExactlyParallelAxesIsScara) {
  const auto tc = classify_set(scara_set(100.0));
  ASSERT_EQ(tc.category(), Topology::Scara);
  EXPECT_NEAR(std::get<ScaraParams>(tc.params).plane_height, 100.0, 1e-9);
  EXPECT_NEAR(tc.axes.angle, 0.0, 1e-12);
}

TEST(Classify, GenericSetIsGeneral) {
  const DistanceSet ds = oracle::set_of({Vec3::Zero(), Vec3(0, 0, 1), Vec3(0.5, 0, 0.2),
                                         Vec3(0.5, 0.8, 0.6), Vec3(1.0, 0.9, 0.1)});
  const auto tc = classify_set(ds);
  ASSERT_EQ(tc.category(), Topology::GeneralArticulated);
  const auto& g = std::get<GeneralParams>(tc.params);
  EXPECT_NEAR(g.common_normal, 0.5, 1e-12);  // axis 2 lies in the plane x = 0.5
  EXPECT_GT(g.tube_radius, 0.0);
}

TEST(Classify, InvariantUnderRigidMotionAndScale) {
  std::mt19937_64 rng(33);
  for (int k = 0; k < 30; ++k) {
    auto p = oracle::random_points(rng);
    const auto base = classify_set(oracle::set_of(p));
    const auto [rot, shift] = oracle::random_rigid_motion(rng);
    for (auto& v : p) v = rot * v + shift;
    const auto moved = classify_set(oracle::set_of(p));
    EXPECT_EQ(base.category(), moved.category());
    EXPECT_NEAR(base.axes.common_normal, moved.axes.common_normal, 1e-9);
    EXPECT_NEAR(base.axes.angle, moved.axes.angle, 1e-9);
    const auto scaled = classify_set(oracle::set_of(p).scaled(40.0));
    EXPECT_EQ(base.category(), scaled.category());
    EXPECT_NEAR(scaled.axes.common_normal, 40.0 * base.axes.common_normal, 1e-7);
  }
}

TEST(Classify, MeasuredSetsAllClassify) {
  for (const auto& name : bundled_names()) {
    const auto record = *bundled_dataset(name);
    const auto proj = project_consistent(record.distances, 0.005);
    const auto tc = classify(proj.embedding);
    std::printf("%s label=%s got=%s g/L=%.4f sin(a)=%.4f z*/L=%.4f\n", name.c_str(),
                record.label ? std::string(to_string(*record.label)).c_str() : "-",
                std::string(to_string(tc.category())).c_str(), tc.axes.common_normal / tc.scale,
                std::sin(tc.axes.angle), tc.axes.foot_height / tc.scale);
    SUCCEED();
  }
}

TEST(Classify, TightToleranceSeesMeasuredConfigFAsGeneral) {
  const auto proj = project_consistent(bundled_dataset("fig5_f")->distances, 0.005);
  EXPECT_EQ(classify(proj.embedding, 0.01).category(), Topology::GeneralArticulated);
}

TEST(CanonicalSurface, SphereOfRadius455) {
  const DistanceSet ds = spherical_set(1.0).scaled(455.0);
  const auto surface = canonical_reduce(classify_set(ds));
  EXPECT_NEAR(surface(Vec3(0, 0, 455)), 0.0, 1e-12);
  EXPECT_NEAR(surface(Vec3(455, 0, 0)), 0.0, 1e-12);
  EXPECT_FALSE(surface.generator(0, 0).has_value());
}

TEST(CanonicalSurface, ScaraPlane) {
  const auto surface = canonical_reduce(classify_set(scara_set(100.0)));
  EXPECT_NEAR(surface(Vec3(7, -3, 100)), 0.0, 1e-12);
  EXPECT_GT(std::abs(surface(Vec3(7, -3, 101))), 1e-4);
}

TEST(CanonicalSurface, GeneralGeneratorLiesOnGamma) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
  for (int k = 0; k < 10; ++k) {
    const auto tc = classify_set(oracle::set_of(oracle::random_points(rng)));
    if (tc.category() != Topology::GeneralArticulated) continue;
    const auto surface = canonical_reduce(tc);
    for (int j = 0; j < 20; ++j) {
      const auto p = surface.generator(angle(rng), angle(rng));
      ASSERT_TRUE(p.has_value());
      EXPECT_LE(std::abs(surface(*p)), 1e-9);
    }
  }
}

TEST(Topology, NamesRoundTrip) {
  for (auto t : {Topology::Spherical, Topology::PumaLike, Topology::Scara,
                 Topology::GeneralArticulated}) {
    EXPECT_EQ(topology_from_string(to_string(t)), t);
  }
  EXPECT_FALSE(topology_from_string("Cartesian").has_value());
}
