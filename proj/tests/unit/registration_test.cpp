#include <tlsdeform/error.hpp>
#include <tlsdeform/registration.hpp>
#include <tlsdeform/synth.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <algorithm>
#include <numbers>
#include <random>

namespace tlsdeform {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

FacadeSpec small_facade() {
  FacadeSpec f;
  f.width = 3.0;
  f.height = 2.4;
  f.spacing = 0.03;
  f.windows_x = 2;
  f.windows_z = 2;
  f.window_width = 0.6;
  f.window_height = 0.7;
  return f;
}

Point3 sensor_in_front(const PointCloud& c) {
  Point3 m = Point3::Zero();
  for (const auto& p : c) m += p;
  return m / static_cast<double>(c.size()) - 10.0 * Vector3::UnitY();
}

double transform_error_angle(const RigidTransform& recovered, const RigidTransform& motion) {
  return (recovered * motion).angle();
}

double transform_error_translation(const RigidTransform& recovered, const RigidTransform& motion) {
  return (recovered * motion).translation().norm();
}

TEST(Normals, PlaneFacesSensor) {
  std::vector<Point3> pts;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) pts.emplace_back(0.05 * i, 0.05 * j, 0.0);
  }
  const NormalField n = estimate_normals(PointCloud(pts), 0.12, Point3(0.5, 0.5, 3.0));
  ASSERT_EQ(n.size(), pts.size());
  EXPECT_EQ(n.valid_count(), pts.size());
  for (std::size_t i = 0; i < n.size(); ++i) EXPECT_LT((n.normals[i] - Vector3::UnitZ()).norm(), 1e-12);
  const NormalField below = estimate_normals(PointCloud(pts), 0.12, Point3(0.5, 0.5, -3.0));
  EXPECT_LT((below.normals[0] + Vector3::UnitZ()).norm(), 1e-12);
}

TEST(Normals, CylinderNormalsAreRadial) {
  const double radius = 2.0;
  std::vector<Point3> pts;
  for (int i = 0; i < 180; ++i) {
    for (int j = 0; j < 30; ++j) {
      const double a = 2 * std::numbers::pi * i / 180.0;
      pts.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.07 * j);
    }
  }
  const NormalField n = estimate_normals(PointCloud(pts), 0.2, Point3::Zero());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!n.is_valid(i)) continue;
    const Vector3 inward = -Vector3(pts[i].x(), pts[i].y(), 0).normalized();
    EXPECT_NEAR(std::abs(n.normals[i].norm() - 1.0), 0.0, 1e-9);
    EXPECT_GT(n.normals[i].dot((Point3::Zero() - pts[i])), 0.0);
    EXPECT_LT(std::acos(std::clamp(n.normals[i].dot(inward), -1.0, 1.0)), 2.0 * kDeg);
  }
  EXPECT_GT(n.valid_count(), pts.size() * 9 / 10);
}

TEST(Normals, IsolatedAndCollinearNeighbourhoodsInvalid) {
  std::vector<Point3> pts{Point3(10, 10, 10)};
  for (int i = 0; i < 10; ++i) pts.emplace_back(0.01 * i, 0, 0);  // a line
  const NormalField n = estimate_normals(PointCloud(pts), 0.05, Point3(0, 0, 5));
  for (std::size_t i = 0; i < n.size(); ++i) {
    EXPECT_FALSE(n.is_valid(i)) << i;
    EXPECT_EQ(n.normals[i], Vector3::Zero());
  }
}

TEST(RegisterTargets, CoincidentPairsGiveIdentity) {
  const auto pts = oracle::uniform_points(5, 1);
  std::vector<PointPair> pairs;
  for (const auto& p : pts) pairs.emplace_back(p, p);
  const RegistrationResult r = register_targets(pairs);
  EXPECT_LT(r.transform.angle(), 1e-12);
  EXPECT_LT(r.transform.translation().norm(), 1e-12);
  EXPECT_LT(r.rmse, 1e-12);
}

TEST(RegisterTargets, RecoversExactTransform) {
  const auto motion = RigidTransform::from_axis_angle(Vector3::UnitZ(), 30 * kDeg, Vector3(1, 2, 0));
  const auto refs = oracle::uniform_points(5, 2, Point3(-5, -5, 0), Point3(5, 5, 3));
  std::vector<PointPair> pairs;
  for (const auto& r : refs) pairs.emplace_back(r, motion.inverse().apply(r));
  const RegistrationResult r = register_targets(pairs);
  EXPECT_LT(r.rmse, 1e-9);
  for (const auto& [ref, qry] : pairs) EXPECT_LT((r.transform.apply(qry) - ref).norm(), 1e-9);
  EXPECT_NEAR(r.transform.angle(), 30 * kDeg, 1e-12);
}

TEST(RegisterTargets, NoisyPairsMonteCarlo) {
  const auto motion = RigidTransform::from_axis_angle(Vector3::UnitZ(), 30 * kDeg, Vector3(1, 2, 0));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.001);
    const auto refs = oracle::uniform_points(6, 1000 + seed, Point3(-10, -10, 0), Point3(10, 10, 5));
    std::vector<PointPair> pairs;
    for (const auto& r : refs) {
      const Point3 noisy = r + Vector3(g(rng), g(rng), g(rng));
      pairs.emplace_back(noisy, motion.inverse().apply(r));
    }
    const RegistrationResult r = register_targets(pairs);
    EXPECT_GT(r.rmse, 0.0003);
    EXPECT_LT(r.rmse, 0.003);
    EXPECT_LT(std::abs(r.transform.angle() - 30 * kDeg), 0.5 * kDeg);
    EXPECT_LT((r.transform.translation() - motion.translation()).norm(), 0.005);
  }
}

TEST(RegisterTargets, DegenerateConfigurations) {
  std::vector<PointPair> two{{Point3(0, 0, 0), Point3(0, 0, 0)}, {Point3(1, 0, 0), Point3(1, 0, 0)}};
  EXPECT_THROW(register_targets(two), DegenerateInputError);
  std::vector<PointPair> line;
  for (int i = 0; i < 5; ++i) line.emplace_back(Point3(i, 2 * i, 0), Point3(i, 2 * i, 1));
  EXPECT_THROW(register_targets(line), DegenerateInputError);
}

TEST(RegisterTargets, InvariantToRelabelingAndJointRigidMotion) {
  const auto motion = RigidTransform::from_axis_angle(Vector3(1, 1, 0), 12 * kDeg, Vector3(0.3, -1, 2));
  const auto refs = oracle::uniform_points(8, 3, Point3(-4, -4, -1), Point3(4, 4, 1));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.002);
  std::vector<PointPair> pairs;
  for (const auto& r : refs) pairs.emplace_back(r + Vector3(g(rng), g(rng), g(rng)), motion.apply(r));
  const RegistrationResult base = register_targets(pairs);

  std::vector<PointPair> shuffled = pairs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const RegistrationResult relabeled = register_targets(shuffled);
  EXPECT_EQ(relabeled.transform.rotation(), base.transform.rotation());
  EXPECT_EQ(relabeled.transform.translation(), base.transform.translation());
  EXPECT_EQ(relabeled.rmse, base.rmse);

  // Moving both sets by g changes the fit to g·T·g⁻¹.
  const auto joint = RigidTransform::from_axis_angle(Vector3(0, 0.2, 1), 1.0, Vector3(50, 20, -3));
  std::vector<PointPair> moved;
  for (const auto& [r, q] : pairs) moved.emplace_back(joint.apply(r), joint.apply(q));
  const RegistrationResult m = register_targets(moved);
  const RigidTransform expected = joint * base.transform * joint.inverse();
  EXPECT_LT((m.transform.rotation() - expected.rotation()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((m.transform.translation() - expected.translation()).norm(), 1e-9);
  EXPECT_NEAR(m.rmse, base.rmse, 1e-12);
}

class FacadeIcp : public ::testing::Test {
 protected:
  void SetUp() override {
    reference_ = gen_facade(small_facade());
    normals_ = estimate_normals(reference_, 0.09, sensor_in_front(reference_));
  }
  PointCloud reference_;
  NormalField normals_;
};

TEST_F(FacadeIcp, IdentityStart) {
  const RegistrationResult r = icp_point_to_plane(reference_, reference_, normals_);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.transform.angle(), 1e-12);
  EXPECT_LT(r.transform.translation().norm(), 1e-12);
  EXPECT_LT(r.rmse, 1e-12);
  EXPECT_EQ(r.rank, 6);
}

TEST_F(FacadeIcp, NoiseFreeDisplacementsInsideBasin) {
  const std::vector<std::pair<Vector3, double>> rotations{
      {Vector3(0.3, 1, 0.5), 2.0}, {Vector3(1, 0, 0), 5.0}, {Vector3(0, 0, 1), -5.0}, {Vector3(0, 1, 0), 4.0}};
  const std::vector<Vector3> shifts{Vector3(0.05, -0.03, 0.02), Vector3(0.2, 0, 0), Vector3(0, 0.1, -0.15),
                                    Vector3(-0.1, 0.05, 0.1)};
  for (std::size_t k = 0; k < rotations.size(); ++k) {
    const auto motion = RigidTransform::from_axis_angle(rotations[k].first, rotations[k].second * kDeg, shifts[k]);
    const RegistrationResult r = icp_point_to_plane(apply_transform(reference_, motion), reference_, normals_);
    EXPECT_TRUE(r.converged) << k;
    EXPECT_LT(transform_error_angle(r.transform, motion), 1e-4) << k;
    EXPECT_LT(transform_error_translation(r.transform, motion), 1e-4) << k;
  }
}

TEST_F(FacadeIcp, ObjectiveNonIncreasingEveryIteration) {
  FacadeSpec f = small_facade();
  f.noise = 0.001;
  f.seed = 5;
  const auto motion = RigidTransform::from_axis_angle(Vector3(0.3, 1, 0.5), 2 * kDeg, Vector3(0.05, -0.03, 0.02));
  const PointCloud query = apply_transform(gen_facade(f), motion);
  const RegistrationResult r = icp_point_to_plane(query, reference_, normals_);
  ASSERT_EQ(r.history.size(), static_cast<std::size_t>(r.iterations));
  for (const auto& it : r.history) EXPECT_LE(it.objective_after, it.objective_before);
  EXPECT_GT(r.inlier_fraction, 0.0);
  EXPECT_LE(r.inlier_fraction, 1.0);
  EXPECT_GE(r.rmse, 0.0);
}

TEST_F(FacadeIcp, UnitEmphasisIsBitIdentical) {
  const auto motion = RigidTransform::from_axis_angle(Vector3(0, 1, 0.2), 1 * kDeg, Vector3(0.02, 0.01, 0));
  const PointCloud query = apply_transform(reference_, motion);
  IcpParams weighted;
  weighted.emphasis = EmphasisRegion{{Point3(0, -1, 0), Point3(1.5, 1, 1.2)}, 1.0};
  const RegistrationResult a = icp_point_to_plane(query, reference_, normals_);
  const RegistrationResult b = icp_point_to_plane(query, reference_, normals_, weighted);
  EXPECT_EQ(a.transform.rotation(), b.transform.rotation());
  EXPECT_EQ(a.transform.translation(), b.transform.translation());
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.rmse, b.rmse);
}

TEST_F(FacadeIcp, ParameterValidation) {
  IcpParams p;
  p.max_iterations = 0;
  EXPECT_THROW(icp_point_to_plane(reference_, reference_, normals_, p), InvalidArgumentError);
  p = {};
  p.rejection_factor = 1.0;
  EXPECT_THROW(icp_point_to_plane(reference_, reference_, normals_, p), InvalidArgumentError);
  p = {};
  p.emphasis = EmphasisRegion{{Point3::Zero(), Point3::Ones()}, 0.5};
  EXPECT_THROW(icp_point_to_plane(reference_, reference_, normals_, p), InvalidArgumentError);
  EXPECT_THROW(icp_point_to_plane(PointCloud{}, reference_, normals_), EmptyInputError);
}

TEST(Icp, PurePlaneIsRankDeficient) {
  FacadeSpec f = small_facade();
  f.windows_x = 0;
  f.windows_z = 0;
  const PointCloud plane = gen_facade(f);
  const NormalField n = estimate_normals(plane, 0.09, sensor_in_front(plane));
  const auto motion = RigidTransform::from_axis_angle(Vector3::UnitY(), 0.01, Vector3(0.05, 0.01, 0.0));
  const RegistrationResult r = icp_point_to_plane(apply_transform(plane, motion), plane, n);
  EXPECT_EQ(r.rank, 3);
  // The tangent motion is not recovered.
  EXPECT_GT(transform_error_translation(r.transform, motion), 0.01);
}

TEST(Icp, ZeroRecessMatchesPlane) {
  FacadeSpec a = small_facade();
  a.recess = 0.0;
  FacadeSpec b = small_facade();
  b.windows_x = 0;
  b.windows_z = 0;
  const PointCloud pa = gen_facade(a), pb = gen_facade(b);
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i], pb[i]);
}

TEST(Icp, AllInvalidNormalsFail) {
  const PointCloud c(oracle::uniform_points(50, 1, Point3::Zero(), Point3(10, 10, 10)));
  const NormalField n = estimate_normals(c, 1e-4, Point3(0, 0, 100));
  EXPECT_THROW(icp_point_to_plane(c, c, n), RegistrationError);
}

TEST(RegistrationQc, IdenticalAndOffset) {
  WallSpec w;
  w.length = 1.0;
  w.height = 0.5;
  w.spacing = 0.02;
  const PointCloud ref = gen_wall(w);
  const QcReport same = registration_qc(ref, ref);
  EXPECT_EQ(same.mean, 0.0);
  EXPECT_EQ(same.max_abs, 0.0);
  EXPECT_EQ(same.count, ref.size());

  const PointCloud flat = gen_wall([] {
    WallSpec s;
    s.length = 1.0;
    s.height = 0.5;
    s.spacing = 0.02;
    s.amplitude = 0.0;
    s.noise = 0.0;
    return s;
  }());
  const PointCloud shifted = apply_transform(flat, RigidTransform(Matrix3::Identity(), Vector3(0, 0.001, 0)));
  const QcReport off = registration_qc(flat, shifted);
  EXPECT_NEAR(off.mean, 0.001, 1e-12);
  EXPECT_EQ(off.distances.size(), shifted.size());
}

}  // namespace
}  // namespace tlsdeform
