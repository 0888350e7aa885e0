#include <gtest/gtest.h>

#include <vector>

#include "rigidcal/error.hpp"
#include "rigidcal/geometry.hpp"
#include "support.hpp"

namespace rigidcal {
namespace {

using test::random_quaternion;
using test::random_rotation;
using test::random_unit;

void expect_rotation(const Mat3& r) {
  EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-9);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
}

void expect_quat_near(const Quaternion& a, const Quaternion& b, double tol) {
  EXPECT_LT(angular_distance(a, b), tol);
}

TEST(Quaternion, IdentityIsLeftNeutral) {
  CounterRng rng(1);
  const Quaternion q = random_quaternion(rng);
  const Quaternion r = quat_multiply(Quaternion::identity(), q);
  EXPECT_DOUBLE_EQ(r.w(), q.w());
  EXPECT_DOUBLE_EQ(r.x(), q.x());
  EXPECT_DOUBLE_EQ(r.y(), q.y());
  EXPECT_DOUBLE_EQ(r.z(), q.z());
}

TEST(Quaternion, QuarterTurnsAddOnCommonAxis) {
  const Quaternion q90 = Quaternion::from_axis_angle(Vec3::UnitZ(), kPi / 2);
  const Quaternion q = quat_multiply(q90, q90);
  expect_quat_near(q, Quaternion::from_axis_angle(Vec3::UnitZ(), kPi), 1e-12);
  EXPECT_NEAR(std::abs(q.z()), 1.0, 1e-12);
}

TEST(Quaternion, ProductMatchesMatrixComposition) {
  CounterRng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Quaternion a = random_quaternion(rng);
    const Quaternion b = random_quaternion(rng);
    const Mat3 lhs = quat_multiply(a, b).to_matrix();
    const Mat3 rhs = a.to_matrix() * b.to_matrix();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Quaternion, ResultsAreCanonicalAndUnit) {
  CounterRng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Quaternion q = quat_multiply(random_quaternion(rng), random_quaternion(rng));
    EXPECT_GE(q.w(), 0.0);
    EXPECT_NEAR(q.norm(), 1.0, 1e-9);
  }
}

TEST(Quaternion, MultiplyRenormalizesNearUnitInputs) {
  const Quaternion slightly_long(1.0 + 5e-7, 0.0, 0.0, 0.0);
  EXPECT_NEAR(quat_multiply(slightly_long, slightly_long).norm(), 1.0, 1e-12);
  const Quaternion long_q(1.1, 0.0, 0.0, 0.0);
  EXPECT_THROW((void)quat_multiply(long_q, Quaternion::identity()), Error);
}

TEST(Quaternion, MatrixRoundTrip) {
  CounterRng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Quaternion q = random_quaternion(rng);
    const Quaternion back = Quaternion::from_matrix(q.to_matrix());
    EXPECT_NEAR(back.w(), q.w(), 1e-12);
    EXPECT_NEAR(back.x(), q.x(), 1e-12);
    EXPECT_NEAR(back.y(), q.y(), 1e-12);
    EXPECT_NEAR(back.z(), q.z(), 1e-12);
  }
}

TEST(QuatPropagate, ZeroRateKeepsOrientation) {
  CounterRng rng(5);
  const Quaternion q = random_quaternion(rng);
  expect_quat_near(quat_propagate(q, Vec3::Zero(), 0.01), q, 1e-15);
}

TEST(QuatPropagate, QuarterTurnAboutZ) {
  const Quaternion q = quat_propagate(Quaternion::identity(), Vec3(0, 0, kPi / 2), 1.0);
  EXPECT_NEAR(q.w(), std::cos(kPi / 4), 1e-15);
  EXPECT_NEAR(q.z(), std::sin(kPi / 4), 1e-15);
  EXPECT_NEAR(q.x(), 0.0, 1e-15);
  EXPECT_NEAR(q.y(), 0.0, 1e-15);
}

TEST(QuatPropagate, ManySmallStepsMatchOneExponential) {
  const Vec3 omega(0.3, -0.2, 0.7);
  Quaternion q;
  for (int i = 0; i < 1000; ++i) {
    q = quat_propagate(q, omega, 1e-3);
  }
  const Quaternion exact = Quaternion::from_rotation_vector(omega);
  EXPECT_LT(angular_distance(q, exact), 1e-9);
}

TEST(QuatPropagate, TinyRatesUseSeriesLimit) {
  const Quaternion q = quat_propagate(Quaternion::identity(), Vec3(1e-12, 0, 0), 1.0);
  EXPECT_NEAR(q.x(), 0.5e-12, 1e-24);
  EXPECT_NEAR(q.norm(), 1.0, 1e-15);
}

TEST(QuatPropagate, OmegaMatrixFormAgreesWithClosedForm) {
  CounterRng rng(6);
  for (int i = 0; i < 100; ++i) {
    const Quaternion q0 = random_quaternion(rng);
    const Vec3 omega = test::random_vec(rng, 3.0);
    const double dt = rng.uniform(1e-3, 0.1);
    expect_quat_near(quat_propagate_omega_matrix(q0, omega, dt), quat_propagate(q0, omega, dt), 1e-12);
  }
}

TEST(QuatPropagate, NormSurvivesAMillionSteps) {
  Quaternion q;
  const Vec3 omega(0.9, -1.3, 0.4);
  for (int i = 0; i < 1'000'000; ++i) {
    q = quat_propagate(q, omega, 1e-3);
  }
  EXPECT_NEAR(q.norm(), 1.0, 1e-9);
}

TEST(Rotations, RpyRoundTrip) {
  const Mat3 r = rotation_from_rpy(0.1, -0.2, 0.3);
  const Vec3 rpy = rpy_from_rotation(r);
  EXPECT_NEAR(rpy.x(), 0.1, 1e-12);
  EXPECT_NEAR(rpy.y(), -0.2, 1e-12);
  EXPECT_NEAR(rpy.z(), 0.3, 1e-12);
  EXPECT_LT((r - rot_z(0.3) * rot_y(-0.2) * rot_x(0.1)).norm(), 1e-15);
}

TEST(Rotations, SkewAndVeeAreInverse) {
  CounterRng rng(7);
  const Vec3 a = test::random_vec(rng), b = test::random_vec(rng);
  EXPECT_LT((skew(a) * b - a.cross(b)).norm(), 1e-15);
  EXPECT_LT((vee(skew(a)) - a).norm(), 1e-15);
}

TEST(Rotations, GeodesicDistanceIsAccurateNearZero) {
  const Mat3 r = Quaternion::from_axis_angle(Vec3::UnitX(), 1e-9).to_matrix();
  EXPECT_NEAR(geodesic_distance(Mat3::Identity(), r), 1e-9, 1e-15);
  EXPECT_NEAR(rotation_angle(rot_y(2.5)), 2.5, 1e-12);
}

TEST(Rotations, OrthonormalizeProjectsOntoSO3) {
  CounterRng rng(8);
  Mat3 noisy = random_rotation(rng);
  for (int i = 0; i < 9; ++i) {
    noisy(i / 3, i % 3) += rng.uniform(-1e-3, 1e-3);
  }
  expect_rotation(orthonormalize(noisy));
}

TEST(RigidTransform, ComposeWithInverseIsIdentity) {
  CounterRng rng(9);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform T = test::random_transform(rng, FrameId("S"), FrameId::base(), 10.0);
    const RigidTransform I = T * T.inverse();
    EXPECT_LT((I.rotation - Mat3::Identity()).norm(), 1e-12);
    EXPECT_LT(I.translation.norm(), 1e-12);
    EXPECT_EQ(I.from, FrameId::base());
    EXPECT_EQ(I.to, FrameId::base());
  }
}

TEST(RigidTransform, InverseSwapsTags) {
  const RigidTransform T{rot_z(0.2), Vec3(1, 2, 3), FrameId("L1"), FrameId::base()};
  const RigidTransform inv = T.inverse();
  EXPECT_EQ(inv.from, FrameId::base());
  EXPECT_EQ(inv.to, FrameId("L1"));
  EXPECT_LT((inv.apply(T.apply(Vec3(4, 5, 6))) - Vec3(4, 5, 6)).norm(), 1e-12);
}

TEST(RigidTransform, ComposeRejectsBrokenChains) {
  const RigidTransform a = RigidTransform::identity(FrameId("A"), FrameId("B"));
  const RigidTransform c = RigidTransform::identity(FrameId("C"), FrameId("D"));
  try {
    (void)(a * c);
    FAIL() << "expected FrameMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFrameMismatch);
  }
}

TEST(RigidTransform, MatrixHasHomogeneousLayout) {
  const RigidTransform T{rot_x(0.4), Vec3(1, -2, 3), FrameId("A"), FrameId("B")};
  const Eigen::Matrix4d m = T.matrix();
  EXPECT_EQ((m.block<3, 3>(0, 0)), T.rotation);
  EXPECT_EQ((m.block<3, 1>(0, 3)), T.translation);
  EXPECT_EQ(m.row(3), Eigen::RowVector4d(0, 0, 0, 1));
}

std::vector<Correspondence> rotated_pairs(CounterRng& rng, const Mat3& r0, int n) {
  std::vector<Correspondence> pairs;
  for (int i = 0; i < n; ++i) {
    const Vec3 a = test::random_vec(rng, 2.0);
    pairs.push_back({a, r0 * a});
  }
  return pairs;
}

TEST(Kabsch, IdenticalPairsGiveIdentity) {
  CounterRng rng(10);
  const auto pairs = rotated_pairs(rng, Mat3::Identity(), 20);
  EXPECT_LT((kabsch_rotation(pairs) - Mat3::Identity()).norm(), 1e-12);
}

TEST(Kabsch, RecoversYaw45) {
  CounterRng rng(11);
  const Mat3 r0 = rot_z(deg2rad(45.0));
  const auto pairs = rotated_pairs(rng, r0, 50);
  EXPECT_LT((kabsch_rotation(pairs) - r0).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Kabsch, CollinearInputIsDegenerate) {
  std::vector<Correspondence> pairs;
  for (int i = 1; i <= 10; ++i) {
    pairs.push_back({Vec3(0, 0, i), Vec3(0, 0, i)});
  }
  try {
    (void)kabsch_rotation(pairs);
    FAIL() << "expected DegenerateInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
  }
}

TEST(Kabsch, RejectsReflections) {
  // A mirrored target set would be fit best by a reflection; the result must stay proper.
  CounterRng rng(12);
  std::vector<Correspondence> pairs;
  for (int i = 0; i < 30; ++i) {
    const Vec3 a = test::random_vec(rng);
    pairs.push_back({a, Vec3(a.x(), a.y(), -a.z())});
  }
  expect_rotation(kabsch_rotation(pairs));
}

TEST(Kabsch, LeftEquivariance) {
  CounterRng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Correspondence> pairs;
    for (int i = 0; i < 20; ++i) {
      pairs.push_back({test::random_vec(rng), test::random_vec(rng)});
    }
    const Mat3 r = kabsch_rotation(pairs);
    const Mat3 q = random_rotation(rng);
    std::vector<Correspondence> moved;
    for (const Correspondence& p : pairs) {
      moved.push_back({q * p.source, q * p.target});
    }
    EXPECT_LT((kabsch_rotation(moved) - q * r * q.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Kabsch, CovarianceCollapsesToTraceWeight) {
  CounterRng rng(14);
  std::vector<Correspondence> pairs;
  std::vector<Mat3> covs;
  std::vector<double> weights;
  for (int i = 0; i < 25; ++i) {
    pairs.push_back({test::random_vec(rng), test::random_vec(rng)});
    const Vec3 d(rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0));
    covs.push_back(d.asDiagonal());
    weights.push_back(d.cwiseInverse().sum() / 3.0);
  }
  EXPECT_LT((kabsch_rotation(pairs, covs) - kabsch_rotation_weighted(pairs, weights)).norm(), 1e-14);
}

TEST(Kabsch, OutputIsAlwaysARotation) {
  CounterRng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Correspondence> pairs;
    for (int i = 0; i < 5; ++i) {
      pairs.push_back({test::random_vec(rng), test::random_vec(rng)});
    }
    expect_rotation(kabsch_rotation(pairs));
  }
}

std::vector<Correspondence> direction_pairs(CounterRng& rng, const Mat3& r0, int n) {
  std::vector<Correspondence> pairs;
  for (int i = 0; i < n; ++i) {
    const Vec3 a = random_unit(rng);
    pairs.push_back({a, r0 * a});
  }
  return pairs;
}

TEST(Davenport, IdenticalNormalsGiveIdentity) {
  CounterRng rng(16);
  const Quaternion q = davenport_rotation(direction_pairs(rng, Mat3::Identity(), 10));
  EXPECT_NEAR(q.w(), 1.0, 1e-12);
}

TEST(Davenport, RecoversKnownRotation) {
  CounterRng rng(17);
  for (int i = 0; i < 50; ++i) {
    const Quaternion q0 = random_quaternion(rng);
    const Quaternion q = davenport_rotation(direction_pairs(rng, q0.to_matrix(), 10));
    EXPECT_LT(angular_distance(q, q0), 1e-8);
  }
}

TEST(Davenport, AgreesWithKabsch) {
  CounterRng rng(18);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r0 = random_rotation(rng);
    const auto pairs = direction_pairs(rng, r0, 2 + static_cast<int>(rng.below(20)));
    const Mat3 dav = davenport_rotation(pairs).to_matrix();
    EXPECT_LT(geodesic_distance(dav, kabsch_rotation(pairs)), 1e-6);
  }
}

TEST(Davenport, ParallelDirectionsAreDegenerate) {
  std::vector<Correspondence> pairs(5, Correspondence{Vec3::UnitZ(), Vec3::UnitZ()});
  EXPECT_THROW((void)davenport_rotation(pairs), Error);
}

TEST(Davenport, KMatrixIsSymmetric) {
  CounterRng rng(19);
  const Eigen::Matrix4d k = davenport_matrix(direction_pairs(rng, random_rotation(rng), 8));
  EXPECT_EQ(k, k.transpose());
}

TEST(JacobiEigen, MatchesEigenDecomposition) {
  CounterRng rng(20);
  for (int i = 0; i < 100; ++i) {
    Eigen::Matrix4d a;
    for (int r = 0; r < 4; ++r) {
      for (int c = r; c < 4; ++c) {
        a(r, c) = a(c, r) = rng.uniform(-1, 1);
      }
    }
    const SymmetricEigen4 eig = jacobi_eigen(a);
    for (int k = 0; k < 4; ++k) {
      EXPECT_LT((a * eig.vectors.col(k) - eig.values(k) * eig.vectors.col(k)).norm(), 1e-10);
    }
    EXPECT_LE(eig.values(0), eig.values(1));
    EXPECT_LE(eig.values(2), eig.values(3));
  }
}

}  // namespace
}  // namespace rigidcal
