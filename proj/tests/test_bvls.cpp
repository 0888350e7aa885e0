#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "rigidcal/error.hpp"
#include "rigidcal/signal_calib.hpp"
#include "support.hpp"

namespace rigidcal {
namespace {

double objective(const Eigen::MatrixX3d& a, const Eigen::VectorXd& b, std::span<const double> w,
                 const Vec3& x) {
  const Eigen::VectorXd r = a * x - b;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    sum += (w.empty() ? 1.0 : w[static_cast<std::size_t>(i)]) * r(i) * r(i);
  }
  return sum;
}

struct Problem {
  Eigen::MatrixX3d a;
  Eigen::VectorXd b;
  std::vector<double> w;
  TranslationBounds bounds;
};

// Well-conditioned random problem whose unconstrained optimum mostly lies outside tight bounds.
Problem random_problem(CounterRng& rng, int rows = 30) {
  Problem p;
  do {
    p.a.resize(rows, 3);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < 3; ++j) {
        p.a(i, j) = rng.uniform(-1, 1);
      }
    }
    const Eigen::JacobiSVD<Eigen::MatrixX3d> svd(p.a);
    if (svd.singularValues()(0) / svd.singularValues()(2) < 10.0) {
      break;
    }
  } while (true);
  p.b.resize(rows);
  for (int i = 0; i < rows; ++i) {
    p.b(i) = rng.uniform(-3, 3);
    p.w.push_back(rng.uniform(0.5, 2.0));
  }
  const Vec3 lo(rng.uniform(-0.5, 0.0), rng.uniform(-0.5, 0.0), rng.uniform(-0.5, 0.0));
  p.bounds = {lo, lo + Vec3(rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5))};
  return p;
}

TEST(Bvls, InactiveBoundsGiveWeightedLeastSquares) {
  CounterRng rng(1);
  Problem p = random_problem(rng);
  p.bounds = TranslationBounds::around(Vec3::Zero(), 1e3);
  const BvlsResult r = bvls_solve(p.a, p.b, p.w, p.bounds, Vec3::Zero());
  const Eigen::VectorXd sw = Eigen::Map<const Eigen::VectorXd>(p.w.data(), p.w.size()).cwiseSqrt();
  const Vec3 ls = (sw.asDiagonal() * p.a).colPivHouseholderQr().solve(sw.asDiagonal() * p.b);
  EXPECT_LT((r.x - ls).norm(), 1e-10);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.active, Eigen::Vector3i::Zero());
}

TEST(Bvls, OneDimensionalActiveUpperBound) {
  Eigen::MatrixX3d a = Eigen::MatrixX3d::Identity(3, 3);
  Eigen::VectorXd b(3);
  b << 2.0, 0.0, 0.0;
  const TranslationBounds bounds{Vec3::Constant(-5.0), Vec3(1.0, 5.0, 5.0)};
  const BvlsResult r = bvls_solve(a, b, {}, bounds, Vec3::Zero());
  EXPECT_EQ(r.x, Vec3(1.0, 0.0, 0.0));
  EXPECT_EQ(r.active(0), 1);
  EXPECT_DOUBLE_EQ(r.objective, 1.0);
}

TEST(Bvls, BeatsRandomFeasiblePoints) {
  CounterRng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Problem p = random_problem(rng);
    const Vec3 x0 = p.bounds.lower;
    const BvlsResult r = bvls_solve(p.a, p.b, p.w, p.bounds, x0);
    const double best = objective(p.a, p.b, p.w, r.x);
    for (int k = 0; k < 10000; ++k) {
      const Vec3 x(rng.uniform(p.bounds.lower.x(), p.bounds.upper.x()),
                   rng.uniform(p.bounds.lower.y(), p.bounds.upper.y()),
                   rng.uniform(p.bounds.lower.z(), p.bounds.upper.z()));
      ASSERT_LE(best, objective(p.a, p.b, p.w, x) + 1e-12) << "trial " << trial;
    }
  }
}

TEST(Bvls, OutputAlwaysInsideBounds) {
  CounterRng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const Problem p = random_problem(rng, 10);
    const Vec3 x0 = 0.5 * (p.bounds.lower + p.bounds.upper);
    const BvlsResult r = bvls_solve(p.a, p.b, p.w, p.bounds, x0);
    EXPECT_TRUE((r.x.array() >= p.bounds.lower.array()).all());
    EXPECT_TRUE((r.x.array() <= p.bounds.upper.array()).all());
  }
}

TEST(Bvls, SatisfiesKktConditions) {
  CounterRng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Problem p = random_problem(rng);
    const BvlsResult r = bvls_solve(p.a, p.b, p.w, p.bounds, p.bounds.upper);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(p.w.data(), p.w.size());
    const Vec3 grad = p.a.transpose() * w.asDiagonal() * (p.a * r.x - p.b);
    for (int k = 0; k < 3; ++k) {
      if (r.active(k) == 0) {
        EXPECT_NEAR(grad(k), 0.0, 1e-9);
      } else if (r.active(k) < 0) {
        EXPECT_GE(grad(k), -1e-9);
      } else {
        EXPECT_LE(grad(k), 1e-9);
      }
    }
  }
}

TEST(Bvls, UniformWeightScalingIsBitwiseInvariant) {
  CounterRng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Problem p = random_problem(rng);
    std::vector<double> doubled = p.w;
    for (double& w : doubled) {
      w *= 2.0;
    }
    const Vec3 x0 = p.bounds.lower;
    EXPECT_EQ(bvls_solve(p.a, p.b, p.w, p.bounds, x0).x, bvls_solve(p.a, p.b, doubled, p.bounds, x0).x);
  }
}

TEST(Bvls, StartOutsideBoundsIsRejected) {
  const Eigen::MatrixX3d a = Eigen::MatrixX3d::Identity(3, 3);
  const Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  try {
    (void)bvls_solve(a, b, {}, TranslationBounds::around(Vec3::Zero(), 1.0), Vec3(2, 0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPreconditionViolated);
  }
}

TEST(Bvls, SingularProblemWithoutActiveBoundIsIllConditioned) {
  Eigen::MatrixX3d a = Eigen::MatrixX3d::Zero(4, 3);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(4);
  try {
    (void)bvls_solve(a, b, {}, TranslationBounds::around(Vec3::Zero(), 1.0), Vec3::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIllConditioned);
  }
}

TEST(Bvls, SingularDirectionPinnedByBoundIsAccepted) {
  // x_z carries no information, but the optimum of x_x lies on its bound.
  Eigen::MatrixX3d a = Eigen::MatrixX3d::Zero(2, 3);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  Eigen::VectorXd b(2);
  b << 3.0, 0.5;
  const BvlsResult r = bvls_solve(a, b, {}, TranslationBounds::around(Vec3::Zero(), 1.0), Vec3::Zero());
  EXPECT_DOUBLE_EQ(r.x.x(), 1.0);
  EXPECT_NEAR(r.x.y(), 0.5, 1e-12);
}

TEST(Bvls, InvertedBoundsAreInvalid) {
  const Eigen::MatrixX3d a = Eigen::MatrixX3d::Identity(3, 3);
  const Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  const TranslationBounds bad{Vec3(1, 0, 0), Vec3(0, 1, 1)};
  EXPECT_THROW((void)bvls_solve(a, b, {}, bad, Vec3(0.5, 0.5, 0.5)), Error);
}

}  // namespace
}  // namespace rigidcal
