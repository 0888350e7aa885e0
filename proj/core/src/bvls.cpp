#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <limits>

#include "rigidcal/error.hpp"
#include "rigidcal/signal_calib.hpp"

namespace rigidcal {

namespace {

constexpr double kStepTolerance = 1e-10;
constexpr int kMaxIterations = 100;
constexpr double kMaxCondition = 1e12;

double condition_number(const Mat3& h) {
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(h, Eigen::EigenvaluesOnly);
  const Vec3 ev = eig.eigenvalues().cwiseAbs();
  if (!(ev.minCoeff() > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  return ev.maxCoeff() / ev.minCoeff();
}

// Newton step on the free coordinates. LU keeps the step exactly invariant to a uniform
// scaling of the weights; rank-deficient subproblems fall back to the minimum-norm step.
Vec3 free_step(const Mat3& h, const Vec3& g, const Eigen::Vector3i& active) {
  int idx[3];
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    if (active(i) == 0) {
      idx[n++] = i;
    }
  }
  Vec3 d = Vec3::Zero();
  if (n == 0) {
    return d;
  }
  Eigen::MatrixXd hf(n, n);
  Eigen::VectorXd gf(n);
  for (int r = 0; r < n; ++r) {
    gf(r) = g(idx[r]);
    for (int c = 0; c < n; ++c) {
      hf(r, c) = h(idx[r], idx[c]);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(hf);
  lu.setThreshold(1e-13);
  Eigen::VectorXd df;
  if (lu.isInvertible()) {
    df = lu.solve(-gf);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(hf);
    cod.setThreshold(1e-13);
    df = cod.solve(-gf);
  }
  for (int r = 0; r < n; ++r) {
    d(idx[r]) = df(r);
  }
  return d;
}

}  // namespace

BvlsResult bvls_solve(const Eigen::MatrixX3d& a, const Eigen::VectorXd& b,
                      std::span<const double> weights, const TranslationBounds& bounds,
                      const Vec3& x0) {
  if (a.rows() != b.size() || (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != b.size())) {
    throw Error(ErrorCode::kInvalidArgument, "A, B and weights differ in length");
  }
  if ((bounds.lower.array() > bounds.upper.array()).any()) {
    throw Error(ErrorCode::kInvalidArgument, "lower bound exceeds upper bound");
  }
  if (!bounds.contains(x0)) {
    throw Error(ErrorCode::kPreconditionViolated, "initial point outside the bounds");
  }

  Mat3 h = Mat3::Zero();
  Vec3 c = Vec3::Zero();
  double bwb = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    const Vec3 row = a.row(i).transpose();
    h.noalias() += w * row * row.transpose();
    c += w * b(i) * row;
    bwb += w * b(i) * b(i);
  }

  BvlsResult out;
  out.condition_number = condition_number(h);
  Vec3 x = x0;
  Eigen::Vector3i& active = out.active;

  for (out.iterations = 1; out.iterations <= kMaxIterations; ++out.iterations) {
    const Vec3 g = h * x - c;
    const Vec3 d = free_step(h, g, active);

    if (d.norm() < kStepTolerance) {
      // Release the bound whose multiplier has the wrong sign by the largest margin.
      int release = -1;
      double worst = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double violation = active(i) < 0 ? -g(i) : active(i) > 0 ? g(i) : 0.0;
        if (violation > worst) {
          worst = violation;
          release = i;
        }
      }
      if (release < 0) {
        out.converged = true;
        break;
      }
      active(release) = 0;
      continue;
    }

    double alpha = 1.0;
    int block = -1;
    for (int i = 0; i < 3; ++i) {
      if (active(i) != 0 || d(i) == 0.0) {
        continue;
      }
      const double limit = d(i) < 0.0 ? bounds.lower(i) : bounds.upper(i);
      const double ratio = (limit - x(i)) / d(i);
      if (ratio < alpha) {
        alpha = std::max(ratio, 0.0);
        block = i;
      }
    }
    x += alpha * d;
    x = bounds.clamp(x);
    if (block >= 0) {
      active(block) = d(block) < 0.0 ? -1 : 1;
      x(block) = active(block) < 0 ? bounds.lower(block) : bounds.upper(block);
    }
    if (block < 0 && alpha * d.norm() < kStepTolerance) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(out.iterations, kMaxIterations);

  if (out.condition_number > kMaxCondition && active.isZero()) {
    throw Error(ErrorCode::kIllConditioned,
                "normal matrix condition number " + std::to_string(out.condition_number) +
                    " with no active bound");
  }
  out.x = x;
  out.objective = x.dot(h * x) - 2.0 * c.dot(x) + bwb;
  return out;
}

}  // namespace rigidcal
