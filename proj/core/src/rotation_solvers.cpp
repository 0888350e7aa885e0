#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <vector>

#include "rigidcal/error.hpp"
#include "rigidcal/geometry.hpp"

namespace rigidcal {

namespace {

// Relative singular-value floor below which a direction counts as unexcited.
constexpr double kRankTolerance = 1e-9;

Mat3 cross_covariance(std::span<const Correspondence> pairs, std::span<const double> weights) {
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    h.noalias() += w * pairs[i].source * pairs[i].target.transpose();
  }
  return h;
}

void require_rank_two(const Eigen::Vector3d& singular_values) {
  const double s0 = singular_values(0);
  if (!(s0 > 0.0) || !std::isfinite(s0) || singular_values(1) <= kRankTolerance * s0) {
    throw Error(ErrorCode::kDegenerateInput,
                "correspondences do not span two independent directions");
  }
}

}  // namespace

Mat3 kabsch_rotation_weighted(std::span<const Correspondence> pairs,
                              std::span<const double> weights) {
  if (!weights.empty() && weights.size() != pairs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "weights and pairs differ in length");
  }
  if (pairs.size() < 2) {
    throw Error(ErrorCode::kDegenerateInput, "need at least two correspondences");
  }
  const Mat3 h = cross_covariance(pairs, weights);
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  require_rank_two(svd.singularValues());

  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return v * d * u.transpose();
}

Mat3 kabsch_rotation(std::span<const Correspondence> pairs, std::span<const Mat3> covariances) {
  if (covariances.empty()) {
    return kabsch_rotation_weighted(pairs, {});
  }
  if (covariances.size() != pairs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "covariances and pairs differ in length");
  }
  std::vector<double> weights;
  weights.reserve(covariances.size());
  for (const Mat3& cov : covariances) {
    weights.push_back(cov.inverse().trace() / 3.0);
  }
  return kabsch_rotation_weighted(pairs, weights);
}

Eigen::Matrix4d davenport_matrix(std::span<const Correspondence> pairs) {
  // Delta = sum source * target^T; maximizing tr(R Delta) fits R source ~= target.
  const Mat3 delta = cross_covariance(pairs, {});
  const Mat3 gamma = delta.transpose() + delta;
  const double mu = delta.trace();
  const Vec3 lambda(delta(1, 2) - delta(2, 1), delta(2, 0) - delta(0, 2),
                    delta(0, 1) - delta(1, 0));

  Eigen::Matrix4d k;
  k.topLeftCorner<3, 3>() = gamma - mu * Mat3::Identity();
  k.topRightCorner<3, 1>() = lambda;
  k.bottomLeftCorner<1, 3>() = lambda.transpose();
  k(3, 3) = mu;
  return k;
}

Quaternion davenport_rotation(std::span<const Correspondence> pairs) {
  if (pairs.size() < 2) {
    throw Error(ErrorCode::kDegenerateInput, "need at least two direction pairs");
  }
  const Mat3 delta = cross_covariance(pairs, {});
  Eigen::JacobiSVD<Mat3> svd(delta);
  require_rank_two(svd.singularValues());

  const SymmetricEigen4 eig = jacobi_eigen(davenport_matrix(pairs));
  const Eigen::Vector4d v = eig.vectors.col(3);
  // Scalar-last eigenvector; its vector part carries the sign convention of Lambda.
  return Quaternion(v(3), v(0), v(1), v(2)).normalized().canonical();
}

SymmetricEigen4 jacobi_eigen(const Eigen::Matrix4d& symmetric, double tol) {
  Eigen::Matrix4d a = 0.5 * (symmetric + symmetric.transpose());
  Eigen::Matrix4d v = Eigen::Matrix4d::Identity();
  const double scale = std::max(a.norm(), 1e-300);

  int sweep = 0;
  for (; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 4; ++p) {
      for (int q = p + 1; q < 4; ++q) {
        off += a(p, q) * a(p, q);
      }
    }
    if (std::sqrt(off) <= tol * scale) {
      break;
    }
    for (int p = 0; p < 4; ++p) {
      for (int q = p + 1; q < 4; ++q) {
        if (a(p, q) == 0.0) {
          continue;
        }
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 4; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 4; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < 4; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // Sort ascending with a fixed insertion order so ties resolve identically everywhere.
  SymmetricEigen4 out;
  out.sweeps = sweep;
  int order[4] = {0, 1, 2, 3};
  for (int i = 1; i < 4; ++i) {
    for (int j = i; j > 0 && a(order[j], order[j]) < a(order[j - 1], order[j - 1]); --j) {
      std::swap(order[j], order[j - 1]);
    }
  }
  for (int i = 0; i < 4; ++i) {
    out.values(i) = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

}  // namespace rigidcal
