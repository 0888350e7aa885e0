#include "rigidcal/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "rigidcal/error.hpp"

namespace rigidcal {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) {
    return identity();
  }
  const Vec3 u = axis / n;
  const double s = std::sin(0.5 * angle);
  return Quaternion(std::cos(0.5 * angle), s * u.x(), s * u.y(), s * u.z()).canonical();
}

Quaternion Quaternion::from_rotation_vector(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  const double half = 0.5 * angle;
  // sin(half)/angle -> 1/2 as angle -> 0
  const double k = half < 1e-6 ? 0.5 * (1.0 - half * half / 6.0) : std::sin(half) / angle;
  return Quaternion(std::cos(half), k * rotvec.x(), k * rotvec.y(), k * rotvec.z())
      .normalized()
      .canonical();
}

Quaternion Quaternion::from_matrix(const Mat3& r) {
  // Shepperd: pivot on the largest of w^2, x^2, y^2, z^2.
  const double tr = r.trace();
  double w, x, y, z;
  if (tr >= r(0, 0) && tr >= r(1, 1) && tr >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    w = 0.25 * s;
    x = (r(2, 1) - r(1, 2)) / s;
    y = (r(0, 2) - r(2, 0)) / s;
    z = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    w = (r(2, 1) - r(1, 2)) / s;
    x = 0.25 * s;
    y = (r(0, 1) + r(1, 0)) / s;
    z = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 - r(0, 0) + r(1, 1) - r(2, 2));
    w = (r(0, 2) - r(2, 0)) / s;
    x = (r(0, 1) + r(1, 0)) / s;
    y = 0.25 * s;
    z = (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 - r(0, 0) - r(1, 1) + r(2, 2));
    w = (r(1, 0) - r(0, 1)) / s;
    x = (r(0, 2) + r(2, 0)) / s;
    y = (r(1, 2) + r(2, 1)) / s;
    z = 0.25 * s;
  }
  return Quaternion(w, x, y, z).normalized().canonical();
}

double Quaternion::norm() const { return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  return {w_ / n, x_ / n, y_ / n, z_ / n};
}

Quaternion Quaternion::canonical() const {
  if (w_ < 0.0) {
    return {-w_, -x_, -y_, -z_};
  }
  return *this;
}

Mat3 Quaternion::to_matrix() const {
  const double ww = w_ * w_, xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  Mat3 r;
  r << ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy),
       2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx),
       2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz;
  return r;
}

Vec3 Quaternion::rotate(const Vec3& v) const {
  const Vec3 u = vec();
  const Vec3 t = 2.0 * u.cross(v);
  return v + w_ * t + u.cross(t);
}

Quaternion hamilton_product(const Quaternion& a, const Quaternion& b) {
  return {a.w() * b.w() - a.x() * b.x() - a.y() * b.y() - a.z() * b.z(),
          a.w() * b.x() + a.x() * b.w() + a.y() * b.z() - a.z() * b.y(),
          a.w() * b.y() - a.x() * b.z() + a.y() * b.w() + a.z() * b.x(),
          a.w() * b.z() + a.x() * b.y() - a.y() * b.x() + a.z() * b.w()};
}

namespace {

Quaternion checked_unit(const Quaternion& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "quaternion is not unit norm (|q| = " +
                                                 std::to_string(n) + ")");
  }
  return q.normalized();
}

}  // namespace

Quaternion quat_multiply(const Quaternion& a, const Quaternion& b) {
  return hamilton_product(checked_unit(a), checked_unit(b)).normalized().canonical();
}

Quaternion quat_propagate(const Quaternion& q_prev, const Vec3& omega, double dt) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "propagation step dt must be positive");
  }
  const Vec3 rotvec = omega * dt;
  const double angle = rotvec.norm();
  const double half = 0.5 * angle;
  const double k = half < 1e-6 ? 0.5 * (1.0 - half * half / 6.0) : std::sin(half) / angle;
  const Quaternion dq(std::cos(half), k * rotvec.x(), k * rotvec.y(), k * rotvec.z());
  return hamilton_product(q_prev, dq).normalized().canonical();
}

Eigen::Matrix4d omega_matrix(const Vec3& w) {
  Eigen::Matrix4d m;
  m << 0.0, w.z(), -w.y(), w.x(),
       -w.z(), 0.0, w.x(), w.y(),
       w.y(), -w.x(), 0.0, w.z(),
       -w.x(), -w.y(), -w.z(), 0.0;
  return m;
}

Quaternion quat_propagate_omega_matrix(const Quaternion& q_prev, const Vec3& omega, double dt) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "propagation step dt must be positive");
  }
  const double rate = omega.norm();
  const double half = 0.5 * dt * rate;
  const double k = half < 1e-6 ? 0.5 * dt * (1.0 - half * half / 6.0) : std::sin(half) / rate;
  const Eigen::Vector4d q =
      (std::cos(half) * Eigen::Matrix4d::Identity() + k * omega_matrix(omega)) * q_prev.xyzw();
  return Quaternion(q(3), q(0), q(1), q(2)).normalized().canonical();
}

double angular_distance(const Quaternion& a, const Quaternion& b) {
  const Quaternion rel = hamilton_product(a.conjugate(), b);
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

double rotation_angle(const Mat3& r) {
  const double s = vee(r).norm();
  const double c = 0.5 * (r.trace() - 1.0);
  return std::atan2(s, c);
}

double geodesic_distance(const Mat3& a, const Mat3& b) { return rotation_angle(a.transpose() * b); }

bool is_rotation(const Mat3& r, double tol) {
  return (r.transpose() * r - Mat3::Identity()).norm() < tol && std::abs(r.determinant() - 1.0) < tol;
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Mat3 rotation_from_rpy(double roll, double pitch, double yaw) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

Vec3 rpy_from_rotation(const Mat3& r) {
  const double pitch = std::atan2(-r(2, 0), std::hypot(r(2, 1), r(2, 2)));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

RigidTransform RigidTransform::identity(FrameId from, FrameId to) {
  return {Mat3::Identity(), Vec3::Zero(), std::move(from), std::move(to)};
}

RigidTransform RigidTransform::inverse() const {
  const Mat3 rt = rotation.transpose();
  return {rt, -(rt * translation), to, from};
}

RigidTransform RigidTransform::retagged(FrameId new_from, FrameId new_to) const {
  return {rotation, translation, std::move(new_from), std::move(new_to)};
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidTransform compose(const RigidTransform& lhs, const RigidTransform& rhs) {
  if (!(rhs.to == lhs.from)) {
    throw Error(ErrorCode::kFrameMismatch, "cannot compose " + lhs.from.str() + "->" +
                                               lhs.to.str() + " after " + rhs.from.str() +
                                               "->" + rhs.to.str());
  }
  return {lhs.rotation * rhs.rotation, lhs.rotation * rhs.translation + lhs.translation,
          rhs.from, lhs.to};
}

RigidTransform operator*(const RigidTransform& lhs, const RigidTransform& rhs) {
  return compose(lhs, rhs);
}

}  // namespace rigidcal
