#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <span>
#include <string>
#include <utility>

namespace rigidcal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Standard gravity [m/s^2].
inline constexpr double kGravity = 9.80665;
inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// [v]x such that skew(a) * b == a.cross(b).
Mat3 skew(const Vec3& v);
/// Inverse of skew() on the antisymmetric part of m.
Vec3 vee(const Mat3& m);

/// Unit quaternion, scalar-first, Hamilton product. R(q) v = q (x) v (x) conj(q).
/// Library operations return the canonical representative with w >= 0.
class Quaternion {
 public:
  Quaternion() = default;
  Quaternion(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}

  static Quaternion identity() { return {}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle);
  /// exp map of a rotation vector (axis * angle).
  static Quaternion from_rotation_vector(const Vec3& rotvec);
  static Quaternion from_matrix(const Mat3& rotation);

  [[nodiscard]] double w() const { return w_; }
  [[nodiscard]] double x() const { return x_; }
  [[nodiscard]] double y() const { return y_; }
  [[nodiscard]] double z() const { return z_; }
  [[nodiscard]] Vec3 vec() const { return {x_, y_, z_}; }

  [[nodiscard]] double norm() const;
  [[nodiscard]] Quaternion normalized() const;
  [[nodiscard]] Quaternion canonical() const;
  [[nodiscard]] Quaternion conjugate() const { return {w_, -x_, -y_, -z_}; }
  [[nodiscard]] Mat3 to_matrix() const;
  [[nodiscard]] Vec3 rotate(const Vec3& v) const;
  /// Scalar-last layout (x, y, z, w) used by the 4x4 propagation matrix.
  [[nodiscard]] Eigen::Vector4d xyzw() const { return {x_, y_, z_, w_}; }

 private:
  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// Raw Hamilton product, no normalization.
Quaternion hamilton_product(const Quaternion& a, const Quaternion& b);

/// Composition a (x) b. Inputs within 1e-6 of unit norm are renormalized,
/// anything further away throws InvalidArgument.
Quaternion quat_multiply(const Quaternion& a, const Quaternion& b);

/// Exact body-rate propagation q_prev (x) exp(omega * dt / 2).
Quaternion quat_propagate(const Quaternion& q_prev, const Vec3& omega, double dt);

/// The 4x4 rate matrix acting on scalar-last quaternions: omega_matrix(w) * q == q (x) (0, w).
Eigen::Matrix4d omega_matrix(const Vec3& omega);

/// Same propagation written as [cos(|w|dt/2) I + sin(|w|dt/2)/|w| Omega] q.
Quaternion quat_propagate_omega_matrix(const Quaternion& q_prev, const Vec3& omega, double dt);

/// Angle of the relative rotation between two quaternions, in [0, pi].
double angular_distance(const Quaternion& a, const Quaternion& b);
/// Angle of a^T b, accurate near zero.
double geodesic_distance(const Mat3& a, const Mat3& b);
/// Rotation angle of a single rotation matrix.
double rotation_angle(const Mat3& r);

bool is_rotation(const Mat3& r, double tol = 1e-9);
/// Nearest rotation in Frobenius norm.
Mat3 orthonormalize(const Mat3& r);

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);
/// Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rotation_from_rpy(double roll, double pitch, double yaw);
/// (roll, pitch, yaw) of rotation_from_rpy's convention.
Vec3 rpy_from_rotation(const Mat3& r);

/// Symbolic frame name. "B" (base) and "W" (world) are reserved.
class FrameId {
 public:
  FrameId() = default;
  explicit FrameId(std::string name) : name_(std::move(name)) {}

  static FrameId base() { return FrameId("B"); }
  static FrameId world() { return FrameId("W"); }

  [[nodiscard]] const std::string& str() const { return name_; }
  [[nodiscard]] bool is_reserved() const { return name_ == "B" || name_ == "W"; }

  friend bool operator==(const FrameId&, const FrameId&) = default;

 private:
  std::string name_;
};

/// Rigid transform mapping coordinates in `from` into `to`: p_to = R p_from + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  FrameId from;
  FrameId to;

  static RigidTransform identity(FrameId from, FrameId to);

  [[nodiscard]] Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  [[nodiscard]] Vec3 apply_direction(const Vec3& d) const { return rotation * d; }
  [[nodiscard]] RigidTransform inverse() const;
  [[nodiscard]] RigidTransform retagged(FrameId new_from, FrameId new_to) const;
  [[nodiscard]] Eigen::Matrix4d matrix() const;

  friend bool operator==(const RigidTransform&, const RigidTransform&) = default;
};

/// lhs * rhs: apply rhs first. Throws FrameMismatch unless rhs.to == lhs.from.
RigidTransform compose(const RigidTransform& lhs, const RigidTransform& rhs);
RigidTransform operator*(const RigidTransform& lhs, const RigidTransform& rhs);

/// A vector observed in two frames; solvers find R with R * source ~= target.
struct Correspondence {
  Vec3 source;
  Vec3 target;
};

/// Weighted Kabsch (Wahba) solution minimizing sum w_i |R a_i - b_i|^2 with det R = +1.
/// Each covariance collapses to the scalar weight tr(Sigma^-1) / 3; empty means unit weights.
/// Throws DegenerateInput when the weighted cross-covariance has numerical rank < 2.
Mat3 kabsch_rotation(std::span<const Correspondence> pairs,
                     std::span<const Mat3> covariances = {});
Mat3 kabsch_rotation_weighted(std::span<const Correspondence> pairs,
                              std::span<const double> weights);

/// Davenport's 4x4 K matrix (scalar-last block layout) for the given direction pairs.
Eigen::Matrix4d davenport_matrix(std::span<const Correspondence> pairs);

/// Q-method: principal eigenvector of K. Throws DegenerateInput as kabsch_rotation does.
Quaternion davenport_rotation(std::span<const Correspondence> pairs);

struct SymmetricEigen4 {
  Eigen::Vector4d values;   // ascending
  Eigen::Matrix4d vectors;  // columns match values
  int sweeps = 0;
};

/// Cyclic Jacobi iteration for a symmetric 4x4 matrix.
SymmetricEigen4 jacobi_eigen(const Eigen::Matrix4d& symmetric, double tol = 1e-12);

}  // namespace rigidcal
