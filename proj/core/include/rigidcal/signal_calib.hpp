#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rigidcal/geometry.hpp"
#include "rigidcal/imu.hpp"
#include "rigidcal/observability.hpp"

namespace rigidcal {

/// Two IMU streams sampled on a common grid. B is the base (reference) IMU, I the other one.
struct PairedSignal {
  std::int64_t t_ns = 0;
  Vec3 omega_B = Vec3::Zero();
  Vec3 omega_I = Vec3::Zero();
  Vec3 alpha_B = Vec3::Zero();  // angular acceleration of B [rad/s^2]
  Vec3 accel_B = Vec3::Zero();
  Vec3 accel_I = Vec3::Zero();
};

struct TranslationBounds {
  Vec3 lower = Vec3::Constant(-1e3);
  Vec3 upper = Vec3::Constant(1e3);

  /// center +- half_width on every axis.
  static TranslationBounds around(const Vec3& center, double half_width);
  [[nodiscard]] bool contains(const Vec3& x) const;
  [[nodiscard]] Vec3 clamp(const Vec3& x) const;
};

/// Linear interpolation of both streams onto a uniform grid over their common span.
/// alpha_B comes from angular_accel on the resampled base rates.
/// Throws NoOverlap when the shared span is shorter than 1 s.
std::vector<PairedSignal> resample_align(const ImuSeries& base, const ImuSeries& other,
                                         double rate_hz, int smoothing_window = 5);

/// Centered moving average (window truncated symmetrically at the ends), then central
/// differences with one-sided differences at both ends. Throws InvalidArgument for < 3 samples.
std::vector<Vec3> angular_accel(std::span<const Vec3> omega, double dt, int smoothing_window = 5);

/// Centered moving average used by angular_accel.
std::vector<Vec3> moving_average(std::span<const Vec3> values, int window);

struct RotationEstimate {
  Mat3 R_BI = Mat3::Identity();  // maps I-frame vectors into B
  double residual_rms = 0.0;     // [rad/s]
};

/// Kabsch over (omega_I -> omega_B). Empty covariances means unit weights.
RotationEstimate estimate_rotation(std::span<const PairedSignal> pairs,
                                   std::span<const Mat3> covariances = {});

struct BvlsResult {
  Vec3 x = Vec3::Zero();
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double condition_number = 0.0;
  Eigen::Vector3i active = Eigen::Vector3i::Zero();  // -1 lower, +1 upper, 0 free
};

/// min sum_i w_i (A_i x - b_i)^2 subject to lower <= x <= upper, by a primal active-set
/// method on the 3x3 normal equations. Empty weights means unit weights.
/// Throws PreconditionViolated when x0 is outside the bounds, IllConditioned when the
/// normal matrix has condition number > 1e12 and no bound ends up active.
BvlsResult bvls_solve(const Eigen::MatrixX3d& a, const Eigen::VectorXd& b,
                      std::span<const double> weights, const TranslationBounds& bounds,
                      const Vec3& x0);

struct TranslationEstimate {
  Vec3 t_BI = Vec3::Zero();  // position of I in B [m]
  double residual_rms = 0.0;  // [m/s^2]
  BvlsResult solver;
};

/// Stacks A_i = [omega_B]x^2 + [alpha_B]x and b_i = R_BI accel_I - accel_B and solves for
/// t_BI within bounds, starting from t_init.
TranslationEstimate estimate_translation(std::span<const PairedSignal> pairs, const Mat3& R_BI,
                                         const TranslationBounds& bounds, const Vec3& t_init,
                                         std::span<const double> weights = {});

/// Returns the offset [ns] to add to the other stream's timestamps.
using TimeOffsetHook = std::function<std::int64_t(const ImuSeries& base, const ImuSeries& other)>;

struct ImuCalibConfig {
  double resample_rate_hz = 25.0;
  int smoothing_window = 5;
  ObservabilityConfig observability;
  /// Weight each pair by |omega_B| / mean |omega_B| instead of uniformly.
  bool weight_by_rate = false;
  TimeOffsetHook time_offset;  // empty: streams taken as synchronized
};

struct ImuExtrinsicsEstimate {
  RigidTransform T_hat;  // other -> base
  double rotation_residual_rms = 0.0;
  double translation_residual_rms = 0.0;
  std::size_t n_samples_used = 0;
  std::vector<SegmentReport> segments;
};

/// resample_align, observability gate, rotation, translation. Inputs must already be
/// bias-compensated. Throws InsufficientExcitation when no segment passes the gate.
ImuExtrinsicsEstimate calibrate_imu_pair(const ImuSeries& base, const ImuSeries& other,
                                         const TranslationBounds& bounds, const Vec3& t_init,
                                         const ImuCalibConfig& config = {});

}  // namespace rigidcal
