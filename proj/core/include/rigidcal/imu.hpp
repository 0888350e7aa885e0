#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rigidcal/geometry.hpp"

namespace rigidcal {

struct ImuSample {
  std::int64_t t_ns = 0;
  Vec3 omega = Vec3::Zero();  // [rad/s]
  Vec3 accel = Vec3::Zero();  // [m/s^2]
};

/// Time-ordered IMU samples in one sensor frame.
struct ImuSeries {
  FrameId frame;
  double rate_hz = 100.0;
  std::vector<ImuSample> samples;

  [[nodiscard]] double period_s() const { return 1.0 / rate_hz; }
  /// Span covered by the samples, counting one nominal period for the last one.
  [[nodiscard]] double duration_s() const;
  [[nodiscard]] bool empty() const { return samples.empty(); }
  [[nodiscard]] std::size_t size() const { return samples.size(); }

  /// Indices i where samples[i] - samples[i-1] deviates from the nominal period by > 50%.
  [[nodiscard]] std::vector<std::size_t> gap_indices() const;
  /// Throws InvalidArgument on non-finite values or non-increasing timestamps.
  void validate() const;
  [[nodiscard]] ImuSeries slice(std::size_t begin, std::size_t end) const;
};

inline constexpr double kGyroProcessNoiseStd = deg2rad(0.05);  // [rad/s] per step
inline constexpr double kGyroInitialStd = deg2rad(0.5);        // [rad/s]

/// Accelerometer bias plus Kalman-tracked gyro bias.
///
/// The filter state x is the gyro bias seen through the measurement rotation H of
/// y = H x + w. `gyro_reference` keeps the H of the latest update so the sensor-frame
/// bias is gyro_reference * gyro_bias.
struct BiasState {
  Vec3 accel_bias = Vec3::Zero();
  Mat3 accel_noise = Mat3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Mat3 gyro_cov = Mat3::Identity() * kGyroInitialStd * kGyroInitialStd;
  Mat3 gyro_noise = Mat3::Identity() * 0.005 * 0.005;
  Mat3 process_noise = Mat3::Identity() * kGyroProcessNoiseStd * kGyroProcessNoiseStd;
  Mat3 gyro_reference = Mat3::Identity();

  [[nodiscard]] Vec3 sensor_gyro_bias() const { return gyro_reference * gyro_bias; }
};

/// Orientation of the sensor relative to a gravity-levelled base frame.
struct OrientationState {
  Quaternion q_BI;                           // sensor -> base
  Vec3 gravity_W = Vec3(0.0, 0.0, -kGravity);  // gravity vector in the world frame
  Mat3 R_WB = Mat3::Identity();              // base -> world

  /// Accelerometer reading of a motionless, bias-free sensor at this orientation.
  [[nodiscard]] Vec3 expected_specific_force() const;
};

struct RestConfig {
  double tau = 0.15;            // [m/s^2]
  double min_duration_s = 2.0;  // [s]
};

/// Roll/pitch from the window-mean acceleration, yaw = 0. Returns the sensor -> level rotation.
/// Throws NotAtRest when any sample departs from the aligned gravity by more than tau,
/// PreconditionViolated when the window is shorter than min_duration_s.
Mat3 gravity_align_init(const ImuSeries& static_samples, const RestConfig& config = {});

/// True iff every sample's acceleration is within tau of the aligned gravity reading.
/// Throws PreconditionViolated when the window is shorter than min_duration.
bool detect_rest(const ImuSeries& window, const OrientationState& state, double tau,
                 double min_duration);

struct AccelBiasEstimate {
  Vec3 bias = Vec3::Zero();
  Mat3 noise = Mat3::Zero();  // diagonal, per-axis population variance
};

/// Mean offset of a rest window from the expected gravity reading.
/// `sensor_from_base` maps base-frame vectors into the sensor (the transpose of R(q_BI)).
/// Throws NotAtRest if a sample departs from (gravity + bias) by more than tau.
AccelBiasEstimate estimate_accel_bias(const ImuSeries& rest_window, const Mat3& sensor_from_base,
                                      const Mat3& R_WB, const Vec3& gravity_W,
                                      const RestConfig& config = {});
/// Same with one expected gravity reading per sample.
AccelBiasEstimate estimate_accel_bias(const ImuSeries& rest_window, std::span<const Vec3> expected,
                                      const RestConfig& config = {});

/// Predict (P += Q) only.
BiasState gyro_bias_kf_predict(const BiasState& state);
/// Predict, then update with measurement y = H x + w, H = measurement_rotation.
BiasState gyro_bias_kf_step(const BiasState& state, const Vec3& y, const Mat3& measurement_rotation);

/// One gyro propagation step followed by a normalized gradient step of size beta*dt
/// pulling the predicted gravity direction onto the measured one.
Quaternion madgwick_update(const Quaternion& q, const Vec3& accel, const Vec3& omega, double dt,
                           double beta);

template <class T>
struct Stamped {
  std::int64_t t_ns = 0;
  T value;
};

using BiasHistory = std::vector<Stamped<BiasState>>;
using OrientationHistory = std::vector<Stamped<OrientationState>>;

/// omega_hat = omega - b_w; accel_hat = accel - b_a - (remove_gravity ? gravity reading : 0).
/// Each sample uses the latest history entry at or before its timestamp.
/// Throws CoverageGap when a sample lies outside either history's time span.
ImuSeries compensate(const ImuSeries& series, const BiasHistory& biases,
                     const OrientationHistory& orientations, bool remove_gravity = true);

struct ImuProcessorConfig {
  RestConfig rest;
  double madgwick_beta = 0.05;
  /// Extra rest gate on |omega - b_w| [rad/s]; <= 0 disables it.
  double rest_max_rate = 0.1;
  /// Trimmed from rest-window edges that border motion [s]; slow drive-off passes the
  /// tau gate for a few samples and tilts the filter.
  double rest_guard_s = 0.5;
  double default_gyro_noise_std = 0.005;  // [rad/s] used until the first rest window
};

struct RestWindow {
  std::size_t begin = 0;  // sample index, inclusive
  std::size_t end = 0;    // exclusive
  std::int64_t t_start_ns = 0;
  std::int64_t t_end_ns = 0;
};

struct ProcessedImu {
  ImuSeries compensated;     // biases and gravity removed
  ImuSeries specific_force;  // biases removed, gravity kept
  BiasHistory biases;
  OrientationHistory orientations;
  std::vector<RestWindow> rest_windows;
  bool initialized_at_rest = false;
};

/// Per-IMU conditioning: gravity alignment, rest detection, bias estimation and
/// Madgwick orientation. One instance per IMU stream.
class ImuProcessor {
 public:
  explicit ImuProcessor(ImuProcessorConfig config = {}) : config_(config) {}

  [[nodiscard]] ProcessedImu process(const ImuSeries& series) const;
  [[nodiscard]] const ImuProcessorConfig& config() const { return config_; }

 private:
  ImuProcessorConfig config_;
};

}  // namespace rigidcal
