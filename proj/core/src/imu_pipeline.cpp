#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rigidcal/error.hpp"
#include "rigidcal/imu.hpp"

namespace rigidcal {

double ImuSeries::duration_s() const {
  if (samples.empty()) {
    return 0.0;
  }
  return 1e-9 * static_cast<double>(samples.back().t_ns - samples.front().t_ns) + period_s();
}

std::vector<std::size_t> ImuSeries::gap_indices() const {
  std::vector<std::size_t> gaps;
  const double nominal = 1e9 * period_s();
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double dt = static_cast<double>(samples[i].t_ns - samples[i - 1].t_ns);
    if (std::abs(dt - nominal) > 0.5 * nominal) {
      gaps.push_back(i);
    }
  }
  return gaps;
}

void ImuSeries::validate() const {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw Error(ErrorCode::kInvalidArgument, "IMU rate must be positive");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ImuSample& s = samples[i];
    if (!s.omega.allFinite() || !s.accel.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite IMU sample at index " + std::to_string(i));
    }
    if (i > 0 && s.t_ns <= samples[i - 1].t_ns) {
      throw Error(ErrorCode::kInvalidArgument,
                  "timestamps not strictly increasing at index " + std::to_string(i));
    }
  }
}

ImuSeries ImuSeries::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, samples.size());
  begin = std::min(begin, end);
  ImuSeries out{frame, rate_hz, {}};
  out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

Vec3 OrientationState::expected_specific_force() const {
  return -(q_BI.to_matrix().transpose() * (R_WB.transpose() * gravity_W));
}

namespace {

void require_duration(const ImuSeries& window, double min_duration) {
  // Half a period of slack absorbs timestamp rounding.
  if (window.empty() || window.duration_s() + 0.5 * window.period_s() < min_duration) {
    throw Error(ErrorCode::kPreconditionViolated,
                "window of " + std::to_string(window.duration_s()) + " s is shorter than " +
                    std::to_string(min_duration) + " s");
  }
}

Vec3 mean_accel(const ImuSeries& series) {
  Vec3 sum = Vec3::Zero();
  for (const ImuSample& s : series.samples) {
    sum += s.accel;
  }
  return sum / static_cast<double>(series.size());
}

}  // namespace

Mat3 gravity_align_init(const ImuSeries& static_samples, const RestConfig& config) {
  require_duration(static_samples, config.min_duration_s);
  const Vec3 a = mean_accel(static_samples);
  const double roll = std::atan2(a.y(), a.z());
  const double pitch = std::atan2(-a.x(), std::hypot(a.y(), a.z()));
  const Mat3 r = rotation_from_rpy(roll, pitch, 0.0);

  OrientationState state;
  state.q_BI = Quaternion::from_matrix(r);
  if (!detect_rest(static_samples, state, config.tau, config.min_duration_s)) {
    throw Error(ErrorCode::kNotAtRest, "gravity alignment window is not at rest");
  }
  return r;
}

bool detect_rest(const ImuSeries& window, const OrientationState& state, double tau,
                 double min_duration) {
  require_duration(window, min_duration);
  const Vec3 expected = state.expected_specific_force();
  return std::all_of(window.samples.begin(), window.samples.end(), [&](const ImuSample& s) {
    return (expected - s.accel).norm() <= tau;
  });
}

AccelBiasEstimate estimate_accel_bias(const ImuSeries& rest_window, const Mat3& sensor_from_base,
                                      const Mat3& R_WB, const Vec3& gravity_W,
                                      const RestConfig& config) {
  const Vec3 expected = -(sensor_from_base * (R_WB.transpose() * gravity_W));
  const std::vector<Vec3> per_sample(rest_window.size(), expected);
  return estimate_accel_bias(rest_window, per_sample, config);
}

AccelBiasEstimate estimate_accel_bias(const ImuSeries& rest_window, std::span<const Vec3> expected,
                                      const RestConfig& config) {
  require_duration(rest_window, config.min_duration_s);
  if (expected.size() != rest_window.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one expected reading per sample required");
  }
  const double n = static_cast<double>(rest_window.size());

  AccelBiasEstimate out;
  for (std::size_t i = 0; i < rest_window.size(); ++i) {
    out.bias += rest_window.samples[i].accel - expected[i];
  }
  out.bias /= n;

  Vec3 var = Vec3::Zero();
  for (std::size_t i = 0; i < rest_window.size(); ++i) {
    const Vec3 r = rest_window.samples[i].accel - expected[i] - out.bias;
    if (r.norm() > config.tau) {
      throw Error(ErrorCode::kNotAtRest, "sample departs from gravity + bias by more than tau");
    }
    var += r.cwiseProduct(r);
  }
  out.noise = (var / n).asDiagonal();
  return out;
}

BiasState gyro_bias_kf_predict(const BiasState& state) {
  BiasState next = state;
  next.gyro_cov = state.gyro_cov + state.process_noise;
  return next;
}

BiasState gyro_bias_kf_step(const BiasState& state, const Vec3& y, const Mat3& h) {
  BiasState next = gyro_bias_kf_predict(state);
  const Mat3& p = next.gyro_cov;
  const Mat3 s = state.gyro_noise + h * p * h.transpose();
  const Mat3 k = p * h.transpose() * s.inverse();
  next.gyro_bias = state.gyro_bias + k * (y - h * state.gyro_bias);
  const Mat3 updated = (Mat3::Identity() - k * h) * p;
  next.gyro_cov = 0.5 * (updated + updated.transpose());
  next.gyro_reference = h;
  return next;
}

Quaternion madgwick_update(const Quaternion& q, const Vec3& accel, const Vec3& omega, double dt,
                           double beta) {
  const Quaternion predicted = quat_propagate(q, omega, dt);
  const double a_norm = accel.norm();
  if (beta == 0.0 || a_norm == 0.0) {
    return predicted;
  }
  const Vec3 a = accel / a_norm;
  const double w = predicted.w(), x = predicted.x(), y = predicted.y(), z = predicted.z();

  // f = R(q)^T e_z - a, the mismatch between predicted and measured "up" in the sensor frame.
  const Vec3 f(2.0 * (x * z - w * y) - a.x(), 2.0 * (y * z + w * x) - a.y(),
               1.0 - 2.0 * (x * x + y * y) - a.z());
  Eigen::Matrix<double, 3, 4> jac;
  jac << -2.0 * y, 2.0 * z, -2.0 * w, 2.0 * x,
         2.0 * x, 2.0 * w, 2.0 * z, 2.0 * y,
         0.0, -4.0 * x, -4.0 * y, 0.0;
  const Eigen::Vector4d grad = jac.transpose() * f;  // (w, x, y, z)
  const double g_norm = grad.norm();
  if (!(g_norm > 1e-15)) {
    return predicted;
  }
  const Eigen::Vector4d step = (beta * dt / g_norm) * grad;
  return Quaternion(w - step(0), x - step(1), y - step(2), z - step(3)).normalized().canonical();
}

namespace {

template <class T>
const T& lookup(const std::vector<Stamped<T>>& history, std::int64_t t_ns, const char* what) {
  if (history.empty() || t_ns < history.front().t_ns || t_ns > history.back().t_ns) {
    throw Error(ErrorCode::kCoverageGap,
                std::string("no ") + what + " estimate at t = " + std::to_string(t_ns) + " ns");
  }
  auto it = std::upper_bound(history.begin(), history.end(), t_ns,
                             [](std::int64_t t, const Stamped<T>& e) { return t < e.t_ns; });
  return std::prev(it)->value;
}

}  // namespace

ImuSeries compensate(const ImuSeries& series, const BiasHistory& biases,
                     const OrientationHistory& orientations, bool remove_gravity) {
  ImuSeries out{series.frame, series.rate_hz, {}};
  out.samples.reserve(series.size());
  for (const ImuSample& s : series.samples) {
    const BiasState& b = lookup(biases, s.t_ns, "bias");
    ImuSample c{s.t_ns, s.omega - b.sensor_gyro_bias(), s.accel - b.accel_bias};
    if (remove_gravity) {
      c.accel -= lookup(orientations, s.t_ns, "orientation").expected_specific_force();
    }
    out.samples.push_back(c);
  }
  return out;
}

}  // namespace rigidcal
