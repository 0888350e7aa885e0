#include <algorithm>
#include <cmath>
#include <limits>

#include "rigidcal/error.hpp"
#include "rigidcal/imu.hpp"

namespace rigidcal {

namespace {

struct InitialAlignment {
  Quaternion q;
  Vec3 gyro_bias = Vec3::Zero();
  bool at_rest = false;
};

std::size_t count_within(const ImuSeries& series, double seconds) {
  if (series.empty()) {
    return 0;
  }
  const std::int64_t limit =
      series.samples.front().t_ns + static_cast<std::int64_t>(std::llround(seconds * 1e9));
  std::size_t n = 0;
  while (n < series.size() && series.samples[n].t_ns < limit) {
    ++n;
  }
  return n;
}

Vec3 mean_omega(const ImuSeries& series, std::size_t begin, std::size_t end) {
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = begin; i < end; ++i) {
    sum += series.samples[i].omega;
  }
  return sum / static_cast<double>(end - begin);
}

InitialAlignment initial_alignment(const ImuSeries& series, const RestConfig& rest) {
  InitialAlignment init;
  const std::size_t n = std::max<std::size_t>(count_within(series, rest.min_duration_s), 1);
  const ImuSeries head = series.slice(0, n);
  try {
    init.q = Quaternion::from_matrix(gravity_align_init(head, rest));
    init.gyro_bias = mean_omega(series, 0, n);
    init.at_rest = true;
  } catch (const Error&) {
    // No usable rest at the start: level from the mean reading anyway and keep zero biases.
    Vec3 a = Vec3::Zero();
    for (const ImuSample& s : head.samples) {
      a += s.accel;
    }
    const double roll = std::atan2(a.y(), a.z());
    const double pitch = std::atan2(-a.x(), std::hypot(a.y(), a.z()));
    init.q = Quaternion::from_matrix(rotation_from_rpy(roll, pitch, 0.0));
  }
  return init;
}

}  // namespace

ProcessedImu ImuProcessor::process(const ImuSeries& series) const {
  series.validate();
  if (series.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty IMU series");
  }
  const std::size_t n = series.size();
  const double dt = series.period_s();
  const RestConfig& rest = config_.rest;

  ProcessedImu out;
  const InitialAlignment init = initial_alignment(series, rest);
  out.initialized_at_rest = init.at_rest;

  // Pass 1: orientation with the initial gyro bias only, flag samples that look at rest.
  std::vector<char> flagged(n, 0);
  {
    OrientationState state;
    state.q_BI = init.q;
    for (std::size_t i = 0; i < n; ++i) {
      const ImuSample& s = series.samples[i];
      const Vec3 omega = s.omega - init.gyro_bias;
      if (i > 0) {
        state.q_BI = madgwick_update(state.q_BI, s.accel, omega, dt, config_.madgwick_beta);
      }
      const bool accel_ok = (state.expected_specific_force() - s.accel).norm() <= rest.tau;
      const bool rate_ok = config_.rest_max_rate <= 0.0 || omega.norm() <= config_.rest_max_rate;
      flagged[i] = accel_ok && rate_ok;
    }
  }

  // Maximal flagged runs, minus the guard bands, lasting at least min_duration become rest windows.
  for (std::size_t i = 0; i < n;) {
    if (!flagged[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && flagged[j]) {
      ++j;
    }
    const auto guard = static_cast<std::size_t>(std::llround(config_.rest_guard_s / dt));
    const std::size_t begin = i == 0 ? i : i + guard;
    const std::size_t end = j == n || j < guard ? j : j - guard;
    if (begin < end) {
      const double span = 1e-9 * static_cast<double>(series.samples[end - 1].t_ns -
                                                      series.samples[begin].t_ns) + dt;
      if (span + 0.5 * dt >= rest.min_duration_s) {
        out.rest_windows.push_back(
            {begin, end, series.samples[begin].t_ns, series.samples[end - 1].t_ns});
      }
    }
    i = j;
  }

  // Pass 2: Kalman gyro bias (update inside rest, predict outside), Madgwick on compensated
  // signals, and bias recomputation at the close of every rest window.
  BiasState bias;
  bias.gyro_noise = Mat3::Identity() * config_.default_gyro_noise_std * config_.default_gyro_noise_std;
  bias.gyro_bias = init.gyro_bias;

  OrientationState orientation;
  orientation.q_BI = init.q;

  out.biases.reserve(n);
  out.orientations.reserve(n);
  std::size_t next_window = 0;
  std::vector<BiasState> window_result(out.rest_windows.size());

  for (std::size_t i = 0; i < n; ++i) {
    const ImuSample& s = series.samples[i];
    if (i > 0) {
      const Vec3 omega = s.omega - bias.sensor_gyro_bias();
      const Vec3 accel = s.accel - bias.accel_bias;
      orientation.q_BI = madgwick_update(orientation.q_BI, accel, omega, dt, config_.madgwick_beta);
    }

    const RestWindow* window =
        next_window < out.rest_windows.size() && i >= out.rest_windows[next_window].begin
            ? &out.rest_windows[next_window]
            : nullptr;
    if (window != nullptr) {
      const Mat3 h = orientation.q_BI.to_matrix().transpose();
      bias = gyro_bias_kf_step(bias, s.omega, h);

      if (i + 1 == window->end) {
        const ImuSeries rest_series = series.slice(window->begin, window->end);
        const Vec3 omega_mean = mean_omega(series, window->begin, window->end);
        Vec3 omega_var = Vec3::Zero();
        for (const ImuSample& r : rest_series.samples) {
          omega_var += (r.omega - omega_mean).cwiseProduct(r.omega - omega_mean);
        }
        omega_var /= static_cast<double>(rest_series.size());

        // Re-seed the filter state with the window mean; the covariance stays with the filter.
        bias.gyro_reference = h;
        bias.gyro_bias = h.transpose() * omega_mean;
        bias.gyro_noise = omega_var.cwiseMax(1e-12).asDiagonal();

        try {
          std::vector<Vec3> expected;
          expected.reserve(rest_series.size());
          for (std::size_t k = window->begin; k < window->end; ++k) {
            expected.push_back(k < i ? out.orientations[k].value.expected_specific_force()
                                     : orientation.expected_specific_force());
          }
          const AccelBiasEstimate accel = estimate_accel_bias(
              rest_series, expected,
              RestConfig{std::numeric_limits<double>::infinity(), rest.min_duration_s});
          bias.accel_bias = accel.bias;
          bias.accel_noise = accel.noise;
        } catch (const Error&) {
          // Keep the previous accelerometer bias.
        }
        window_result[next_window] = bias;
        ++next_window;
      }
    } else {
      bias = gyro_bias_kf_predict(bias);
    }

    out.biases.push_back({s.t_ns, bias});
    out.orientations.push_back({s.t_ns, orientation});
  }

  // Offline back-fill: samples inside a rest window, and those before the first one, use
  // that window's bias values. Covariances keep their filtered trajectory.
  auto apply_values = [](BiasState& target, const BiasState& source) {
    target.accel_bias = source.accel_bias;
    target.accel_noise = source.accel_noise;
    target.gyro_bias = source.gyro_bias;
    target.gyro_reference = source.gyro_reference;
    target.gyro_noise = source.gyro_noise;
  };
  for (std::size_t w = 0; w < out.rest_windows.size(); ++w) {
    const std::size_t begin = w == 0 ? 0 : out.rest_windows[w].begin;
    for (std::size_t i = begin; i < out.rest_windows[w].end; ++i) {
      apply_values(out.biases[i].value, window_result[w]);
    }
  }

  out.compensated = compensate(series, out.biases, out.orientations, true);
  out.specific_force = compensate(series, out.biases, out.orientations, false);
  return out;
}

}  // namespace rigidcal
