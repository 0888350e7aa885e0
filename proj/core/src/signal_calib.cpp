#include "rigidcal/signal_calib.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rigidcal/error.hpp"

namespace rigidcal {

TranslationBounds TranslationBounds::around(const Vec3& center, double half_width) {
  return {center - Vec3::Constant(half_width), center + Vec3::Constant(half_width)};
}

bool TranslationBounds::contains(const Vec3& x) const {
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Vec3 TranslationBounds::clamp(const Vec3& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

namespace {

struct Interpolated {
  Vec3 omega;
  Vec3 accel;
};

// Walks forward through a series; queries must be non-decreasing in time.
class Interpolator {
 public:
  explicit Interpolator(const ImuSeries& series, std::int64_t offset_ns = 0)
      : s_(series.samples), offset_(offset_ns) {}

  Interpolated at(std::int64_t t) {
    while (j_ + 1 < s_.size() && s_[j_ + 1].t_ns + offset_ <= t) {
      ++j_;
    }
    const ImuSample& lo = s_[j_];
    if (j_ + 1 >= s_.size()) {
      return {lo.omega, lo.accel};
    }
    const ImuSample& hi = s_[j_ + 1];
    const double u = static_cast<double>(t - lo.t_ns - offset_) / static_cast<double>(hi.t_ns - lo.t_ns);
    return {lo.omega + u * (hi.omega - lo.omega), lo.accel + u * (hi.accel - lo.accel)};
  }

 private:
  const std::vector<ImuSample>& s_;
  std::int64_t offset_;
  std::size_t j_ = 0;
};

std::vector<PairedSignal> resample_with_offset(const ImuSeries& base, const ImuSeries& other,
                                               double rate_hz, int smoothing_window,
                                               std::int64_t offset_ns) {
  if (!(rate_hz > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "resample rate must be positive");
  }
  if (base.empty() || other.empty()) {
    throw Error(ErrorCode::kNoOverlap, "empty IMU series");
  }
  const std::int64_t start =
      std::max(base.samples.front().t_ns, other.samples.front().t_ns + offset_ns);
  const std::int64_t end = std::min(base.samples.back().t_ns, other.samples.back().t_ns + offset_ns);
  if (end - start < 1'000'000'000) {
    throw Error(ErrorCode::kNoOverlap, "IMU streams share less than 1 s");
  }
  const auto step = static_cast<std::int64_t>(std::llround(1e9 / rate_hz));

  std::vector<PairedSignal> pairs;
  pairs.reserve(static_cast<std::size_t>((end - start) / step + 1));
  Interpolator ib(base);
  Interpolator io(other, offset_ns);
  for (std::int64_t t = start; t <= end; t += step) {
    const Interpolated b = ib.at(t);
    const Interpolated o = io.at(t);
    PairedSignal p;
    p.t_ns = t;
    p.omega_B = b.omega;
    p.accel_B = b.accel;
    p.omega_I = o.omega;
    p.accel_I = o.accel;
    pairs.push_back(p);
  }
  if (pairs.size() < 3) {
    throw Error(ErrorCode::kNoOverlap, "fewer than 3 grid points in the shared span");
  }

  std::vector<Vec3> omega(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    omega[i] = pairs[i].omega_B;
  }
  const std::vector<Vec3> alpha = angular_accel(omega, 1e-9 * static_cast<double>(step), smoothing_window);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i].alpha_B = alpha[i];
  }
  return pairs;
}

}  // namespace

std::vector<PairedSignal> resample_align(const ImuSeries& base, const ImuSeries& other,
                                         double rate_hz, int smoothing_window) {
  return resample_with_offset(base, other, rate_hz, smoothing_window, 0);
}

std::vector<Vec3> moving_average(std::span<const Vec3> values, int window) {
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t half = std::max(window, 1) / 2;
  std::vector<Vec3> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t h = std::min({half, i, n - 1 - i});
    Vec3 sum = Vec3::Zero();
    for (std::ptrdiff_t k = i - h; k <= i + h; ++k) {
      sum += values[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(i)] = sum / static_cast<double>(2 * h + 1);
  }
  return out;
}

std::vector<Vec3> angular_accel(std::span<const Vec3> omega, double dt, int smoothing_window) {
  if (omega.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "angular_accel needs at least 3 samples");
  }
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sample period must be positive");
  }
  const std::vector<Vec3> s = moving_average(omega, smoothing_window);
  const std::size_t n = s.size();
  std::vector<Vec3> out(n);
  out[0] = (s[1] - s[0]) / dt;
  out[n - 1] = (s[n - 1] - s[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = (s[i + 1] - s[i - 1]) / (2.0 * dt);
  }
  return out;
}

RotationEstimate estimate_rotation(std::span<const PairedSignal> pairs,
                                   std::span<const Mat3> covariances) {
  std::vector<Correspondence> corr;
  corr.reserve(pairs.size());
  for (const PairedSignal& p : pairs) {
    corr.push_back({p.omega_I, p.omega_B});
  }
  RotationEstimate out;
  out.R_BI = kabsch_rotation(corr, covariances);
  double sq = 0.0;
  for (const PairedSignal& p : pairs) {
    sq += (out.R_BI * p.omega_I - p.omega_B).squaredNorm();
  }
  out.residual_rms = std::sqrt(sq / static_cast<double>(pairs.size()));
  return out;
}

TranslationEstimate estimate_translation(std::span<const PairedSignal> pairs, const Mat3& R_BI,
                                         const TranslationBounds& bounds, const Vec3& t_init,
                                         std::span<const double> weights) {
  if (!weights.empty() && weights.size() != pairs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "weights and pairs differ in length");
  }
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixX3d a(3 * n, 3);
  Eigen::VectorXd b(3 * n);
  std::vector<double> row_weights;
  if (!weights.empty()) {
    row_weights.reserve(3 * pairs.size());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const PairedSignal& p = pairs[static_cast<std::size_t>(i)];
    const Mat3 w = skew(p.omega_B);
    a.block<3, 3>(3 * i, 0) = w * w + skew(p.alpha_B);
    b.segment<3>(3 * i) = R_BI * p.accel_I - p.accel_B;
    for (int k = 0; k < 3 && !weights.empty(); ++k) {
      row_weights.push_back(weights[static_cast<std::size_t>(i)]);
    }
  }

  TranslationEstimate out;
  out.solver = bvls_solve(a, b, row_weights, bounds, t_init);
  out.t_BI = out.solver.x;
  out.residual_rms = n > 0 ? (a * out.t_BI - b).norm() / std::sqrt(static_cast<double>(n)) : 0.0;
  return out;
}

ImuExtrinsicsEstimate calibrate_imu_pair(const ImuSeries& base, const ImuSeries& other,
                                         const TranslationBounds& bounds, const Vec3& t_init,
                                         const ImuCalibConfig& config) {
  base.validate();
  other.validate();
  const std::int64_t offset = config.time_offset ? config.time_offset(base, other) : 0;
  const std::vector<PairedSignal> pairs =
      resample_with_offset(base, other, config.resample_rate_hz, config.smoothing_window, offset);

  std::vector<TimedRate> rates;
  rates.reserve(pairs.size());
  for (const PairedSignal& p : pairs) {
    rates.push_back({p.t_ns, p.omega_B});
  }

  ImuExtrinsicsEstimate out;
  out.segments = segment_select(rates, config.observability);

  std::vector<PairedSignal> selected;
  for (const PairedSignal& p : pairs) {
    if (in_accepted_segment(out.segments, p.t_ns)) {
      selected.push_back(p);
    }
  }
  if (selected.empty()) {
    throw Error(ErrorCode::kInsufficientExcitation,
                "no " + std::to_string(config.observability.window_s) +
                    " s segment passes the observability gate");
  }

  std::vector<double> weights;
  if (config.weight_by_rate) {
    double mean = 0.0;
    for (const PairedSignal& p : selected) {
      mean += p.omega_B.norm();
    }
    mean /= static_cast<double>(selected.size());
    for (const PairedSignal& p : selected) {
      weights.push_back(mean > 0.0 ? p.omega_B.norm() / mean : 1.0);
    }
  }

  std::vector<Correspondence> corr;
  corr.reserve(selected.size());
  for (const PairedSignal& p : selected) {
    corr.push_back({p.omega_I, p.omega_B});
  }
  const Mat3 r = kabsch_rotation_weighted(corr, weights);
  double sq = 0.0;
  for (const PairedSignal& p : selected) {
    sq += (r * p.omega_I - p.omega_B).squaredNorm();
  }

  const TranslationEstimate t = estimate_translation(selected, r, bounds, t_init, weights);
  out.T_hat = RigidTransform{r, t.t_BI, other.frame, base.frame};
  out.rotation_residual_rms = std::sqrt(sq / static_cast<double>(selected.size()));
  out.translation_residual_rms = t.residual_rms;
  out.n_samples_used = selected.size();
  return out;
}

}  // namespace rigidcal
