#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rigidcal/geometry.hpp"

namespace rigidcal {

/// 5^-10
inline const double kDefaultObservabilityThreshold = std::pow(5.0, -10.0);

struct SegmentReport {
  std::int64_t t_start_ns = 0;
  std::int64_t t_end_ns = 0;  // exclusive window end
  Mat3 fim = Mat3::Zero();
  Vec3 singular_values = Vec3::Zero();  // descending
  bool accepted = false;
  bool complete = true;  // false for the trailing partial window
  std::size_t n_samples = 0;

  friend bool operator==(const SegmentReport&, const SegmentReport&) = default;
};

struct TimedRate {
  std::int64_t t_ns = 0;
  Vec3 omega = Vec3::Zero();
};

/// sum_i w_i omega_i omega_i^T with w_i = tr(Sigma_i^-1) / 3 (unit weights when empty).
Mat3 fisher_info(std::span<const Vec3> omega, std::span<const Mat3> covariances = {});
/// Same with one covariance shared by every sample.
Mat3 fisher_info(std::span<const Vec3> omega, const Mat3& covariance);

/// Singular values of a symmetric PSD 3x3 matrix, descending.
Vec3 fim_singular_values(const Mat3& fim);

struct ObservabilityConfig {
  double window_s = 10.0;
  double threshold = kDefaultObservabilityThreshold;
  Mat3 covariance = Mat3::Identity();  // gyro noise Sigma_omega
  /// Divide each window's FIM by its sample count before thresholding.
  bool normalize = false;
  /// Samples with |omega| below this rate [rad/s] add no information. 0 keeps all samples.
  double omega_deadband = 0.0;
};

/// Consecutive non-overlapping windows starting at the earliest sample. Samples are
/// accumulated in timestamp order. A trailing partial window is reported with
/// complete = false and never accepted. Throws InvalidArgument when window_s <= 0.
std::vector<SegmentReport> segment_select(std::span<const TimedRate> series,
                                          const ObservabilityConfig& config = {});

/// True iff t_ns lies inside an accepted segment.
bool in_accepted_segment(const std::vector<SegmentReport>& reports, std::int64_t t_ns);

}  // namespace rigidcal
