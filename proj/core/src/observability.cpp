#include "rigidcal/observability.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "rigidcal/error.hpp"

namespace rigidcal {

namespace {

double scalar_weight(const Mat3& covariance) { return covariance.inverse().trace() / 3.0; }

void accumulate(Mat3& fim, const Vec3& omega, double w) {
  // Upper triangle, mirrored afterwards, keeps the result exactly symmetric.
  for (int r = 0; r < 3; ++r) {
    for (int c = r; c < 3; ++c) {
      fim(r, c) += w * omega(r) * omega(c);
    }
  }
}

void mirror(Mat3& fim) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < r; ++c) {
      fim(r, c) = fim(c, r);
    }
  }
}

}  // namespace

Mat3 fisher_info(std::span<const Vec3> omega, std::span<const Mat3> covariances) {
  if (!covariances.empty() && covariances.size() != omega.size()) {
    throw Error(ErrorCode::kInvalidArgument, "covariances and samples differ in length");
  }
  Mat3 fim = Mat3::Zero();
  for (std::size_t i = 0; i < omega.size(); ++i) {
    accumulate(fim, omega[i], covariances.empty() ? 1.0 : scalar_weight(covariances[i]));
  }
  mirror(fim);
  return fim;
}

Mat3 fisher_info(std::span<const Vec3> omega, const Mat3& covariance) {
  const double w = scalar_weight(covariance);
  Mat3 fim = Mat3::Zero();
  for (const Vec3& v : omega) {
    accumulate(fim, v, w);
  }
  mirror(fim);
  return fim;
}

Vec3 fim_singular_values(const Mat3& fim) {
  Eigen::JacobiSVD<Mat3> svd(fim);
  return svd.singularValues();
}

std::vector<SegmentReport> segment_select(std::span<const TimedRate> series,
                                          const ObservabilityConfig& config) {
  if (!(config.window_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "observability window must be positive");
  }
  std::vector<SegmentReport> reports;
  if (series.empty()) {
    return reports;
  }
  std::vector<TimedRate> sorted(series.begin(), series.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TimedRate& a, const TimedRate& b) { return a.t_ns < b.t_ns; });

  const auto window_ns = static_cast<std::int64_t>(std::llround(config.window_s * 1e9));
  const std::int64_t t0 = sorted.front().t_ns;
  const std::int64_t t_last = sorted.back().t_ns;
  const double spacing =
      sorted.size() > 1 ? static_cast<double>(t_last - t0) / static_cast<double>(sorted.size() - 1)
                        : 0.0;
  const double weight = scalar_weight(config.covariance);

  std::size_t i = 0;
  for (std::int64_t start = t0; i < sorted.size(); start += window_ns) {
    SegmentReport report;
    report.t_start_ns = start;
    report.t_end_ns = start + window_ns;
    for (; i < sorted.size() && sorted[i].t_ns < report.t_end_ns; ++i) {
      ++report.n_samples;
      if (sorted[i].omega.norm() >= config.omega_deadband) {
        accumulate(report.fim, sorted[i].omega, weight);
      }
    }
    mirror(report.fim);
    if (config.normalize && report.n_samples > 0) {
      report.fim /= static_cast<double>(report.n_samples);
    }
    report.singular_values = fim_singular_values(report.fim);
    // The last sample stands for one sample period.
    report.complete = static_cast<double>(t_last) + 1.5 * spacing >=
                      static_cast<double>(report.t_end_ns);
    report.accepted = report.complete && report.singular_values(2) > config.threshold;
    reports.push_back(report);
  }
  return reports;
}

bool in_accepted_segment(const std::vector<SegmentReport>& reports, std::int64_t t_ns) {
  return std::any_of(reports.begin(), reports.end(), [&](const SegmentReport& r) {
    return r.accepted && t_ns >= r.t_start_ns && t_ns < r.t_end_ns;
  });
}

}  // namespace rigidcal
