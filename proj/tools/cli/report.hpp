#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rigidcal/geometry.hpp"
#include "rigidcal/observability.hpp"

namespace rigidcal::app {

struct StageError {
  std::string stage;
  std::string code;
  std::string message;
  friend bool operator==(const StageError&, const StageError&) = default;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
  friend bool operator==(const StageTiming&, const StageTiming&) = default;
};

struct BiasTracePoint {
  std::int64_t t_ns = 0;
  Vec3 gyro_bias = Vec3::Zero();   // sensor frame [rad/s]
  Vec3 accel_bias = Vec3::Zero();  // [m/s^2]
  double gyro_cov_trace = 0.0;
  friend bool operator==(const BiasTracePoint&, const BiasTracePoint&) = default;
};

struct BiasTrace {
  std::string frame;
  std::size_t rest_windows = 0;
  std::vector<BiasTracePoint> points;
  friend bool operator==(const BiasTrace&, const BiasTrace&) = default;
};

/// Outcome for one base-to-sensor pair.
struct PairReport {
  std::string sensor;
  std::string status;  // calibrated | imu_only | insufficient_excitation | failed
  std::optional<RigidTransform> T_init;
  std::optional<RigidTransform> T_hat_IMU;
  std::optional<RigidTransform> T_hat_GICP;
  std::optional<RigidTransform> T_hat_Refined;
  std::optional<RigidTransform> T_final;
  std::string verification = "not_run";  // verified | rejected | no_planes | not_run
  int attempts = 0;
  std::vector<SegmentReport> segments;
  double imu_rotation_rms = 0.0;     // [rad/s]
  double imu_translation_rms = 0.0;  // [m/s^2]
  std::size_t imu_samples_used = 0;
  double icp_rms = 0.0;  // [m]
  std::size_t line_pairs = 0;
  std::size_t plane_pairs = 0;
  double verify_max_alpha_deg = 0.0;
  double verify_max_delta = 0.0;  // [m]
  std::vector<StageError> errors;
  std::vector<StageTiming> timings;
  friend bool operator==(const PairReport&, const PairReport&) = default;
};

struct CalibrationReport {
  std::string version;
  std::string generated_at;  // empty in deterministic mode
  std::uint64_t seed = 0;
  std::vector<PairReport> pairs;
  std::vector<BiasTrace> bias_traces;
  friend bool operator==(const CalibrationReport&, const CalibrationReport&) = default;
};

nlohmann::json segment_to_json(const SegmentReport& s);
SegmentReport segment_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const CalibrationReport& report);
/// Throws Parse on missing or mistyped fields.
CalibrationReport report_from_json(const nlohmann::json& j);

/// Human-readable summary used by `rigidcal report`.
std::string summarize(const CalibrationReport& report);

}  // namespace rigidcal::app
