#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rigidcal/cloud.hpp"
#include "rigidcal/geometry.hpp"
#include "rigidcal/sim.hpp"

namespace rigidcal::app {

/// One lidar with its co-located IMU.
struct SensorEntry {
  std::string frame;      // lidar frame; the base sensor uses "B"
  std::string imu_frame;  // co-located IMU frame
  std::filesystem::path imu_csv;
  std::vector<std::filesystem::path> clouds;
  RigidTransform T_lidar_imu;  // imu_frame -> frame, factory calibration
  RigidTransform T_init;       // frame -> B, rough CAD value (ignored for the base)
  double bounds_half_width = 0.3;  // [m] translation search box around t_init
};

struct Thresholds {
  double rest_tau = 0.15;           // [m/s^2]
  double rest_min_duration_s = 2.0;
  double line_alpha = deg2rad(5.0);
  double line_delta = 0.5;  // [m]
  double plane_alpha = deg2rad(1.0);
  double plane_delta = 0.3;  // [m]
  double observability_threshold = kDefaultObservabilityThreshold;
  double window_s = 10.0;
  /// Rates below k * sqrt(tr Sigma_omega) carry no information. 0 disables.
  double omega_deadband_sigmas = 3.0;
};

struct SimulationSettings {
  std::string preset = "figure8";  // figure8 | straight | slow_turn | rest_then_drive
  TrajectorySpec trajectory;
  double gyro_noise_std = 0.002;    // [rad/s]
  double accel_noise_std = 0.02;    // [m/s^2]
  double gyro_bias = 0.005;         // [rad/s] per axis, target IMU
  double accel_bias = 0.02;         // [m/s^2] per axis, target IMU
  RigidTransform T_base_target_imu;  // truth: target IMU -> base IMU
  Vec3 lidar_offset = Vec3(0.0, 0.0, 0.1);  // target lidar origin in its IMU frame
  Vec3 init_translation_error = Vec3(0.08, 0.0, 0.0);  // [m]
  Vec3 init_rotation_error_deg = Vec3(1.0, -1.0, 3.0);  // roll, pitch, yaw [deg]
  double cloud_noise_std = 0.005;   // [m]
};

struct PipelineConfig {
  SensorEntry base;
  std::vector<SensorEntry> sensors;
  Thresholds thresholds;
  std::size_t feature_count = 100;
  std::uint64_t seed = 1;
  double resample_rate_hz = 25.0;
  double madgwick_beta = 0.05;
  Box box;
  IcpConfig icp;
  SimulationSettings simulation;

  /// Throws InvalidArgument on non-positive thresholds; with check_files, Io for missing inputs.
  void validate(bool check_files, bool need_clouds) const;
};

/// Defaults for the simulated two-lidar rig.
PipelineConfig default_config();
/// Missing keys keep default_config() values. Relative paths resolve against the file's directory.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const PipelineConfig& config);

/// {"from", "to", "rotation" (3x3 rows), "translation", "rpy_deg"}. Parsing accepts
/// "rotation", "quaternion" [w, x, y, z] or "rpy_deg".
nlohmann::json transform_to_json(const RigidTransform& T);
RigidTransform transform_from_json(const nlohmann::json& j);

/// True target lidar -> base transform of the simulated rig.
RigidTransform simulated_lidar_truth(const SimulationSettings& sim);
/// The truth degraded by the configured initial-guess errors.
RigidTransform perturbed_init(const SimulationSettings& sim);

/// Trajectory parameters of a named simulation preset.
TrajectorySpec preset_trajectory(const std::string& preset);

}  // namespace rigidcal::app
