#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rigidcal/cloud.hpp"
#include "rigidcal/geometry.hpp"
#include "rigidcal/imu.hpp"

namespace rigidcal {

enum class TrajectoryKind { kFigure8, kStraight, kSlowTurn, kRestThenDrive };

const char* to_string(TrajectoryKind kind);
/// Throws InvalidArgument for unknown names.
TrajectoryKind trajectory_kind_from_string(const std::string& name);

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kFigure8;
  double duration_s = 60.0;
  double rate_hz = 100.0;
  double speed = 5.0;              // [m/s] straight drive
  double turn_rate = 0.1;          // [rad/s] slow turn
  double figure8_amplitude = 12.0;  // [m]
  double figure8_period_s = 24.0;
  double tilt_amplitude = deg2rad(3.0);  // [rad] roll/pitch excitation
  double tilt_frequency_hz = 0.3;
  double rest_s = 5.0;  // rest_then_drive only
  double ramp_s = 3.0;  // rest_then_drive only

  /// Throws InvalidArgument unless rate >= 50 Hz and duration > 0.
  void validate() const;
};

/// Ground truth at one instant. The base frame B moves in the world frame W.
struct PoseSample {
  std::int64_t t_ns = 0;
  Mat3 R_WB = Mat3::Identity();
  Vec3 p_WB = Vec3::Zero();
  Vec3 omega_B = Vec3::Zero();  // [rad/s]
  Vec3 alpha_B = Vec3::Zero();  // [rad/s^2]
  Vec3 accel_B = Vec3::Zero();  // gravity-free acceleration of B's origin, in B [m/s^2]
};

/// Closed-form trajectory; all derivatives are exact. The seed shifts the phase of the
/// roll/pitch excitation (seed 0 keeps the nominal phase).
std::vector<PoseSample> gen_trajectory(const TrajectorySpec& spec, std::uint64_t seed = 0);

struct SensorMountSpec {
  RigidTransform T_BS;  // sensor -> base (true extrinsics)
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  Mat3 gyro_noise = Mat3::Zero();   // Sigma_omega
  Mat3 accel_noise = Mat3::Zero();  // Sigma_a
  bool zero_gravity = false;
};

/// IMU readings of a sensor rigidly mounted at T_BS, one per trajectory sample.
ImuSeries synth_imu(const std::vector<PoseSample>& trajectory, const SensorMountSpec& mount,
                    std::uint64_t seed);

struct LinePrimitive {
  Vec3 center = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double length = 1.0;  // [m]
};

struct PlanePrimitive {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 u_axis = Vec3::Zero();  // first in-plane axis; zero picks one
  double extent_u = 1.0;       // [m]
  double extent_v = 1.0;       // [m]
};

/// Uniform scatter inside a ball.
struct BallPrimitive {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  std::size_t count = 1000;
};

struct SceneSpec {
  FrameId frame = FrameId::base();
  std::vector<LinePrimitive> lines;
  std::vector<PlanePrimitive> planes;
  std::vector<BallPrimitive> balls;
  double plane_density = 20.0;  // [pts/m^2]
  double line_density = 50.0;   // [pts/m]
  double noise_std = 0.005;     // [m] isotropic

  /// Throws InvalidArgument on non-positive densities or negative noise.
  void validate() const;
};

/// Jittered stratified samples of every primitive plus Gaussian noise, expressed in the
/// sensor frame. sensor_pose maps sensor -> scene frame.
PointCloud synth_scene(const SceneSpec& scene, const RigidTransform& sensor_pose,
                       std::uint64_t seed);

/// Ground, two walls, floating poles and bars inside the region both lidars of the
/// standard rig see.
SceneSpec calibration_scene();

/// 64-bit FNV-1a, used to derive per-sensor random streams from frame names.
std::uint64_t stream_id(const std::string& name);

}  // namespace rigidcal
