#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "config.hpp"
#include "report.hpp"
#include "rigidcal/cloud.hpp"

namespace rigidcal::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitGateFailed = 2;
inline constexpr int kExitInconclusive = 3;

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
  bool imu_only = false;
  bool deterministic = false;
};

/// Writes imu_<frame>.csv per IMU, cloud_<frame>.ply per lidar, truth.json and a
/// config.json that points `rigidcal calibrate` at these files. Returns the written paths.
std::vector<std::filesystem::path> cmd_simulate(const PipelineConfig& config,
                                                const std::filesystem::path& output_dir);

struct CalibrateOutput {
  CalibrationReport report;
  int exit_code = kExitOk;
};

/// IMU conditioning, IMU-to-IMU initialization, then ICP, line refinement and plane
/// verification per sensor. Stage errors land in the report instead of escaping.
CalibrateOutput cmd_calibrate(const PipelineConfig& config, const RunOptions& options);

struct ObservabilityOutput {
  std::vector<SegmentReport> segments;
  int exit_code = kExitOk;
};

/// Window reports for one IMU file; exit 0 when any window is accepted, 2 otherwise.
ObservabilityOutput cmd_observability(const std::filesystem::path& imu_csv, const PipelineConfig& config);

struct VerifyOutput {
  VerifyResult result;
  std::size_t base_planes = 0;
  std::size_t target_planes = 0;
  int exit_code = kExitOk;
};

/// Standalone plane gate: 0 verified, 2 rejected, 3 no planes to compare.
VerifyOutput cmd_verify(const PointCloud& base_cloud, const PointCloud& target_cloud,
                        const RigidTransform& T_target_to_base, const PipelineConfig& config);

/// Transform from a file holding a bare transform, a truth file ("T_lidar") or a report
/// entry ("T_final").
RigidTransform load_extrinsics(const std::filesystem::path& path);

/// Plot-ready rows: t_start_s,t_end_s,sigma1,sigma2,sigma3,accepted.
void write_segments_csv(const std::filesystem::path& path, const std::vector<SegmentReport>& segments);

}  // namespace rigidcal::app
