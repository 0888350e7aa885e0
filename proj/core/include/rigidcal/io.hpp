#pragma once

#include <filesystem>

#include "rigidcal/cloud.hpp"
#include "rigidcal/imu.hpp"

namespace rigidcal {

/// Header row of the IMU CSV format. Units: ns, rad/s, m/s^2.
inline constexpr const char* kImuCsvHeader = "t_ns,wx,wy,wz,ax,ay,az";

/// Reads an IMU CSV. rate_hz <= 0 infers the rate from the median sample spacing.
/// Throws Io when the file cannot be opened, Parse on malformed rows.
ImuSeries read_imu_csv(const std::filesystem::path& path, const FrameId& frame, double rate_hz = 0.0);
void write_imu_csv(const std::filesystem::path& path, const ImuSeries& series);

/// ASCII PLY with one vertex element carrying float/double x, y, z (other properties ignored).
PointCloud read_ply(const std::filesystem::path& path, const FrameId& frame);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);

/// "x,y,z" rows; a non-numeric first row is taken as a header.
PointCloud read_xyz_csv(const std::filesystem::path& path, const FrameId& frame);
void write_xyz_csv(const std::filesystem::path& path, const PointCloud& cloud);

/// Dispatches on extension: .ply or .csv/.xyz.
PointCloud read_cloud(const std::filesystem::path& path, const FrameId& frame);

}  // namespace rigidcal
