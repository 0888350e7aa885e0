#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "rigidcal/geometry.hpp"
#include "rigidcal/rng.hpp"

namespace rigidcal::test {

inline Vec3 random_unit(CounterRng& rng) {
  while (true) {
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    if (v.norm() > 1e-6) {
      return v.normalized();
    }
  }
}

inline Vec3 random_vec(CounterRng& rng, double scale = 1.0) {
  return Vec3(rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale));
}

/// Uniform on SO(3) via a normalized Gaussian quaternion.
inline Quaternion random_quaternion(CounterRng& rng) {
  Quaternion q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  return q.normalized().canonical();
}

inline Mat3 random_rotation(CounterRng& rng) { return random_quaternion(rng).to_matrix(); }

inline RigidTransform random_transform(CounterRng& rng, FrameId from, FrameId to, double scale = 2.0) {
  return {random_rotation(rng), random_vec(rng, scale), std::move(from), std::move(to)};
}

/// Rotation by `angle` about a random axis.
inline Mat3 random_small_rotation(CounterRng& rng, double angle) {
  return Quaternion::from_axis_angle(random_unit(rng), angle).to_matrix();
}

inline double translation_error(const RigidTransform& a, const RigidTransform& b) {
  return (a.translation - b.translation).norm();
}

inline double rotation_error(const RigidTransform& a, const RigidTransform& b) {
  return geodesic_distance(a.rotation, b.rotation);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("rigidcal_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace rigidcal::test
