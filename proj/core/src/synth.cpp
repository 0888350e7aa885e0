#include <Eigen/Eigenvalues>
#include <cmath>

#include "rigidcal/error.hpp"
#include "rigidcal/rng.hpp"
#include "rigidcal/sim.hpp"

namespace rigidcal {

std::uint64_t stream_id(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

Mat3 matrix_sqrt(const Mat3& cov) {
  if (cov.isZero(0.0)) {
    return Mat3::Zero();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(0.5 * (cov + cov.transpose()));
  if (eig.eigenvalues().minCoeff() < -1e-15) {
    throw Error(ErrorCode::kInvalidArgument, "noise covariance is not positive semidefinite");
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

Vec3 gaussian(CounterRng& rng) {
  const double a = rng.normal();
  const double b = rng.normal();
  const double c = rng.normal();
  return {a, b, c};
}

}  // namespace

ImuSeries synth_imu(const std::vector<PoseSample>& trajectory, const SensorMountSpec& mount,
                    std::uint64_t seed) {
  ImuSeries out;
  out.frame = mount.T_BS.from;
  if (trajectory.size() >= 2) {
    out.rate_hz = 1e9 / static_cast<double>(trajectory[1].t_ns - trajectory[0].t_ns);
  }
  const Mat3 gyro_l = matrix_sqrt(mount.gyro_noise);
  const Mat3 accel_l = matrix_sqrt(mount.accel_noise);
  const Mat3 r_sb = mount.T_BS.rotation.transpose();
  const Vec3& lever = mount.T_BS.translation;
  const Vec3 up_W(0.0, 0.0, mount.zero_gravity ? 0.0 : kGravity);  // -gravity vector

  CounterRng rng(seed, stream_id(out.frame.str()));
  out.samples.reserve(trajectory.size());
  for (const PoseSample& p : trajectory) {
    const Vec3 gyro_eta = gyro_l * gaussian(rng);
    const Vec3 accel_eta = accel_l * gaussian(rng);
    const Vec3& w = p.omega_B;
    const Vec3 at_sensor = p.accel_B + w.cross(w.cross(lever)) + p.alpha_B.cross(lever);
    ImuSample s;
    s.t_ns = p.t_ns;
    s.omega = r_sb * w + mount.gyro_bias + gyro_eta;
    s.accel = r_sb * (at_sensor + p.R_WB.transpose() * up_W) + mount.accel_bias + accel_eta;
    out.samples.push_back(s);
  }
  return out;
}

void SceneSpec::validate() const {
  if (!(plane_density > 0.0) || !(line_density > 0.0) || !(noise_std >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "scene densities must be positive, noise >= 0");
  }
}

namespace {

Vec3 perpendicular(const Vec3& n) {
  int axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  return n.cross(Vec3::Unit(axis)).normalized();
}

}  // namespace

PointCloud synth_scene(const SceneSpec& scene, const RigidTransform& sensor_pose,
                       std::uint64_t seed) {
  scene.validate();
  if (!(sensor_pose.to == scene.frame)) {
    throw Error(ErrorCode::kFrameMismatch,
                "sensor pose maps into " + sensor_pose.to.str() + ", scene is in " + scene.frame.str());
  }
  const RigidTransform to_sensor = sensor_pose.inverse();
  CounterRng rng(seed, stream_id(sensor_pose.from.str()));
  PointCloud cloud{sensor_pose.from, {}};
  auto emit = [&](const Vec3& p) {
    const Vec3 noisy = p + scene.noise_std * gaussian(rng);
    cloud.points.push_back(to_sensor.apply(noisy));
  };

  for (const PlanePrimitive& pl : scene.planes) {
    const Vec3 n = pl.normal.normalized();
    const Vec3 u = pl.u_axis.isZero(0.0) ? perpendicular(n)
                                          : (pl.u_axis - n * n.dot(pl.u_axis)).normalized();
    const Vec3 v = n.cross(u);
    const double pitch = 1.0 / std::sqrt(scene.plane_density);
    const auto nu = static_cast<int>(std::ceil(pl.extent_u / pitch));
    const auto nv = static_cast<int>(std::ceil(pl.extent_v / pitch));
    const double du = pl.extent_u / nu, dv = pl.extent_v / nv;
    for (int i = 0; i < nu; ++i) {
      for (int j = 0; j < nv; ++j) {
        const double a = (i + rng.uniform()) * du - 0.5 * pl.extent_u;
        const double b = (j + rng.uniform()) * dv - 0.5 * pl.extent_v;
        emit(pl.center + a * u + b * v);
      }
    }
  }
  for (const LinePrimitive& ln : scene.lines) {
    const Vec3 d = ln.direction.normalized();
    const auto n = static_cast<int>(std::ceil(ln.length * scene.line_density));
    const double step = ln.length / n;
    for (int i = 0; i < n; ++i) {
      emit(ln.center + ((i + rng.uniform()) * step - 0.5 * ln.length) * d);
    }
  }
  for (const BallPrimitive& ball : scene.balls) {
    for (std::size_t i = 0; i < ball.count;) {
      const Vec3 q(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      if (q.squaredNorm() <= 1.0) {
        emit(ball.center + ball.radius * q);
        ++i;
      }
    }
  }
  return cloud;
}

SceneSpec calibration_scene() {
  SceneSpec s;
  s.frame = FrameId::base();
  // Ground 1.8 m below the base lidar and two walls facing it.
  s.planes.push_back({Vec3(9.0, 4.0, -1.8), Vec3::UnitZ(), Vec3::UnitX(), 14.0, 11.0});
  s.planes.push_back({Vec3(16.0, 4.0, 0.2), Vec3::UnitX(), Vec3::UnitY(), 10.0, 4.0});
  s.planes.push_back({Vec3(9.5, 9.0, 0.2), Vec3::UnitY(), Vec3::UnitX(), 12.0, 4.0});
  // Floating poles and bars, clear of the planes and of each other.
  s.lines.push_back({Vec3(6.0, 2.0, 0.5), Vec3::UnitZ(), 3.0});
  s.lines.push_back({Vec3(9.0, 5.0, 0.5), Vec3::UnitZ(), 3.0});
  s.lines.push_back({Vec3(12.0, 2.5, 0.5), Vec3::UnitZ(), 3.0});
  s.lines.push_back({Vec3(13.0, 6.5, 0.5), Vec3::UnitZ(), 3.0});
  s.lines.push_back({Vec3(7.5, 7.0, 1.0), Vec3::UnitX(), 3.0});
  s.lines.push_back({Vec3(11.0, 4.0, 1.8), Vec3::UnitY(), 3.0});
  s.lines.push_back({Vec3(8.5, 2.0, -0.6), Vec3(1.0, 1.0, 0.0), 2.5});
  s.lines.push_back({Vec3(14.0, 4.0, 1.0), Vec3(0.0, 1.0, 1.0), 2.5});
  return s;
}

}  // namespace rigidcal
