#include "config.hpp"

#include <fstream>

#include "rigidcal/error.hpp"

namespace rigidcal::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
void read(const json& j, const char* key, T& value) {
  if (j.contains(key)) {
    value = j.at(key).get<T>();
  }
}

void read_deg(const json& j, const char* key, double& radians) {
  if (j.contains(key)) {
    radians = deg2rad(j.at(key).get<double>());
  }
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::kParse, "expected a 3-element array, got " + j.dump());
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void read_vec(const json& j, const char* key, Vec3& v) {
  if (j.contains(key)) {
    v = vec_from(j.at(key));
  }
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

SensorEntry sensor_from_json(const json& j, SensorEntry s, const fs::path& base_dir) {
  read(j, "frame", s.frame);
  read(j, "imu_frame", s.imu_frame);
  if (j.contains("imu_csv")) {
    s.imu_csv = resolve(base_dir, j.at("imu_csv").get<std::string>());
  }
  if (j.contains("clouds")) {
    s.clouds.clear();
    for (const json& c : j.at("clouds")) {
      s.clouds.push_back(resolve(base_dir, c.get<std::string>()));
    }
  }
  if (j.contains("T_lidar_imu")) {
    s.T_lidar_imu = transform_from_json(j.at("T_lidar_imu"));
  }
  if (j.contains("T_init")) {
    s.T_init = transform_from_json(j.at("T_init"));
  }
  read(j, "bounds_half_width", s.bounds_half_width);
  return s;
}

json sensor_to_json(const SensorEntry& s) {
  json clouds = json::array();
  for (const fs::path& c : s.clouds) {
    clouds.push_back(c.string());
  }
  return {{"frame", s.frame},
          {"imu_frame", s.imu_frame},
          {"imu_csv", s.imu_csv.string()},
          {"clouds", clouds},
          {"T_lidar_imu", transform_to_json(s.T_lidar_imu)},
          {"T_init", transform_to_json(s.T_init)},
          {"bounds_half_width", s.bounds_half_width}};
}

}  // namespace

RigidTransform simulated_lidar_truth(const SimulationSettings& sim) {
  const RigidTransform lidar_in_imu{Mat3::Identity(), sim.lidar_offset, FrameId("L1"), FrameId("I1")};
  const RigidTransform base_imu_to_base = RigidTransform::identity(FrameId("IB"), FrameId::base());
  return base_imu_to_base * sim.T_base_target_imu * lidar_in_imu;
}

RigidTransform perturbed_init(const SimulationSettings& sim) {
  const RigidTransform truth = simulated_lidar_truth(sim);
  const Vec3& e = sim.init_rotation_error_deg;
  return {rotation_from_rpy(deg2rad(e.x()), deg2rad(e.y()), deg2rad(e.z())) * truth.rotation,
          truth.translation + sim.init_translation_error, truth.from, truth.to};
}

TrajectorySpec preset_trajectory(const std::string& preset) {
  TrajectorySpec spec;
  if (preset == "figure8") {
    // The vehicle starts parked: 5 s of rest, then the figure-eight.
    spec.kind = TrajectoryKind::kRestThenDrive;
  } else {
    spec.kind = trajectory_kind_from_string(preset);
  }
  spec.duration_s = 60.0;
  return spec;
}

PipelineConfig default_config() {
  PipelineConfig c;
  c.simulation.trajectory = preset_trajectory(c.simulation.preset);
  c.simulation.T_base_target_imu =
      RigidTransform{rot_z(deg2rad(45.0)), Vec3(0.23, 0.075, 0.0), FrameId("I1"), FrameId("IB")};

  c.base.frame = "B";
  c.base.imu_frame = "IB";
  c.base.imu_csv = "imu_IB.csv";
  c.base.clouds = {"cloud_B.ply"};
  c.base.T_lidar_imu = RigidTransform::identity(FrameId("IB"), FrameId::base());
  c.base.T_init = RigidTransform::identity(FrameId::base(), FrameId::base());

  SensorEntry target;
  target.frame = "L1";
  target.imu_frame = "I1";
  target.imu_csv = "imu_I1.csv";
  target.clouds = {"cloud_L1.ply"};
  target.T_lidar_imu = RigidTransform{Mat3::Identity(), -c.simulation.lidar_offset, FrameId("I1"),
                                      FrameId("L1")};
  target.T_init = perturbed_init(c.simulation);
  c.sensors.push_back(target);
  return c;
}

void PipelineConfig::validate(bool check_files, bool need_clouds) const {
  const Thresholds& t = thresholds;
  for (double v : {t.rest_tau, t.rest_min_duration_s, t.line_alpha, t.line_delta, t.plane_alpha,
                   t.plane_delta, t.observability_threshold, t.window_s, resample_rate_hz}) {
    if (!(v > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "all thresholds must be positive");
    }
  }
  if (feature_count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "feature_count must be positive");
  }
  if (sensors.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "config lists no sensors besides the base");
  }
  if (!check_files) {
    return;
  }
  auto require = [](const fs::path& p) {
    if (!fs::exists(p)) {
      throw Error(ErrorCode::kIo, "missing input file '" + p.string() + "'");
    }
  };
  for (const SensorEntry* s : {&base}) {
    require(s->imu_csv);
  }
  for (const SensorEntry& s : sensors) {
    require(s.imu_csv);
  }
  if (need_clouds) {
    for (const fs::path& p : base.clouds) require(p);
    for (const SensorEntry& s : sensors) {
      for (const fs::path& p : s.clouds) require(p);
    }
  }
}

json transform_to_json(const RigidTransform& T) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    rows.push_back(json::array({T.rotation(r, 0), T.rotation(r, 1), T.rotation(r, 2)}));
  }
  const Vec3 rpy = rpy_from_rotation(T.rotation);
  return {{"from", T.from.str()},
          {"to", T.to.str()},
          {"rotation", rows},
          {"translation", vec_json(T.translation)},
          {"rpy_deg", vec_json(rpy * (180.0 / kPi))}};
}

RigidTransform transform_from_json(const json& j) {
  RigidTransform T;
  T.from = FrameId(j.value("from", std::string()));
  T.to = FrameId(j.value("to", std::string()));
  if (j.contains("rotation")) {
    const json& rows = j.at("rotation");
    if (!rows.is_array() || rows.size() != 3) {
      throw Error(ErrorCode::kParse, "rotation must be 3 rows");
    }
    for (int r = 0; r < 3; ++r) {
      T.rotation.row(r) = vec_from(rows[static_cast<std::size_t>(r)]).transpose();
    }
    if (!is_rotation(T.rotation, 1e-6)) {
      throw Error(ErrorCode::kParse, "rotation matrix is not orthonormal");
    }
  } else if (j.contains("quaternion")) {
    const json& q = j.at("quaternion");
    if (!q.is_array() || q.size() != 4) {
      throw Error(ErrorCode::kParse, "quaternion must be [w, x, y, z]");
    }
    T.rotation = Quaternion(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                            q[3].get<double>())
                     .normalized()
                     .to_matrix();
  } else if (j.contains("rpy_deg")) {
    const Vec3 rpy = vec_from(j.at("rpy_deg")) * (kPi / 180.0);
    T.rotation = rotation_from_rpy(rpy.x(), rpy.y(), rpy.z());
  }
  if (j.contains("translation")) {
    T.translation = vec_from(j.at("translation"));
  }
  return T;
}

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
  PipelineConfig c = default_config();
  read(j, "seed", c.seed);
  read(j, "feature_count", c.feature_count);
  read(j, "resample_rate_hz", c.resample_rate_hz);
  read(j, "madgwick_beta", c.madgwick_beta);

  if (j.contains("thresholds")) {
    const json& t = j.at("thresholds");
    read(t, "rest_tau", c.thresholds.rest_tau);
    read(t, "rest_min_duration_s", c.thresholds.rest_min_duration_s);
    read_deg(t, "line_alpha_deg", c.thresholds.line_alpha);
    read(t, "line_delta", c.thresholds.line_delta);
    read_deg(t, "plane_alpha_deg", c.thresholds.plane_alpha);
    read(t, "plane_delta", c.thresholds.plane_delta);
    read(t, "observability_threshold", c.thresholds.observability_threshold);
    read(t, "window_s", c.thresholds.window_s);
    read(t, "omega_deadband_sigmas", c.thresholds.omega_deadband_sigmas);
  }
  if (j.contains("box")) {
    read_vec(j.at("box"), "min", c.box.min);
    read_vec(j.at("box"), "max", c.box.max);
  }
  if (j.contains("icp")) {
    const json& i = j.at("icp");
    read(i, "voxel", c.icp.voxel);
    read(i, "max_correspondence", c.icp.max_correspondence);
    read(i, "max_iterations", c.icp.max_iterations);
    read(i, "tolerance", c.icp.tolerance);
  }
  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    SimulationSettings& sim = c.simulation;
    if (s.contains("preset")) {
      sim.preset = s.at("preset").get<std::string>();
      sim.trajectory = preset_trajectory(sim.preset);
    }
    read(s, "duration_s", sim.trajectory.duration_s);
    read(s, "rate_hz", sim.trajectory.rate_hz);
    read(s, "gyro_noise_std", sim.gyro_noise_std);
    read(s, "accel_noise_std", sim.accel_noise_std);
    read(s, "gyro_bias", sim.gyro_bias);
    read(s, "accel_bias", sim.accel_bias);
    read(s, "cloud_noise_std", sim.cloud_noise_std);
    read_vec(s, "lidar_offset", sim.lidar_offset);
    read_vec(s, "init_translation_error", sim.init_translation_error);
    read_vec(s, "init_rotation_error_deg", sim.init_rotation_error_deg);
    if (s.contains("T_base_target_imu")) {
      sim.T_base_target_imu = transform_from_json(s.at("T_base_target_imu"));
    }
  }
  if (j.contains("base")) {
    c.base = sensor_from_json(j.at("base"), c.base, base_dir);
  } else {
    c.base = sensor_from_json(json::object(), c.base, base_dir);
    c.base.imu_csv = resolve(base_dir, c.base.imu_csv.string());
    for (fs::path& p : c.base.clouds) p = resolve(base_dir, p.string());
  }
  if (j.contains("sensors")) {
    const SensorEntry defaults = c.sensors.front();
    c.sensors.clear();
    for (const json& s : j.at("sensors")) {
      c.sensors.push_back(sensor_from_json(s, defaults, base_dir));
    }
  } else {
    for (SensorEntry& s : c.sensors) {
      s.imu_csv = resolve(base_dir, s.imu_csv.string());
      for (fs::path& p : s.clouds) p = resolve(base_dir, p.string());
    }
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open config '" + path.string() + "'");
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json config_to_json(const PipelineConfig& c) {
  json sensors = json::array();
  for (const SensorEntry& s : c.sensors) {
    sensors.push_back(sensor_to_json(s));
  }
  const Thresholds& t = c.thresholds;
  const SimulationSettings& sim = c.simulation;
  return {
      {"seed", c.seed},
      {"feature_count", c.feature_count},
      {"resample_rate_hz", c.resample_rate_hz},
      {"madgwick_beta", c.madgwick_beta},
      {"thresholds",
       {{"rest_tau", t.rest_tau},
        {"rest_min_duration_s", t.rest_min_duration_s},
        {"line_alpha_deg", rad2deg(t.line_alpha)},
        {"line_delta", t.line_delta},
        {"plane_alpha_deg", rad2deg(t.plane_alpha)},
        {"plane_delta", t.plane_delta},
        {"observability_threshold", t.observability_threshold},
        {"window_s", t.window_s},
        {"omega_deadband_sigmas", t.omega_deadband_sigmas}}},
      {"box", {{"min", vec_json(c.box.min)}, {"max", vec_json(c.box.max)}}},
      {"icp",
       {{"voxel", c.icp.voxel},
        {"max_correspondence", c.icp.max_correspondence},
        {"max_iterations", c.icp.max_iterations},
        {"tolerance", c.icp.tolerance}}},
      {"simulation",
       {{"preset", sim.preset},
        {"duration_s", sim.trajectory.duration_s},
        {"rate_hz", sim.trajectory.rate_hz},
        {"gyro_noise_std", sim.gyro_noise_std},
        {"accel_noise_std", sim.accel_noise_std},
        {"gyro_bias", sim.gyro_bias},
        {"accel_bias", sim.accel_bias},
        {"cloud_noise_std", sim.cloud_noise_std},
        {"lidar_offset", vec_json(sim.lidar_offset)},
        {"init_translation_error", vec_json(sim.init_translation_error)},
        {"init_rotation_error_deg", vec_json(sim.init_rotation_error_deg)},
        {"T_base_target_imu", transform_to_json(sim.T_base_target_imu)}}},
      {"base", sensor_to_json(c.base)},
      {"sensors", sensors},
  };
}

}  // namespace rigidcal::app
