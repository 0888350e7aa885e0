#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rigidcal/error.hpp"
#include "rigidcal/imu.hpp"
#include "rigidcal/io.hpp"
#include "rigidcal/signal_calib.hpp"
#include "rigidcal/sim.hpp"

namespace rigidcal::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "cannot create output directory '" + dir.string() + "': " + ec.message());
  }
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

ImuProcessorConfig processor_config(const PipelineConfig& c) {
  ImuProcessorConfig p;
  p.rest.tau = c.thresholds.rest_tau;
  p.rest.min_duration_s = c.thresholds.rest_min_duration_s;
  p.madgwick_beta = c.madgwick_beta;
  return p;
}

ObservabilityConfig observability_config(const PipelineConfig& c, const ProcessedImu& base) {
  ObservabilityConfig o;
  o.window_s = c.thresholds.window_s;
  o.threshold = c.thresholds.observability_threshold;
  if (!base.rest_windows.empty()) {
    o.covariance = base.biases.back().value.gyro_noise;
    o.omega_deadband = c.thresholds.omega_deadband_sigmas * std::sqrt(o.covariance.trace());
  }
  return o;
}

BiasTrace bias_trace(const std::string& frame, const ProcessedImu& p) {
  BiasTrace trace;
  trace.frame = frame;
  trace.rest_windows = p.rest_windows.size();
  std::int64_t next = p.biases.empty() ? 0 : p.biases.front().t_ns;
  for (const Stamped<BiasState>& b : p.biases) {
    if (b.t_ns < next) {
      continue;
    }
    trace.points.push_back({b.t_ns, b.value.sensor_gyro_bias(), b.value.accel_bias,
                            b.value.gyro_cov.trace()});
    next = b.t_ns + 1'000'000'000;
  }
  return trace;
}

FeatureConfig feature_config(const PipelineConfig& c, std::uint64_t salt) {
  FeatureConfig f;
  f.seed = c.seed * 0x9E3779B97F4A7C15ULL + salt;
  return f;
}

VerifyConfig verify_config(const PipelineConfig& c) {
  VerifyConfig v;
  v.tau_alpha = c.thresholds.plane_alpha;
  v.tau_delta = c.thresholds.plane_delta;
  return v;
}

PointCloud load_clouds(const std::vector<fs::path>& paths, const std::string& frame, const Box& box) {
  PointCloud merged{FrameId(frame), {}};
  for (const fs::path& p : paths) {
    const PointCloud c = read_cloud(p, FrameId(frame));
    merged.points.insert(merged.points.end(), c.points.begin(), c.points.end());
  }
  return box_filter(merged, box);
}

struct StageGuard {
  PairReport& report;
  std::string stage;
  bool deterministic;
  Stopwatch watch;

  ~StageGuard() { report.timings.push_back({stage, deterministic ? 0.0 : watch.seconds()}); }
};

// Point-cloud half for one sensor: ICP, line refinement, plane verification, retried once.
void align_clouds(const PipelineConfig& c, const SensorEntry& s, const RigidTransform& T_init,
                  const RigidTransform& T_imu, PairReport& report, bool deterministic) {
  PointCloud base_cloud, target_cloud;
  {
    StageGuard g{report, "load_clouds", deterministic, {}};
    base_cloud = load_clouds(c.base.clouds, FrameId::base().str(), c.box);
    target_cloud = load_clouds(s.clouds, s.frame, c.box);
  }

  const FrameId target(s.frame);
  const FrameId at_imu("B@imu"), at_icp("B@icp");
  RigidTransform seed = (T_imu * T_init).retagged(target, FrameId::base());

  for (int attempt = 1; attempt <= 2; ++attempt) {
    report.attempts = attempt;
    const std::string tag = attempt == 1 ? "" : "_retry";
    IcpResult icp;
    {
      StageGuard g{report, "icp" + tag, deterministic, {}};
      icp = icp_align(target_cloud, base_cloud, seed, c.icp);
    }
    const RigidTransform before_icp = (T_imu * T_init).retagged(target, at_imu);
    const RigidTransform T_gicp =
        (icp.T.retagged(target, at_icp) * before_icp.inverse()).retagged(at_imu, at_icp);

    FeatureSet base_features, target_features;
    {
      StageGuard g{report, "features" + tag, deterministic, {}};
      base_features = extract_features(base_cloud, feature_config(c, 2 * attempt));
      target_features = extract_features(target_cloud, feature_config(c, 2 * attempt + 1));
    }

    RigidTransform T_ref = RigidTransform::identity(at_icp, FrameId::base());
    {
      StageGuard g{report, "refine" + tag, deterministic, {}};
      std::vector<Feature> moved;
      for (const Feature& f : target_features.lines) {
        moved.push_back(transform_feature(f, icp.T));
      }
      const std::vector<MatchPair> pairs =
          match_features(base_features.lines, moved, c.thresholds.line_alpha, c.thresholds.line_delta);
      report.line_pairs = std::min(pairs.size(), c.feature_count);
      try {
        T_ref = refine_extrinsics(pairs, c.feature_count, at_icp, FrameId::base());
      } catch (const Error& e) {
        report.errors.push_back({"refine" + tag, std::string(to_string(e.code())), e.message()});
        spdlog::warn("line refinement skipped: {}", e.what());
      }
    }

    const RigidTransform T_final = compose_extrinsics(T_init, T_imu, T_gicp, T_ref);
    VerifyResult verdict;
    {
      StageGuard g{report, "verify" + tag, deterministic, {}};
      verdict = verify_extrinsics(base_features.planes, target_features.planes, T_final,
                                  verify_config(c));
    }
    report.T_hat_GICP = T_gicp;
    report.T_hat_Refined = T_ref;
    report.T_final = T_final;
    report.icp_rms = icp.rms;
    report.plane_pairs = verdict.pairs.size();
    report.verify_max_alpha_deg = rad2deg(verdict.max_alpha);
    report.verify_max_delta = verdict.max_delta;
    report.verification = to_string(verdict.status);
    spdlog::info("{} attempt {}: icp rms {:.4f} m, {} line pairs, verification {}", s.frame, attempt,
                 icp.rms, report.line_pairs, report.verification);
    if (verdict.status != VerifyStatus::kRejected) {
      return;
    }
    // Recompute the point-based alignment from the rejected estimate with fresh sampling.
    seed = T_final.retagged(target, FrameId::base());
  }
}

PairReport calibrate_sensor(const PipelineConfig& c, const SensorEntry& s, const ProcessedImu& base_imu,
                            const RunOptions& options, CalibrationReport& out) {
  PairReport report;
  report.sensor = s.frame;
  const FrameId target(s.frame);
  const RigidTransform T_init = s.T_init.retagged(target, FrameId("B@init"));
  report.T_init = T_init;

  ProcessedImu target_imu;
  try {
    StageGuard g{report, "imu_pipeline", options.deterministic, {}};
    const ImuSeries raw = read_imu_csv(s.imu_csv, FrameId(s.imu_frame));
    target_imu = ImuProcessor(processor_config(c)).process(raw);
    out.bias_traces.push_back(bias_trace(s.imu_frame, target_imu));
  } catch (const Error& e) {
    report.status = "failed";
    report.errors.push_back({"imu_pipeline", std::string(to_string(e.code())), e.message()});
    return report;
  }

  // IMU pair -> lidar extrinsics: B <- IB <- I <- L.
  const RigidTransform lidar_from_imu = s.T_lidar_imu.retagged(FrameId(s.imu_frame), target);
  const RigidTransform base_from_base_imu =
      c.base.T_lidar_imu.retagged(FrameId(c.base.imu_frame), FrameId::base());
  const RigidTransform init_imu =
      base_from_base_imu.inverse() * s.T_init.retagged(target, FrameId::base()) * lidar_from_imu;

  ImuExtrinsicsEstimate est;
  try {
    StageGuard g{report, "signal_calib", options.deterministic, {}};
    ImuCalibConfig cfg;
    cfg.resample_rate_hz = c.resample_rate_hz;
    cfg.observability = observability_config(c, base_imu);
    est = calibrate_imu_pair(base_imu.specific_force, target_imu.specific_force,
                             TranslationBounds::around(init_imu.translation, s.bounds_half_width),
                             init_imu.translation, cfg);
  } catch (const Error& e) {
    report.status = e.code() == ErrorCode::kInsufficientExcitation ? "insufficient_excitation" : "failed";
    report.errors.push_back({"signal_calib", std::string(to_string(e.code())), e.message()});
    if (e.code() == ErrorCode::kInsufficientExcitation) {
      ImuCalibConfig cfg;
      cfg.observability = observability_config(c, base_imu);
      std::vector<TimedRate> rates;
      for (const ImuSample& smp : base_imu.specific_force.samples) {
        rates.push_back({smp.t_ns, smp.omega});
      }
      report.segments = segment_select(rates, cfg.observability);
    }
    spdlog::warn("{}: {}", s.frame, e.what());
    return report;
  }
  report.segments = est.segments;
  report.imu_rotation_rms = est.rotation_residual_rms;
  report.imu_translation_rms = est.translation_residual_rms;
  report.imu_samples_used = est.n_samples_used;

  const RigidTransform lidar_estimate =
      base_from_base_imu * est.T_hat * lidar_from_imu.inverse();
  const RigidTransform T_imu =
      (lidar_estimate * T_init.retagged(target, FrameId::base()).inverse())
          .retagged(FrameId("B@init"), FrameId("B@imu"));
  report.T_hat_IMU = T_imu;
  spdlog::info("{}: IMU stage used {} samples, rotation residual {:.5f} rad/s", s.frame,
               est.n_samples_used, est.rotation_residual_rms);

  if (options.imu_only) {
    report.status = "imu_only";
    report.T_final = (T_imu * T_init).retagged(target, FrameId::base());
    return report;
  }

  try {
    align_clouds(c, s, T_init, T_imu, report, options.deterministic);
    report.status = "calibrated";
  } catch (const Error& e) {
    report.status = "failed";
    report.errors.push_back({"cloud_calib", std::string(to_string(e.code())), e.message()});
    spdlog::warn("{}: {}", s.frame, e.what());
  }
  return report;
}

}  // namespace

std::vector<fs::path> cmd_simulate(const PipelineConfig& config, const fs::path& output_dir) {
  ensure_dir(output_dir);
  const SimulationSettings& sim = config.simulation;
  const std::vector<PoseSample> traj = gen_trajectory(sim.trajectory, config.seed);
  const double gv = sim.gyro_noise_std * sim.gyro_noise_std;
  const double av = sim.accel_noise_std * sim.accel_noise_std;

  SensorMountSpec base_mount;
  base_mount.T_BS = RigidTransform::identity(FrameId(config.base.imu_frame), FrameId::base());
  base_mount.gyro_bias = Vec3(-0.5, 0.5, 0.25) * sim.gyro_bias;
  base_mount.accel_bias = Vec3(0.5, -0.5, 0.5) * sim.accel_bias;
  base_mount.gyro_noise = Mat3::Identity() * gv;
  base_mount.accel_noise = Mat3::Identity() * av;

  const SensorEntry& target = config.sensors.front();
  SensorMountSpec target_mount = base_mount;
  target_mount.T_BS = sim.T_base_target_imu.retagged(FrameId(target.imu_frame), FrameId::base());
  target_mount.gyro_bias = Vec3::Constant(sim.gyro_bias);
  target_mount.accel_bias = Vec3::Constant(sim.accel_bias);

  std::vector<fs::path> files;
  auto imu_path = output_dir / ("imu_" + config.base.imu_frame + ".csv");
  write_imu_csv(imu_path, synth_imu(traj, base_mount, config.seed));
  files.push_back(imu_path);
  imu_path = output_dir / ("imu_" + target.imu_frame + ".csv");
  write_imu_csv(imu_path, synth_imu(traj, target_mount, config.seed));
  files.push_back(imu_path);

  SceneSpec scene = calibration_scene();
  scene.noise_std = sim.cloud_noise_std;
  const RigidTransform truth = simulated_lidar_truth(sim).retagged(FrameId(target.frame), FrameId::base());
  auto cloud_path = output_dir / "cloud_B.ply";
  write_ply(cloud_path, synth_scene(scene, RigidTransform::identity(FrameId::base(), FrameId::base()),
                                    config.seed));
  files.push_back(cloud_path);
  cloud_path = output_dir / ("cloud_" + target.frame + ".ply");
  write_ply(cloud_path, synth_scene(scene, truth, config.seed));
  files.push_back(cloud_path);

  const fs::path truth_path = output_dir / "truth.json";
  write_json(truth_path, {{"seed", config.seed},
                          {"trajectory", to_string(sim.trajectory.kind)},
                          {"T_lidar", transform_to_json(truth)},
                          {"T_imu", transform_to_json(target_mount.T_BS.retagged(
                                        FrameId(target.imu_frame), FrameId(config.base.imu_frame)))}});
  files.push_back(truth_path);

  PipelineConfig out = config;
  out.base.imu_csv = "imu_" + config.base.imu_frame + ".csv";
  out.base.clouds = {"cloud_B.ply"};
  out.sensors.resize(1);
  out.sensors.front().imu_csv = "imu_" + target.imu_frame + ".csv";
  out.sensors.front().clouds = {"cloud_" + target.frame + ".ply"};
  out.sensors.front().T_init = perturbed_init(sim).retagged(FrameId(target.frame), FrameId::base());
  out.sensors.front().T_lidar_imu =
      RigidTransform{Mat3::Identity(), -sim.lidar_offset, FrameId(target.imu_frame), FrameId(target.frame)};
  const fs::path config_path = output_dir / "config.json";
  write_json(config_path, config_to_json(out));
  files.push_back(config_path);
  return files;
}

CalibrateOutput cmd_calibrate(const PipelineConfig& config, const RunOptions& options) {
  CalibrateOutput out;
  CalibrationReport& report = out.report;
  report.version = kVersion;
  report.generated_at = options.deterministic ? "" : utc_now();
  report.seed = config.seed;

  ProcessedImu base_imu;
  const ImuSeries raw = read_imu_csv(config.base.imu_csv, FrameId(config.base.imu_frame));
  base_imu = ImuProcessor(processor_config(config)).process(raw);
  report.bias_traces.push_back(bias_trace(config.base.imu_frame, base_imu));
  spdlog::info("base IMU: {} samples, {} rest windows", raw.size(), base_imu.rest_windows.size());

  for (const SensorEntry& s : config.sensors) {
    report.pairs.push_back(calibrate_sensor(config, s, base_imu, options, report));
  }

  for (const PairReport& p : report.pairs) {
    int code = kExitOk;
    if (p.status == "insufficient_excitation" || p.status == "failed" || p.verification == "rejected") {
      code = kExitGateFailed;
    } else if (p.status == "calibrated" && p.verification == "no_planes") {
      code = kExitInconclusive;
    }
    out.exit_code = std::max(out.exit_code, code == kExitInconclusive && out.exit_code == kExitGateFailed
                                                ? kExitGateFailed
                                                : code);
  }
  return out;
}

ObservabilityOutput cmd_observability(const fs::path& imu_csv, const PipelineConfig& config) {
  const ImuSeries raw = read_imu_csv(imu_csv, FrameId(config.base.imu_frame));
  if (raw.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "IMU file '" + imu_csv.string() + "' has no samples");
  }
  const ProcessedImu processed = ImuProcessor(processor_config(config)).process(raw);
  std::vector<TimedRate> rates;
  rates.reserve(processed.compensated.size());
  for (const ImuSample& s : processed.compensated.samples) {
    rates.push_back({s.t_ns, s.omega});
  }
  ObservabilityOutput out;
  out.segments = segment_select(rates, observability_config(config, processed));
  const bool any = std::any_of(out.segments.begin(), out.segments.end(),
                               [](const SegmentReport& s) { return s.accepted; });
  out.exit_code = any ? kExitOk : kExitGateFailed;
  return out;
}

VerifyOutput cmd_verify(const PointCloud& base_cloud, const PointCloud& target_cloud,
                        const RigidTransform& T_target_to_base, const PipelineConfig& config) {
  const PointCloud a = box_filter(base_cloud, config.box);
  const PointCloud b = box_filter(target_cloud, config.box);
  const FeatureSet fa = extract_features(a, feature_config(config, 0));
  const FeatureSet fb = extract_features(b, feature_config(config, 1));
  VerifyOutput out;
  out.base_planes = fa.planes.size();
  out.target_planes = fb.planes.size();
  out.result = verify_extrinsics(fa.planes, fb.planes, T_target_to_base, verify_config(config));
  switch (out.result.status) {
    case VerifyStatus::kVerified: out.exit_code = kExitOk; break;
    case VerifyStatus::kRejected: out.exit_code = kExitGateFailed; break;
    case VerifyStatus::kNoPlanes: out.exit_code = kExitInconclusive; break;
  }
  return out;
}

RigidTransform load_extrinsics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open extrinsics '" + path.string() + "'");
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  if (j.contains("T_lidar")) {
    return transform_from_json(j.at("T_lidar"));
  }
  if (j.contains("T_final")) {
    return transform_from_json(j.at("T_final"));
  }
  return transform_from_json(j);
}

void write_segments_csv(const fs::path& path, const std::vector<SegmentReport>& segments) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  }
  out.precision(10);
  out << "t_start_s,t_end_s,sigma1,sigma2,sigma3,accepted\n";
  for (const SegmentReport& s : segments) {
    out << 1e-9 * static_cast<double>(s.t_start_ns) << ',' << 1e-9 * static_cast<double>(s.t_end_ns)
        << ',' << s.singular_values(0) << ',' << s.singular_values(1) << ',' << s.singular_values(2)
        << ',' << (s.accepted ? 1 : 0) << '\n';
  }
}

}  // namespace rigidcal::app
