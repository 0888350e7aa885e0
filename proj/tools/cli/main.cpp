#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "rigidcal/error.hpp"
#include "rigidcal/io.hpp"

namespace fs = std::filesystem;
using namespace rigidcal;
using namespace rigidcal::app;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("rigidcal");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("RIGIDCAL_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept "off" when asked for explicitly.
    if (level != spdlog::level::off || std::string_view(env) == "off") {
      spdlog::set_level(level);
    } else {
      spdlog::warn("ignoring unknown RIGIDCAL_LOG level '{}'", env);
    }
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  }
  out << j.dump(2) << '\n';
}

bool is_usage_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kPreconditionViolated:
    case ErrorCode::kFrameMismatch:
    case ErrorCode::kIo:
    case ErrorCode::kParse:
      return true;
    default:
      return false;
  }
}

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool imu_only = false;
  bool deterministic = false;
  std::string output;
  std::string imu_csv;
  std::string extrinsics;
  std::string report_path;
};

PipelineConfig resolve_config(const Options& o) {
  PipelineConfig c = o.config_path.empty() ? default_config() : load_config(o.config_path);
  if (o.seed) {
    c.seed = *o.seed;
  }
  return c;
}

int run_simulate(const Options& o) {
  PipelineConfig c = resolve_config(o);
  c.validate(false, false);
  const fs::path out = o.output.empty() ? fs::path("sim") : fs::path(o.output);
  for (const fs::path& p : cmd_simulate(c, out)) {
    std::cout << p.string() << '\n';
  }
  return kExitOk;
}

int run_calibrate(const Options& o) {
  if (o.config_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "calibrate needs --config");
  }
  PipelineConfig c = resolve_config(o);
  c.validate(true, !o.imu_only);
  const CalibrateOutput result = cmd_calibrate(c, RunOptions{o.imu_only, o.deterministic});

  const fs::path out = o.output.empty() ? fs::path(".") : fs::path(o.output);
  fs::create_directories(out);
  write_json(out / "report.json", report_to_json(result.report));
  for (const PairReport& p : result.report.pairs) {
    if (p.T_final) {
      nlohmann::json j = transform_to_json(*p.T_final);
      j["status"] = p.status;
      j["verification"] = p.verification;
      write_json(out / ("extrinsics_" + p.sensor + ".json"), j);
    }
  }
  std::cout << summarize(result.report);
  return result.exit_code;
}

int run_observability(const Options& o) {
  const PipelineConfig c = resolve_config(o);
  const fs::path imu = o.imu_csv.empty() ? c.base.imu_csv : fs::path(o.imu_csv);
  const ObservabilityOutput result = cmd_observability(imu, c);
  std::size_t accepted = 0;
  for (const SegmentReport& s : result.segments) {
    accepted += s.accepted ? 1 : 0;
    std::cout << fmt::format("{:9.2f} {:9.2f}  sv=[{:.3e} {:.3e} {:.3e}]  {}{}\n",
                             1e-9 * static_cast<double>(s.t_start_ns),
                             1e-9 * static_cast<double>(s.t_end_ns), s.singular_values(0),
                             s.singular_values(1), s.singular_values(2),
                             s.accepted ? "accepted" : "rejected", s.complete ? "" : " (partial)");
  }
  std::cout << accepted << " of " << result.segments.size() << " windows accepted\n";
  if (!o.output.empty()) {
    fs::create_directories(o.output);
    write_segments_csv(fs::path(o.output) / "segments.csv", result.segments);
    nlohmann::json j = nlohmann::json::array();
    for (const SegmentReport& s : result.segments) {
      j.push_back(segment_to_json(s));
    }
    write_json(fs::path(o.output) / "segments.json", j);
  }
  return result.exit_code;
}

int run_verify(const Options& o) {
  if (o.config_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "verify needs --config");
  }
  const PipelineConfig c = resolve_config(o);
  c.validate(true, true);
  const SensorEntry& s = c.sensors.front();
  const RigidTransform T = o.extrinsics.empty()
                               ? s.T_init.retagged(FrameId(s.frame), FrameId::base())
                               : load_extrinsics(o.extrinsics).retagged(FrameId(s.frame), FrameId::base());

  PointCloud base{FrameId::base(), {}}, target{FrameId(s.frame), {}};
  for (const fs::path& p : c.base.clouds) {
    const PointCloud part = read_cloud(p, base.frame);
    base.points.insert(base.points.end(), part.points.begin(), part.points.end());
  }
  for (const fs::path& p : s.clouds) {
    const PointCloud part = read_cloud(p, target.frame);
    target.points.insert(target.points.end(), part.points.begin(), part.points.end());
  }
  const VerifyOutput result = cmd_verify(base, target, T, c);
  std::cout << fmt::format("{}: {} plane pairs ({} base, {} target planes), max angle {:.3f} deg, "
                           "max offset {:.3f} m\n",
                           to_string(result.result.status), result.result.pairs.size(),
                           result.base_planes, result.target_planes,
                           rad2deg(result.result.max_alpha), result.result.max_delta);
  if (!o.output.empty()) {
    fs::create_directories(o.output);
    write_json(fs::path(o.output) / "verify.json",
               {{"status", to_string(result.result.status)},
                {"plane_pairs", result.result.pairs.size()},
                {"max_alpha_deg", rad2deg(result.result.max_alpha)},
                {"max_delta", result.result.max_delta}});
  }
  return result.exit_code;
}

int run_report(const Options& o) {
  std::ifstream in(o.report_path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open report '" + o.report_path + "'");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, o.report_path + ": " + e.what());
  }
  std::cout << summarize(report_from_json(j));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Extrinsic calibration of rigidly mounted lidar/IMU sensor pairs"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config_path, "JSON pipeline configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Seed for simulation and feature sampling");
  app.add_flag("--imu-only", o.imu_only, "Stop after the IMU-based initialization");
  app.add_flag("--deterministic", o.deterministic, "Zero timings and omit the timestamp in reports");
  app.add_option("--output", o.output, "Output directory");

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset and matching config");
  auto* calibrate = app.add_subcommand("calibrate", "Run the full calibration pipeline");
  auto* observability = app.add_subcommand("observability", "Per-window rotation observability");
  observability->add_option("imu_csv", o.imu_csv, "IMU CSV (defaults to the config's base IMU)");
  auto* verify = app.add_subcommand("verify", "Check extrinsics against plane features");
  verify->add_option("--extrinsics", o.extrinsics, "Extrinsics JSON (defaults to the config's T_init)");
  auto* report = app.add_subcommand("report", "Summarize a calibration report");
  report->add_option("report_json", o.report_path, "report.json written by calibrate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) return run_simulate(o);
    if (calibrate->parsed()) return run_calibrate(o);
    if (observability->parsed()) return run_observability(o);
    if (verify->parsed()) return run_verify(o);
    if (report->parsed()) return run_report(o);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return is_usage_error(e.code()) ? kExitUsage : kExitGateFailed;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
