#include "report.hpp"

#include <sstream>

#include "rigidcal/error.hpp"

namespace rigidcal::app {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json mat_json(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
  }
  return rows;
}

Mat3 mat_from(const json& j) {
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    m.row(r) = vec_from(j.at(static_cast<std::size_t>(r))).transpose();
  }
  return m;
}

// Exact transform encoding: no orthonormality re-check, rotation entries as written.
json exact_transform(const RigidTransform& T) {
  return {{"from", T.from.str()},
          {"to", T.to.str()},
          {"rotation", mat_json(T.rotation)},
          {"translation", vec_json(T.translation)},
          {"rpy_deg", vec_json(rpy_from_rotation(T.rotation) * (180.0 / kPi))}};
}

RigidTransform exact_transform_from(const json& j) {
  return {mat_from(j.at("rotation")), vec_from(j.at("translation")),
          FrameId(j.at("from").get<std::string>()), FrameId(j.at("to").get<std::string>())};
}

void put_optional(json& j, const char* key, const std::optional<RigidTransform>& T) {
  j[key] = T ? exact_transform(*T) : json(nullptr);
}

std::optional<RigidTransform> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::nullopt;
  }
  return exact_transform_from(j.at(key));
}

json pair_to_json(const PairReport& p) {
  json j;
  j["sensor"] = p.sensor;
  j["status"] = p.status;
  put_optional(j, "T_init", p.T_init);
  put_optional(j, "T_hat_IMU", p.T_hat_IMU);
  put_optional(j, "T_hat_GICP", p.T_hat_GICP);
  put_optional(j, "T_hat_Refined", p.T_hat_Refined);
  put_optional(j, "T_final", p.T_final);
  j["verification"] = p.verification;
  j["attempts"] = p.attempts;
  json segs = json::array();
  for (const SegmentReport& s : p.segments) {
    segs.push_back(segment_to_json(s));
  }
  j["segments"] = segs;
  j["residuals"] = {{"imu_rotation_rms", p.imu_rotation_rms},
                    {"imu_translation_rms", p.imu_translation_rms},
                    {"imu_samples_used", p.imu_samples_used},
                    {"icp_rms", p.icp_rms},
                    {"line_pairs", p.line_pairs},
                    {"plane_pairs", p.plane_pairs},
                    {"verify_max_alpha_deg", p.verify_max_alpha_deg},
                    {"verify_max_delta", p.verify_max_delta}};
  json errors = json::array();
  for (const StageError& e : p.errors) {
    errors.push_back({{"stage", e.stage}, {"code", e.code}, {"message", e.message}});
  }
  j["errors"] = errors;
  json timings = json::array();
  for (const StageTiming& t : p.timings) {
    timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  }
  j["timings"] = timings;
  return j;
}

PairReport pair_from_json(const json& j) {
  PairReport p;
  p.sensor = j.at("sensor").get<std::string>();
  p.status = j.at("status").get<std::string>();
  p.T_init = get_optional(j, "T_init");
  p.T_hat_IMU = get_optional(j, "T_hat_IMU");
  p.T_hat_GICP = get_optional(j, "T_hat_GICP");
  p.T_hat_Refined = get_optional(j, "T_hat_Refined");
  p.T_final = get_optional(j, "T_final");
  p.verification = j.at("verification").get<std::string>();
  p.attempts = j.at("attempts").get<int>();
  for (const json& s : j.at("segments")) {
    p.segments.push_back(segment_from_json(s));
  }
  const json& r = j.at("residuals");
  p.imu_rotation_rms = r.at("imu_rotation_rms").get<double>();
  p.imu_translation_rms = r.at("imu_translation_rms").get<double>();
  p.imu_samples_used = r.at("imu_samples_used").get<std::size_t>();
  p.icp_rms = r.at("icp_rms").get<double>();
  p.line_pairs = r.at("line_pairs").get<std::size_t>();
  p.plane_pairs = r.at("plane_pairs").get<std::size_t>();
  p.verify_max_alpha_deg = r.at("verify_max_alpha_deg").get<double>();
  p.verify_max_delta = r.at("verify_max_delta").get<double>();
  for (const json& e : j.at("errors")) {
    p.errors.push_back({e.at("stage").get<std::string>(), e.at("code").get<std::string>(),
                        e.at("message").get<std::string>()});
  }
  for (const json& t : j.at("timings")) {
    p.timings.push_back({t.at("stage").get<std::string>(), t.at("seconds").get<double>()});
  }
  return p;
}

}  // namespace

json segment_to_json(const SegmentReport& s) {
  return {{"t_start_ns", s.t_start_ns},
          {"t_end_ns", s.t_end_ns},
          {"fim", mat_json(s.fim)},
          {"singular_values", vec_json(s.singular_values)},
          {"accepted", s.accepted},
          {"complete", s.complete},
          {"n_samples", s.n_samples}};
}

SegmentReport segment_from_json(const json& j) {
  SegmentReport s;
  s.t_start_ns = j.at("t_start_ns").get<std::int64_t>();
  s.t_end_ns = j.at("t_end_ns").get<std::int64_t>();
  s.fim = mat_from(j.at("fim"));
  s.singular_values = vec_from(j.at("singular_values"));
  s.accepted = j.at("accepted").get<bool>();
  s.complete = j.at("complete").get<bool>();
  s.n_samples = j.at("n_samples").get<std::size_t>();
  return s;
}

json report_to_json(const CalibrationReport& report) {
  json pairs = json::array();
  for (const PairReport& p : report.pairs) {
    pairs.push_back(pair_to_json(p));
  }
  json traces = json::array();
  for (const BiasTrace& t : report.bias_traces) {
    json points = json::array();
    for (const BiasTracePoint& b : t.points) {
      points.push_back({{"t_ns", b.t_ns},
                        {"gyro_bias", vec_json(b.gyro_bias)},
                        {"accel_bias", vec_json(b.accel_bias)},
                        {"gyro_cov_trace", b.gyro_cov_trace}});
    }
    traces.push_back({{"frame", t.frame}, {"rest_windows", t.rest_windows}, {"points", points}});
  }
  return {{"version", report.version},
          {"generated_at", report.generated_at},
          {"seed", report.seed},
          {"pairs", pairs},
          {"bias_traces", traces}};
}

CalibrationReport report_from_json(const json& j) {
  try {
    CalibrationReport r;
    r.version = j.at("version").get<std::string>();
    r.generated_at = j.at("generated_at").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const json& p : j.at("pairs")) {
      r.pairs.push_back(pair_from_json(p));
    }
    for (const json& t : j.at("bias_traces")) {
      BiasTrace trace;
      trace.frame = t.at("frame").get<std::string>();
      trace.rest_windows = t.at("rest_windows").get<std::size_t>();
      for (const json& b : t.at("points")) {
        trace.points.push_back({b.at("t_ns").get<std::int64_t>(), vec_from(b.at("gyro_bias")),
                                vec_from(b.at("accel_bias")), b.at("gyro_cov_trace").get<double>()});
      }
      r.bias_traces.push_back(std::move(trace));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed report: ") + e.what());
  }
}

std::string summarize(const CalibrationReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "rigidcal report " << report.version << " (seed " << report.seed << ")\n";
  for (const PairReport& p : report.pairs) {
    std::size_t accepted = 0;
    for (const SegmentReport& s : p.segments) {
      accepted += s.accepted ? 1 : 0;
    }
    out << "sensor " << p.sensor << ": " << p.status << ", verification " << p.verification
        << ", attempts " << p.attempts << "\n";
    out << "  segments accepted " << accepted << "/" << p.segments.size() << "\n";
    if (p.T_final) {
      const Vec3 rpy = rpy_from_rotation(p.T_final->rotation) * (180.0 / kPi);
      const Vec3& t = p.T_final->translation;
      out << "  T_final " << p.T_final->from.str() << "->" << p.T_final->to.str() << " rpy_deg ["
          << rpy.x() << ", " << rpy.y() << ", " << rpy.z() << "] t [" << t.x() << ", " << t.y()
          << ", " << t.z() << "]\n";
    }
    out << "  residuals: imu rotation " << p.imu_rotation_rms << " rad/s, imu translation "
        << p.imu_translation_rms << " m/s^2, icp " << p.icp_rms << " m, line pairs " << p.line_pairs
        << "\n";
    for (const StageError& e : p.errors) {
      out << "  error [" << e.stage << "] " << e.code << ": " << e.message << "\n";
    }
  }
  return out.str();
}

}  // namespace rigidcal::app
