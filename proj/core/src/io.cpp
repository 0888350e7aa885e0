#include "rigidcal/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rigidcal/error.hpp"

namespace rigidcal {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  }
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  }
  out.precision(17);
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) {
    throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
  }
}

[[noreturn]] void parse_error(const fs::path& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) {
    out.push_back(field);
  }
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_double(const std::string& text, double& value) {
  const std::string t = trim(text);
  if (t.empty()) {
    return false;
  }
  const char* end = t.data() + t.size();
  const auto r = std::from_chars(t.data(), end, value);
  return r.ec == std::errc() && r.ptr == end;
}

bool parse_int64(const std::string& text, std::int64_t& value) {
  const std::string t = trim(text);
  const char* end = t.data() + t.size();
  const auto r = std::from_chars(t.data(), end, value);
  return !t.empty() && r.ec == std::errc() && r.ptr == end;
}

}  // namespace

ImuSeries read_imu_csv(const fs::path& path, const FrameId& frame, double rate_hz) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  ImuSeries series{frame, rate_hz > 0.0 ? rate_hz : 100.0, {}};
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line != kImuCsvHeader) {
        parse_error(path, line_no, "expected header '" + std::string(kImuCsvHeader) + "'");
      }
      continue;
    }
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 7) {
      parse_error(path, line_no, "expected 7 fields, got " + std::to_string(f.size()));
    }
    ImuSample s;
    double v[6];
    if (!parse_int64(f[0], s.t_ns)) {
      parse_error(path, line_no, "bad timestamp '" + f[0] + "'");
    }
    for (int k = 0; k < 6; ++k) {
      if (!parse_double(f[static_cast<std::size_t>(k + 1)], v[k])) {
        parse_error(path, line_no, "bad number '" + f[static_cast<std::size_t>(k + 1)] + "'");
      }
    }
    s.omega = Vec3(v[0], v[1], v[2]);
    s.accel = Vec3(v[3], v[4], v[5]);
    series.samples.push_back(s);
  }
  if (!header_seen) {
    parse_error(path, line_no, "empty IMU file");
  }
  if (rate_hz <= 0.0 && series.size() >= 2) {
    std::vector<std::int64_t> dts;
    for (std::size_t i = 1; i < series.size(); ++i) {
      dts.push_back(series.samples[i].t_ns - series.samples[i - 1].t_ns);
    }
    std::nth_element(dts.begin(), dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2), dts.end());
    const std::int64_t median = dts[dts.size() / 2];
    if (median <= 0) {
      parse_error(path, line_no, "timestamps are not increasing");
    }
    series.rate_hz = 1e9 / static_cast<double>(median);
  }
  series.validate();
  return series;
}

void write_imu_csv(const fs::path& path, const ImuSeries& series) {
  std::ofstream out = open_out(path);
  out << kImuCsvHeader << '\n';
  for (const ImuSample& s : series.samples) {
    out << s.t_ns << ',' << s.omega.x() << ',' << s.omega.y() << ',' << s.omega.z() << ','
        << s.accel.x() << ',' << s.accel.y() << ',' << s.accel.z() << '\n';
  }
  finish(out, path);
}

PointCloud read_ply(const fs::path& path, const FrameId& frame) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) {
      return false;
    }
    ++line_no;
    line = trim(line);
    return true;
  };

  if (!next_line() || line != "ply") {
    parse_error(path, line_no, "missing 'ply' magic");
  }
  std::size_t vertex_count = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  int n_props = 0;
  int ix = -1, iy = -1, iz = -1;
  while (true) {
    if (!next_line()) {
      parse_error(path, line_no, "unterminated PLY header");
    }
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") {
        parse_error(path, line_no, "only ASCII PLY is supported");
      }
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      ss >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (seen_vertex) {
          parse_error(path, line_no, "duplicate vertex element");
        }
        seen_vertex = true;
        vertex_count = count;
      } else if (!seen_vertex) {
        parse_error(path, line_no, "vertex element must come first");
      }
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ss >> type >> name;
      if (type == "list") {
        parse_error(path, line_no, "list properties on vertices are not supported");
      }
      if (name == "x") ix = n_props;
      if (name == "y") iy = n_props;
      if (name == "z") iz = n_props;
      ++n_props;
    } else if (word == "end_header") {
      break;
    }
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    parse_error(path, line_no, "vertex element lacks x, y or z");
  }

  PointCloud cloud{frame, {}};
  cloud.points.reserve(vertex_count);
  while (cloud.points.size() < vertex_count) {
    if (!next_line()) {
      parse_error(path, line_no, "expected " + std::to_string(vertex_count) + " vertices, got " +
                                     std::to_string(cloud.points.size()));
    }
    if (line.empty()) {
      continue;
    }
    std::istringstream ss(line);
    std::vector<double> values;
    std::string tok;
    while (ss >> tok) {
      double v = 0.0;
      if (!parse_double(tok, v)) {
        parse_error(path, line_no, "bad number '" + tok + "'");
      }
      values.push_back(v);
    }
    if (static_cast<int>(values.size()) < n_props) {
      parse_error(path, line_no, "vertex row has too few values");
    }
    cloud.points.emplace_back(values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                              values[static_cast<std::size_t>(iz)]);
  }
  cloud.validate();
  return cloud;
}

void write_ply(const fs::path& path, const PointCloud& cloud) {
  std::ofstream out = open_out(path);
  out << "ply\nformat ascii 1.0\ncomment frame " << cloud.frame.str() << "\nelement vertex "
      << cloud.size() << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  for (const Vec3& p : cloud.points) {
    out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  finish(out, path);
}

PointCloud read_xyz_csv(const fs::path& path, const FrameId& frame) {
  std::ifstream in = open_in(path);
  PointCloud cloud{frame, {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> f = split(line, ',');
    double v[3];
    const bool ok = f.size() >= 3 && parse_double(f[0], v[0]) && parse_double(f[1], v[1]) &&
                    parse_double(f[2], v[2]);
    if (!ok) {
      if (line_no == 1) {
        continue;
      }
      parse_error(path, line_no, "expected x,y,z");
    }
    cloud.points.emplace_back(v[0], v[1], v[2]);
  }
  cloud.validate();
  return cloud;
}

void write_xyz_csv(const fs::path& path, const PointCloud& cloud) {
  std::ofstream out = open_out(path);
  out << "x,y,z\n";
  for (const Vec3& p : cloud.points) {
    out << p.x() << ',' << p.y() << ',' << p.z() << '\n';
  }
  finish(out, path);
}

PointCloud read_cloud(const fs::path& path, const FrameId& frame) {
  const std::string ext = path.extension().string();
  if (ext == ".ply") {
    return read_ply(path, frame);
  }
  if (ext == ".csv" || ext == ".xyz") {
    return read_xyz_csv(path, frame);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown cloud format '" + ext + "' for " + path.string());
}

}  // namespace rigidcal
