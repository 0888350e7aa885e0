#include <array>
#include <cmath>

#include "rigidcal/error.hpp"
#include "rigidcal/rng.hpp"
#include "rigidcal/sim.hpp"
#include "rigidcal/taylor.hpp"

namespace rigidcal {

const char* to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kFigure8: return "figure8";
    case TrajectoryKind::kStraight: return "straight";
    case TrajectoryKind::kSlowTurn: return "slow_turn";
    case TrajectoryKind::kRestThenDrive: return "rest_then_drive";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_string(const std::string& name) {
  for (TrajectoryKind k : {TrajectoryKind::kFigure8, TrajectoryKind::kStraight,
                           TrajectoryKind::kSlowTurn, TrajectoryKind::kRestThenDrive}) {
    if (name == to_string(k)) {
      return k;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown trajectory kind '" + name + "'");
}

void TrajectorySpec::validate() const {
  if (!(rate_hz >= 50.0) || !(duration_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory needs rate >= 50 Hz and duration > 0");
  }
  if (kind == TrajectoryKind::kRestThenDrive && !(ramp_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rest_then_drive needs a positive ramp");
  }
  if (kind == TrajectoryKind::kSlowTurn && !(turn_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "slow_turn needs a positive turn rate");
  }
}

namespace {

using J = Taylor<3>;
using JMat = std::array<std::array<J, 3>, 3>;

struct Motion {
  J x, y, z, roll, pitch, yaw;
};

JMat multiply(const JMat& a, const JMat& b) {
  JMat out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < 3; ++k) {
        out[r][c] += a[r][k] * b[k][c];
      }
    }
  }
  return out;
}

JMat rotation(const J& roll, const J& pitch, const J& yaw) {
  J sr, cr, sp, cp, sy, cy;
  sincos(roll, sr, cr);
  sincos(pitch, sp, cp);
  sincos(yaw, sy, cy);
  const J zero;
  const J one(1.0);
  const JMat rz{{{cy, -sy, zero}, {sy, cy, zero}, {zero, zero, one}}};
  const JMat ry{{{cp, zero, sp}, {zero, one, zero}, {-sp, zero, cp}}};
  const JMat rx{{{one, zero, zero}, {zero, cr, -sr}, {zero, sr, cr}}};
  return multiply(rz, multiply(ry, rx));
}

Mat3 coefficient(const JMat& m, std::size_t k) {
  Mat3 out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out(r, c) = m[r][c].derivative(k);
    }
  }
  return out;
}

// Figure-eight (lemniscate of Gerono) at path time s, heading along the tangent.
void figure8(const TrajectorySpec& spec, const J& s, Motion& m) {
  const double a = spec.figure8_amplitude;
  const double w = 2.0 * kPi / spec.figure8_period_s;
  J s1, c1, s2, c2;
  sincos(w * s, s1, c1);
  sincos(2.0 * w * s, s2, c2);
  m.x = a * s1;
  m.y = 0.5 * a * s2;
  m.yaw = atan2(a * w * c2, a * w * c1);
}

void tilt(const TrajectorySpec& spec, const J& tau, const J& gain, double phase, Motion& m) {
  const double w = 2.0 * kPi * spec.tilt_frequency_hz;
  m.roll = gain * (spec.tilt_amplitude * sin(w * tau + J(phase)));
  m.pitch = gain * (spec.tilt_amplitude * sin(w * tau + J(phase + 0.5 * kPi)));
}

Motion evaluate(const TrajectorySpec& spec, double t0, double phase) {
  const J t = J::variable(t0);
  Motion m;
  switch (spec.kind) {
    case TrajectoryKind::kStraight:
      m.x = spec.speed * t;
      break;
    case TrajectoryKind::kSlowTurn: {
      const double radius = spec.speed / spec.turn_rate;
      m.yaw = spec.turn_rate * t;
      J s, c;
      sincos(m.yaw, s, c);
      m.x = radius * s;
      m.y = radius * (J(1.0) - c);
      break;
    }
    case TrajectoryKind::kFigure8:
      figure8(spec, t, m);
      tilt(spec, t, J(1.0), phase, m);
      break;
    case TrajectoryKind::kRestThenDrive: {
      // Smootherstep speed ramp h(x) = 6x^5 - 15x^4 + 10x^3; path time is its integral.
      J s, gain;
      if (t0 < spec.rest_s) {
        s = J(0.0);
        gain = J(0.0);
      } else if (t0 < spec.rest_s + spec.ramp_s) {
        const J x = (t - J(spec.rest_s)) * (1.0 / spec.ramp_s);
        const J x2 = x * x, x3 = x2 * x, x4 = x3 * x, x5 = x4 * x;
        gain = 6.0 * x5 - 15.0 * x4 + 10.0 * x3;
        s = spec.ramp_s * (x5 * x - 3.0 * x5 + 2.5 * x4);
      } else {
        gain = J(1.0);
        s = t - J(spec.rest_s + 0.5 * spec.ramp_s);
      }
      figure8(spec, s, m);
      tilt(spec, t - J(spec.rest_s), gain, phase, m);
      break;
    }
  }
  return m;
}

}  // namespace

std::vector<PoseSample> gen_trajectory(const TrajectorySpec& spec, std::uint64_t seed) {
  spec.validate();
  const double phase = seed == 0 ? 0.0 : 2.0 * kPi * CounterRng(seed, 0x7472616aULL).uniform();
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.rate_hz));
  std::vector<PoseSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t_ns = static_cast<std::int64_t>(std::llround(static_cast<double>(i) * 1e9 / spec.rate_hz));
    const Motion m = evaluate(spec, 1e-9 * static_cast<double>(t_ns), phase);
    const JMat r = rotation(m.roll, m.pitch, m.yaw);
    const Mat3 r0 = coefficient(r, 0);
    const Mat3 r1 = coefficient(r, 1);
    const Mat3 r2 = coefficient(r, 2);

    PoseSample p;
    p.t_ns = t_ns;
    p.R_WB = r0;
    p.p_WB = Vec3(m.x.value(), m.y.value(), m.z.value());
    p.omega_B = vee(r0.transpose() * r1);
    // d/dt vee(R^T R') = vee(R'^T R' + R^T R''); the first term is symmetric.
    p.alpha_B = vee(r0.transpose() * r2);
    p.accel_B = r0.transpose() * Vec3(m.x.derivative(2), m.y.derivative(2), m.z.derivative(2));
    out.push_back(p);
  }
  return out;
}

}  // namespace rigidcal
