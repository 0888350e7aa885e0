#include <algorithm>
#include <cmath>
#include <tuple>

#include "rigidcal/cloud.hpp"
#include "rigidcal/error.hpp"

namespace rigidcal {

Feature transform_feature(const Feature& f, const RigidTransform& T) {
  Feature out = f;
  out.direction = canonical_direction(T.apply_direction(f.direction));
  out.center = T.apply(f.center);
  return out;
}

double feature_alpha(const Feature& a, const Feature& b) {
  const double c = std::min(1.0, std::abs(a.direction.dot(b.direction)));
  // atan2 form keeps precision near zero, where acos loses it.
  return std::atan2(a.direction.cross(b.direction).norm(), c);
}

double feature_delta(const Feature& a, const Feature& b, PlaneDistance plane_distance) {
  const Vec3 offset = a.center - b.center;
  if (a.kind == FeatureKind::kPlane && plane_distance == PlaneDistance::kNormalOffset) {
    return std::abs(a.direction.dot(offset));
  }
  const Vec3 cross = a.direction.cross(b.direction);
  const double cn = cross.norm();
  if (cn < kParallelGuard) {
    if (a.kind == FeatureKind::kPlane) {
      return std::abs(a.direction.dot(offset));
    }
    return offset.cross(a.direction).norm();
  }
  return std::abs(offset.dot(cross)) / cn;
}

std::vector<MatchPair> match_features(std::span<const Feature> a, std::span<const Feature> b,
                                      double tau_alpha, double tau_delta,
                                      PlaneDistance plane_distance) {
  struct Candidate {
    double alpha;
    double delta;
    std::size_t i;
    std::size_t j;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (a[i].kind != b[j].kind) {
        continue;
      }
      const double alpha = feature_alpha(a[i], b[j]);
      const double delta = feature_delta(a[i], b[j], plane_distance);
      if (alpha <= tau_alpha && delta <= tau_delta) {
        cands.push_back({alpha, delta, i, j});
      }
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(x.alpha, x.delta, x.i, x.j) < std::tie(y.alpha, y.delta, y.i, y.j);
  });

  std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);
  std::vector<MatchPair> out;
  for (const Candidate& c : cands) {
    if (used_a[c.i] || used_b[c.j]) {
      continue;
    }
    used_a[c.i] = used_b[c.j] = 1;
    out.push_back({a[c.i], b[c.j], c.alpha, c.delta});
  }
  return out;
}

RigidTransform refine_extrinsics(std::span<const MatchPair> pairs, std::size_t max_pairs,
                                 FrameId from, FrameId to) {
  const std::size_t n = std::min(pairs.size(), max_pairs);
  std::vector<Correspondence> dirs;
  dirs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& da = pairs[i].a.direction;
    Vec3 db = pairs[i].b.direction;
    if (da.dot(db) < 0.0) {
      db = -db;
    }
    dirs.push_back({db, da});
  }
  const Mat3 r = davenport_rotation(dirs).to_matrix();
  Vec3 t = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    t += pairs[i].a.center - r * pairs[i].b.center;
  }
  t /= static_cast<double>(n);
  return {r, t, std::move(from), std::move(to)};
}

const char* to_string(VerifyStatus status) {
  switch (status) {
    case VerifyStatus::kVerified: return "verified";
    case VerifyStatus::kRejected: return "rejected";
    case VerifyStatus::kNoPlanes: return "no_planes";
  }
  return "unknown";
}

VerifyResult verify_extrinsics(std::span<const Feature> planes_a, std::span<const Feature> planes_b,
                               const RigidTransform& T_final, const VerifyConfig& config) {
  std::vector<Feature> moved;
  moved.reserve(planes_b.size());
  for (const Feature& f : planes_b) {
    if (f.kind == FeatureKind::kPlane) {
      moved.push_back(transform_feature(f, T_final));
    }
  }
  std::vector<Feature> base;
  for (const Feature& f : planes_a) {
    if (f.kind == FeatureKind::kPlane) {
      base.push_back(f);
    }
  }

  VerifyResult out;
  out.pairs = match_features(base, moved, config.assoc_alpha, config.assoc_delta,
                             config.plane_distance);
  if (out.pairs.empty()) {
    out.status = VerifyStatus::kNoPlanes;
    return out;
  }
  for (const MatchPair& p : out.pairs) {
    out.max_alpha = std::max(out.max_alpha, p.alpha);
    out.max_delta = std::max(out.max_delta, p.delta);
  }
  out.status = out.max_alpha <= config.tau_alpha && out.max_delta <= config.tau_delta
                   ? VerifyStatus::kVerified
                   : VerifyStatus::kRejected;
  return out;
}

RigidTransform compose_extrinsics(const RigidTransform& T_init, const RigidTransform& T_imu,
                                  const RigidTransform& T_gicp, const RigidTransform& T_refined) {
  return T_refined * (T_gicp * (T_imu * T_init));
}

}  // namespace rigidcal
