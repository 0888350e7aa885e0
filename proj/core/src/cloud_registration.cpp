#include <Eigen/Cholesky>
#include <cmath>
#include <optional>

#include "rigidcal/cloud.hpp"
#include "rigidcal/error.hpp"
#include "rigidcal/kdtree.hpp"

namespace rigidcal {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct Surface {
  Vec3 normal;
  bool planar = false;
};

class Target {
 public:
  Target(const PointCloud& dst, const IcpConfig& cfg)
      : pts_(dst.points), tree_(pts_), cfg_(cfg), normals_(pts_.size()) {}

  const Surface& surface(std::size_t i) {
    std::optional<Surface>& s = normals_[i];
    if (!s) {
      std::vector<Vec3> hood;
      for (const Neighbor& n : tree_.knn(pts_[i], cfg_.normal_neighbors)) {
        hood.push_back(pts_[n.index]);
      }
      const PlaneFit fit = fit_pca(hood);
      const double total = fit.eigenvalues.sum();
      s = Surface{fit.normal, total > 0.0 && fit.eigenvalues(0) / total <= cfg_.max_surface_variation};
    }
    return *s;
  }

  [[nodiscard]] const KdTree& tree() const { return tree_; }
  [[nodiscard]] const Vec3& point(std::size_t i) const { return pts_[i]; }

 private:
  const std::vector<Vec3>& pts_;
  KdTree tree_;
  const IcpConfig& cfg_;
  std::vector<std::optional<Surface>> normals_;
};

struct Match {
  Vec3 p;  // transformed source point
  Vec3 q;
  Vec3 n;
};

struct Evaluation {
  std::vector<Match> matches;
  double mean_abs = 0.0;
  double rms = 0.0;
};

Evaluation evaluate(const std::vector<Vec3>& src, const Mat3& r, const Vec3& t, Target& target,
                    double max_dist) {
  Evaluation e;
  const double max_sq = max_dist * max_dist;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (const Vec3& s : src) {
    const Vec3 p = r * s + t;
    const Neighbor nn = target.tree().nearest(p);
    if (nn.sq_distance > max_sq) {
      continue;
    }
    const Surface& surf = target.surface(nn.index);
    if (!surf.planar) {
      continue;
    }
    const Vec3& q = target.point(nn.index);
    const double res = surf.normal.dot(p - q);
    abs_sum += std::abs(res);
    sq_sum += res * res;
    e.matches.push_back({p, q, surf.normal});
  }
  if (!e.matches.empty()) {
    const auto n = static_cast<double>(e.matches.size());
    e.mean_abs = abs_sum / n;
    e.rms = std::sqrt(sq_sum / n);
  }
  return e;
}

}  // namespace

IcpResult icp_align(const PointCloud& src, const PointCloud& dst, const RigidTransform& T_seed,
                    const IcpConfig& config) {
  if (!(T_seed.from == src.frame) || !(T_seed.to == dst.frame)) {
    throw Error(ErrorCode::kFrameMismatch, "ICP seed maps " + T_seed.from.str() + "->" +
                                               T_seed.to.str() + " but clouds are " +
                                               src.frame.str() + "->" + dst.frame.str());
  }
  if (src.size() < config.min_points || dst.size() < config.min_points) {
    throw Error(ErrorCode::kTooSparse, "ICP needs at least " + std::to_string(config.min_points) +
                                           " points per cloud (got " + std::to_string(src.size()) +
                                           ", " + std::to_string(dst.size()) + ")");
  }
  const std::vector<Vec3> source = voxel_downsample(src.points, config.voxel);
  Target target(dst, config);

  Mat3 r = T_seed.rotation;
  Vec3 t = T_seed.translation;
  Evaluation current = evaluate(source, r, t, target, config.max_correspondence);

  IcpResult out;
  out.residual_history.push_back(current.mean_abs);
  for (out.iterations = 0; out.iterations < config.max_iterations; ++out.iterations) {
    if (current.matches.size() < config.min_correspondences) {
      throw Error(ErrorCode::kNoConvergence,
                  "only " + std::to_string(current.matches.size()) + " ICP correspondences");
    }
    Mat6 h = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    for (const Match& m : current.matches) {
      Vec6 j;
      j << m.p.cross(m.n), m.n;
      const double res = m.n.dot(m.p - m.q);
      h.noalias() += j * j.transpose();
      g += j * res;
    }
    // Tiny damping keeps directions the scene does not constrain fixed.
    h += Mat6::Identity() * (1e-9 * h.trace() + 1e-12);
    const Vec6 step = h.ldlt().solve(-g);

    bool accepted = false;
    for (double scale = 1.0; scale >= 1.0 / 16.0; scale *= 0.5) {
      const Mat3 dr = Quaternion::from_rotation_vector(scale * step.head<3>()).to_matrix();
      const Mat3 r_new = dr * r;
      const Vec3 t_new = dr * t + scale * step.tail<3>();
      Evaluation cand = evaluate(source, r_new, t_new, target, config.max_correspondence);
      if (cand.matches.size() >= config.min_correspondences && cand.mean_abs <= current.mean_abs) {
        const double change = current.mean_abs - cand.mean_abs;
        r = r_new;
        t = t_new;
        current = std::move(cand);
        out.residual_history.push_back(current.mean_abs);
        accepted = change >= config.tolerance;
        break;
      }
    }
    if (!accepted) {
      break;
    }
  }

  out.T = RigidTransform{orthonormalize(r), t, T_seed.from, T_seed.to};
  out.rms = current.rms;
  out.correspondences = current.matches.size();
  return out;
}

}  // namespace rigidcal
