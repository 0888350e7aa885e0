#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "rigidcal/cloud.hpp"
#include "rigidcal/error.hpp"
#include "rigidcal/kdtree.hpp"
#include "rigidcal/rng.hpp"

namespace rigidcal {

void PointCloud::validate() const {
  for (const Vec3& p : points) {
    if (!p.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite point in cloud " + frame.str());
    }
  }
}

PointCloud PointCloud::transformed(const RigidTransform& T) const {
  if (!(T.from == frame)) {
    throw Error(ErrorCode::kFrameMismatch,
                "transform from " + T.from.str() + " applied to cloud in " + frame.str());
  }
  PointCloud out{T.to, {}};
  out.points.reserve(points.size());
  for (const Vec3& p : points) {
    out.points.push_back(T.apply(p));
  }
  return out;
}

Box Box::unbounded() {
  const double inf = std::numeric_limits<double>::infinity();
  return {Vec3::Constant(-inf), Vec3::Constant(inf)};
}

bool Box::contains(const Vec3& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

PointCloud box_filter(const PointCloud& cloud, const Box& box) {
  if ((box.min.array() > box.max.array()).any()) {
    throw Error(ErrorCode::kInvalidArgument, "box minimum exceeds maximum");
  }
  PointCloud out{cloud.frame, {}};
  for (const Vec3& p : cloud.points) {
    if (box.contains(p)) {
      out.points.push_back(p);
    }
  }
  return out;
}

std::vector<Vec3> voxel_downsample(std::span<const Vec3> points, double voxel) {
  if (!(voxel > 0.0)) {
    return {points.begin(), points.end()};
  }
  std::map<std::array<std::int64_t, 3>, std::pair<Vec3, int>> cells;
  for (const Vec3& p : points) {
    const std::array<std::int64_t, 3> key{static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                                          static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                                          static_cast<std::int64_t>(std::floor(p.z() / voxel))};
    auto [it, inserted] = cells.try_emplace(key, Vec3::Zero(), 0);
    it->second.first += p;
    ++it->second.second;
  }
  std::vector<Vec3> out;
  out.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    out.push_back(cell.first / static_cast<double>(cell.second));
  }
  return out;
}

Vec3 canonical_direction(const Vec3& d) {
  const Vec3 u = d.normalized();
  for (int i = 0; i < 3; ++i) {
    if (u(i) != 0.0) {
      return u(i) < 0.0 ? Vec3(-u) : u;
    }
  }
  return u;
}

PlaneFit fit_pca(std::span<const Vec3> points) {
  PlaneFit fit;
  if (points.empty()) {
    return fit;
  }
  for (const Vec3& p : points) {
    fit.centroid += p;
  }
  fit.centroid /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - fit.centroid;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  fit.eigenvalues = eig.eigenvalues().cwiseMax(0.0);
  fit.normal = canonical_direction(eig.eigenvectors().col(0));
  return fit;
}

std::vector<std::vector<std::size_t>> euclidean_clusters(std::span<const Vec3> points,
                                                         double tolerance, std::size_t min_size) {
  const KdTree tree(points);
  std::vector<char> seen(points.size(), 0);
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t seed = 0; seed < points.size(); ++seed) {
    if (seen[seed]) {
      continue;
    }
    std::vector<std::size_t> cluster{seed};
    seen[seed] = 1;
    for (std::size_t head = 0; head < cluster.size(); ++head) {
      for (std::size_t j : tree.radius(points[cluster[head]], tolerance)) {
        if (!seen[j]) {
          seen[j] = 1;
          cluster.push_back(j);
        }
      }
    }
    if (cluster.size() >= min_size) {
      std::sort(cluster.begin(), cluster.end());
      clusters.push_back(std::move(cluster));
    }
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return clusters;
}

std::vector<double> curvature_scores(std::span<const Vec3> points, std::size_t k) {
  const KdTree tree(points);
  std::vector<double> scores(points.size(), 0.0);
  std::vector<Vec3> hood;
  for (std::size_t i = 0; i < points.size(); ++i) {
    hood.clear();
    for (const Neighbor& n : tree.knn(points[i], k)) {
      hood.push_back(points[n.index]);
    }
    const Vec3 ev = fit_pca(hood).eigenvalues;
    scores[i] = ev(2) > 0.0 ? 1.0 - ev(1) / ev(2) : 0.0;
  }
  return scores;
}

namespace {

struct Model {
  Vec3 direction = Vec3::Zero();
  Vec3 point = Vec3::Zero();
};

double plane_distance(const Model& m, const Vec3& p) { return std::abs(m.direction.dot(p - m.point)); }
double line_distance(const Model& m, const Vec3& p) { return (p - m.point).cross(m.direction).norm(); }

class Extractor {
 public:
  Extractor(std::span<const Vec3> pts, const FeatureConfig& cfg) : pts_(pts), cfg_(cfg) {}

  // Sequential prioritized RANSAC. `candidates` are sorted best first and drawn from;
  // inliers are counted over `remaining`, which loses each accepted feature's inliers.
  void run(FeatureKind kind, std::vector<std::size_t> candidates, std::vector<std::size_t>& remaining,
           std::uint64_t stream, std::vector<Feature>& out) {
    const std::size_t sample_size = kind == FeatureKind::kPlane ? 3 : 2;
    CounterRng rng(cfg_.seed, stream);
    for (int guard = 0; guard < 64; ++guard) {
      if (candidates.size() < sample_size || remaining.size() < cfg_.min_inliers) {
        return;
      }
      std::size_t best_count = 0;
      Model best;
      const int max_iter = std::max(cfg_.max_iterations, 1);
      double needed = static_cast<double>(max_iter);
      for (int it = 0; it < max_iter && it < needed; ++it) {
        // Progressive sampling: the pool grows from the best candidates to all of them.
        const std::size_t n = candidates.size();
        const std::size_t pool = std::min(
            n, sample_size + static_cast<std::size_t>((n - sample_size) * 2.0 * (it + 1) / max_iter));
        std::array<std::size_t, 3> pick{};
        for (std::size_t s = 0; s < sample_size; ++s) {
          pick[s] = candidates[rng.below(pool)];
        }
        Model m;
        if (!hypothesis(kind, pick, m)) {
          continue;
        }
        const std::size_t count = count_inliers(kind, m, remaining);
        if (count > best_count) {
          best_count = count;
          best = m;
          const double w = static_cast<double>(count) / static_cast<double>(remaining.size());
          const double miss = 1.0 - std::pow(w, static_cast<double>(sample_size));
          needed = miss <= 0.0 ? 0.0 : std::max(20.0, std::log(1e-3) / std::log(miss));
        }
      }
      if (best_count < cfg_.min_inliers) {
        return;
      }

      std::vector<std::size_t> inliers;
      Feature f;
      for (int refit = 0; refit < 2; ++refit) {
        inliers = collect_inliers(kind, best, remaining);
        if (inliers.size() < cfg_.min_inliers) {
          return;
        }
        if (!refine(kind, inliers, best, f)) {
          return;
        }
      }
      inliers = collect_inliers(kind, best, remaining);
      if (inliers.size() < cfg_.min_inliers) {
        return;
      }
      double sq = 0.0;
      for (std::size_t i : inliers) {
        const double d = kind == FeatureKind::kPlane ? plane_distance(best, pts_[i]) : line_distance(best, pts_[i]);
        sq += d * d;
      }
      f.inlier_count = inliers.size();
      f.rms_fit = std::sqrt(sq / static_cast<double>(inliers.size()));
      out.push_back(f);

      std::vector<char> taken(pts_.size(), 0);
      for (std::size_t i : inliers) {
        taken[i] = 1;
      }
      std::erase_if(remaining, [&](std::size_t i) { return taken[i] != 0; });
      std::erase_if(candidates, [&](std::size_t i) { return taken[i] != 0; });
    }
  }

 private:
  bool hypothesis(FeatureKind kind, const std::array<std::size_t, 3>& pick, Model& m) const {
    const Vec3& a = pts_[pick[0]];
    const Vec3 ab = pts_[pick[1]] - a;
    if (kind == FeatureKind::kLine) {
      if (ab.norm() < 1e-9) {
        return false;
      }
      m = {ab.normalized(), a};
      return true;
    }
    const Vec3 ac = pts_[pick[2]] - a;
    const Vec3 n = ab.cross(ac);
    if (n.norm() < 1e-6 * ab.norm() * ac.norm() || n.norm() == 0.0) {
      return false;
    }
    m = {n.normalized(), a};
    return true;
  }

  [[nodiscard]] std::size_t count_inliers(FeatureKind kind, const Model& m,
                                          const std::vector<std::size_t>& idx) const {
    std::size_t count = 0;
    for (std::size_t i : idx) {
      const double d = kind == FeatureKind::kPlane ? plane_distance(m, pts_[i]) : line_distance(m, pts_[i]);
      count += d < cfg_.inlier_threshold ? 1 : 0;
    }
    return count;
  }

  [[nodiscard]] std::vector<std::size_t> collect_inliers(FeatureKind kind, const Model& m,
                                                         const std::vector<std::size_t>& idx) const {
    std::vector<std::size_t> out;
    for (std::size_t i : idx) {
      const double d = kind == FeatureKind::kPlane ? plane_distance(m, pts_[i]) : line_distance(m, pts_[i]);
      if (d < cfg_.inlier_threshold) {
        out.push_back(i);
      }
    }
    return out;
  }

  // PCA refit plus a shape check: planes need real 2-D spread, lines a thin 1-D support.
  bool refine(FeatureKind kind, const std::vector<std::size_t>& inliers, Model& m, Feature& f) const {
    std::vector<Vec3> sub;
    sub.reserve(inliers.size());
    for (std::size_t i : inliers) {
      sub.push_back(pts_[i]);
    }
    const PlaneFit fit = fit_pca(sub);
    const double spread_mid = std::sqrt(fit.eigenvalues(1));
    const double spread_max = std::sqrt(fit.eigenvalues(2));
    const double thr = cfg_.inlier_threshold;
    f.kind = kind;
    f.center = fit.centroid;
    if (kind == FeatureKind::kPlane) {
      if (spread_mid < 2.0 * thr) {
        return false;
      }
      m = {fit.normal, fit.centroid};
      f.direction = fit.normal;
      return true;
    }
    if (spread_mid > 0.5 * thr || spread_max < 2.0 * thr) {
      return false;
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> eig = principal_axes(sub, fit.centroid);
    f.direction = canonical_direction(eig.eigenvectors().col(2));
    m = {f.direction, fit.centroid};
    return true;
  }

  static Eigen::SelfAdjointEigenSolver<Mat3> principal_axes(const std::vector<Vec3>& sub,
                                                            const Vec3& centroid) {
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : sub) {
      cov.noalias() += (p - centroid) * (p - centroid).transpose();
    }
    return Eigen::SelfAdjointEigenSolver<Mat3>(cov / static_cast<double>(sub.size()));
  }

  std::span<const Vec3> pts_;
  const FeatureConfig& cfg_;
};

double quantile_of_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) {
    return 0.0;
  }
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  return sorted[static_cast<std::size_t>(std::llround(pos))];
}

}  // namespace

FeatureSet extract_features(const PointCloud& cloud, const FeatureConfig& config) {
  FeatureSet out;
  if (cloud.size() < 100) {
    return out;
  }
  const std::span<const Vec3> pts(cloud.points);
  const auto clusters = euclidean_clusters(pts, config.cluster_tolerance, config.min_cluster_size);

  std::vector<std::vector<double>> cluster_scores;
  std::vector<double> all;
  for (const auto& cluster : clusters) {
    std::vector<Vec3> sub;
    sub.reserve(cluster.size());
    for (std::size_t i : cluster) {
      sub.push_back(pts[i]);
    }
    cluster_scores.push_back(curvature_scores(sub, config.neighbors));
    all.insert(all.end(), cluster_scores.back().begin(), cluster_scores.back().end());
  }
  std::sort(all.begin(), all.end());
  const double line_cut = std::max(quantile_of_sorted(all, 1.0 - config.line_quantile), config.min_line_score);
  const double plane_cut = quantile_of_sorted(all, config.plane_quantile);

  Extractor extractor(pts, config);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& cluster = clusters[c];
    const auto& scores = cluster_scores[c];
    std::vector<std::size_t> order(cluster.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::vector<std::size_t> plane_cand;
    std::vector<std::size_t> line_cand;
    for (std::size_t k : order) {
      if (scores[k] <= plane_cut) {
        plane_cand.push_back(cluster[k]);
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (scores[*it] >= line_cut) {
        line_cand.push_back(cluster[*it]);
      }
    }

    std::vector<std::size_t> remaining = cluster;
    extractor.run(FeatureKind::kPlane, plane_cand, remaining, 2 * c, out.planes);
    std::vector<char> free_point(pts.size(), 0);
    for (std::size_t i : remaining) {
      free_point[i] = 1;
    }
    std::erase_if(line_cand, [&](std::size_t i) { return free_point[i] == 0; });
    extractor.run(FeatureKind::kLine, line_cand, remaining, 2 * c + 1, out.lines);
  }
  return out;
}

}  // namespace rigidcal
