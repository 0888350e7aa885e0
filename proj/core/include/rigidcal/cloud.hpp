#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rigidcal/geometry.hpp"
#include "rigidcal/observability.hpp"

namespace rigidcal {

struct PointCloud {
  FrameId frame;
  std::vector<Vec3> points;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] bool empty() const { return points.empty(); }
  /// Throws InvalidArgument on non-finite coordinates.
  void validate() const;
  /// Points mapped through T; throws FrameMismatch unless T.from == frame.
  [[nodiscard]] PointCloud transformed(const RigidTransform& T) const;
};

struct Box {
  Vec3 min = Vec3(0.0, -10.0, -10.0);
  Vec3 max = Vec3(50.0, 10.0, 10.0);

  static Box unbounded();
  [[nodiscard]] bool contains(const Vec3& p) const;
};

/// Keeps points with min <= p <= max, in order. An empty result is not an error; callers
/// check empty(). Throws InvalidArgument when min > max on any axis.
PointCloud box_filter(const PointCloud& cloud, const Box& box = {});

/// Centroid per occupied voxel, ordered by voxel index.
std::vector<Vec3> voxel_downsample(std::span<const Vec3> points, double voxel);

struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();
  Vec3 centroid = Vec3::Zero();
  Vec3 eigenvalues = Vec3::Zero();  // ascending covariance eigenvalues
};

/// PCA of a point set: normal = least-variance axis.
PlaneFit fit_pca(std::span<const Vec3> points);

struct IcpConfig {
  double voxel = 0.2;               // [m] source downsampling
  double max_correspondence = 1.0;  // [m]
  int max_iterations = 50;
  double tolerance = 1e-6;  // [m] change of mean residual
  std::size_t normal_neighbors = 10;
  /// Destination neighbourhoods with lambda_min / sum(lambda) above this are skipped.
  double max_surface_variation = 0.05;
  std::size_t min_points = 100;
  std::size_t min_correspondences = 30;
};

struct IcpResult {
  RigidTransform T;  // src frame -> dst frame
  double rms = 0.0;  // [m] point-to-plane RMS at T
  int iterations = 0;
  std::size_t correspondences = 0;
  std::vector<double> residual_history;  // mean |residual| of each accepted iterate
};

/// Point-to-plane ICP seeded by T_seed (src -> dst). Throws TooSparse when either cloud has
/// fewer than min_points points, NoConvergence when too few correspondences are found,
/// FrameMismatch when T_seed does not map src.frame to dst.frame.
IcpResult icp_align(const PointCloud& src, const PointCloud& dst, const RigidTransform& T_seed,
                    const IcpConfig& config = {});

enum class FeatureKind { kLine, kPlane };

struct Feature {
  FeatureKind kind = FeatureKind::kLine;
  Vec3 direction = Vec3::UnitX();  // unit line direction or plane normal, first nonzero > 0
  Vec3 center = Vec3::Zero();
  std::size_t inlier_count = 0;
  double rms_fit = 0.0;  // [m]
};

/// Sign-canonical unit direction: first nonzero component positive.
Vec3 canonical_direction(const Vec3& d);

/// Feature expressed in another frame.
Feature transform_feature(const Feature& f, const RigidTransform& T);

struct FeatureConfig {
  std::size_t neighbors = 10;
  double cluster_tolerance = 0.5;  // [m]
  std::size_t min_cluster_size = 30;
  double line_quantile = 0.10;   // top curvature fraction -> line candidates
  double plane_quantile = 0.40;  // bottom curvature fraction -> plane candidates
  double min_line_score = 0.9;
  double inlier_threshold = 0.05;  // [m]
  std::size_t min_inliers = 30;
  int max_iterations = 500;
  std::uint64_t seed = 7;
};

struct FeatureSet {
  std::vector<Feature> lines;
  std::vector<Feature> planes;
};

/// Euclidean clusters (index lists) with at least min_size members, largest first.
std::vector<std::vector<std::size_t>> euclidean_clusters(std::span<const Vec3> points,
                                                         double tolerance, std::size_t min_size);

/// Per-point edge score 1 - lambda_mid / lambda_max over k nearest neighbours.
std::vector<double> curvature_scores(std::span<const Vec3> points, std::size_t k);

/// Planes first (sequential RANSAC on low-curvature candidates), then lines on what is
/// left. Deterministic for a given seed. Clouds under 100 points yield no features.
FeatureSet extract_features(const PointCloud& cloud, const FeatureConfig& config = {});

struct MatchPair {
  Feature a;
  Feature b;
  double alpha = 0.0;  // [rad] in [0, pi/2]
  double delta = 0.0;  // [m]
};

enum class PlaneDistance {
  kNormalOffset,  // |n_a . (c_a - c_b)|
  kSkewLine,      // the line formula applied to normals
};

/// |n_a x n_b| below which two directions count as parallel (sin 5 deg). The skew-line
/// distance only sees the offset along n_a x n_b, whose direction is noise for nearly
/// parallel lines; below this the centre's point-to-line distance is used instead.
inline constexpr double kParallelGuard = 0.08715574274765817;

double feature_alpha(const Feature& a, const Feature& b);
double feature_delta(const Feature& a, const Feature& b,
                     PlaneDistance plane_distance = PlaneDistance::kNormalOffset);

/// One-to-one greedy matching of same-kind features in a common frame, best (alpha, delta)
/// first, keeping pairs with alpha <= tau_alpha and delta <= tau_delta.
std::vector<MatchPair> match_features(std::span<const Feature> a, std::span<const Feature> b,
                                      double tau_alpha, double tau_delta,
                                      PlaneDistance plane_distance = PlaneDistance::kNormalOffset);

/// Correction T mapping b-side coordinates onto a-side ones from up to `max_pairs` line pairs:
/// Davenport rotation over directions, translation mean(c_a - R c_b).
/// Throws DegenerateInput when the directions span fewer than two axes.
RigidTransform refine_extrinsics(std::span<const MatchPair> pairs, std::size_t max_pairs = 100,
                                 FrameId from = FrameId("b"), FrameId to = FrameId("a"));

enum class VerifyStatus { kVerified, kRejected, kNoPlanes };

const char* to_string(VerifyStatus status);

struct VerifyConfig {
  double tau_alpha = deg2rad(1.0);
  double tau_delta = 0.3;
  double assoc_alpha = deg2rad(10.0);
  double assoc_delta = 2.0;
  PlaneDistance plane_distance = PlaneDistance::kNormalOffset;
};

struct VerifyResult {
  VerifyStatus status = VerifyStatus::kNoPlanes;
  std::vector<MatchPair> pairs;
  double max_alpha = 0.0;
  double max_delta = 0.0;

  [[nodiscard]] bool verified() const { return status == VerifyStatus::kVerified; }
};

/// Maps planes_b through T_final, associates them with planes_a, and accepts iff at least
/// one pair exists and every pair passes the tau gates. No association gives kNoPlanes.
VerifyResult verify_extrinsics(std::span<const Feature> planes_a, std::span<const Feature> planes_b,
                               const RigidTransform& T_final, const VerifyConfig& config = {});

/// T_refined * T_gicp * T_imu * T_init with frame-tag checks.
RigidTransform compose_extrinsics(const RigidTransform& T_init, const RigidTransform& T_imu,
                                  const RigidTransform& T_gicp, const RigidTransform& T_refined);

struct CalibrationResult {
  RigidTransform T_init;
  RigidTransform T_hat_IMU;
  RigidTransform T_hat_GICP;
  RigidTransform T_hat_Refined;
  RigidTransform T_final;
  VerifyStatus verification = VerifyStatus::kNoPlanes;
  std::vector<SegmentReport> segment_reports;
  double imu_rotation_residual = 0.0;
  double imu_translation_residual = 0.0;
  double icp_rms = 0.0;
  std::size_t line_pairs = 0;
  int attempts = 0;
};

}  // namespace rigidcal
