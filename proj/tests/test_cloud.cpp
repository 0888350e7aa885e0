#include <gtest/gtest.h>

#include <algorithm>

#include "rigidcal/cloud.hpp"
#include "rigidcal/error.hpp"
#include "rigidcal/kdtree.hpp"
#include "rigidcal/sim.hpp"
#include "support.hpp"

namespace rigidcal {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no rigidcal::Error thrown";
  return ErrorCode::kInvalidArgument;
}

PointCloud scene_cloud(std::uint64_t seed = 1, double noise = 0.005) {
  SceneSpec scene = calibration_scene();
  scene.noise_std = noise;
  return synth_scene(scene, RigidTransform::identity(FrameId::base(), FrameId::base()), seed);
}

PointCloud random_cloud(CounterRng& rng, std::size_t n, double scale, const char* frame = "S") {
  PointCloud c{FrameId(frame), {}};
  for (std::size_t i = 0; i < n; ++i) {
    c.points.push_back(test::random_vec(rng, scale));
  }
  return c;
}

TEST(KdTreeTest, MatchesBruteForce) {
  CounterRng rng(1);
  const PointCloud c = random_cloud(rng, 500, 5.0);
  const KdTree tree(c.points);
  for (int q = 0; q < 100; ++q) {
    const Vec3 p = test::random_vec(rng, 6.0);
    std::vector<std::pair<double, std::size_t>> brute;
    for (std::size_t i = 0; i < c.size(); ++i) {
      brute.push_back({(c.points[i] - p).squaredNorm(), i});
    }
    std::sort(brute.begin(), brute.end());
    const auto knn = tree.knn(p, 7);
    ASSERT_EQ(knn.size(), 7u);
    for (std::size_t k = 0; k < knn.size(); ++k) {
      EXPECT_EQ(knn[k].index, brute[k].second);
      EXPECT_DOUBLE_EQ(knn[k].sq_distance, brute[k].first);
    }
    std::vector<std::size_t> inside;
    for (const auto& [d2, i] : brute) {
      if (d2 <= 1.5 * 1.5) {
        inside.push_back(i);
      }
    }
    std::sort(inside.begin(), inside.end());
    EXPECT_EQ(tree.radius(p, 1.5), inside);
    EXPECT_EQ(tree.nearest(p).index, brute.front().second);
  }
}

TEST(BoxFilterTest, DefaultBoundsKeepForwardSector) {
  CounterRng rng(2);
  const PointCloud c = random_cloud(rng, 2000, 30.0);
  const PointCloud f = box_filter(c);
  EXPECT_FALSE(f.empty());
  EXPECT_LT(f.size(), c.size());
  for (const Vec3& p : f.points) {
    EXPECT_GE(p.x(), 0.0);
    EXPECT_LE(p.x(), 50.0);
    EXPECT_LE(std::abs(p.y()), 10.0);
    EXPECT_LE(std::abs(p.z()), 10.0);
  }
  EXPECT_EQ(f.frame, c.frame);
}

TEST(BoxFilterTest, UnboundedIsIdentity) {
  CounterRng rng(3);
  const PointCloud c = random_cloud(rng, 500, 1e3);
  EXPECT_EQ(box_filter(c, Box::unbounded()).points, c.points);
}

TEST(BoxFilterTest, AllBehindSensorIsEmpty) {
  PointCloud c{FrameId("S"), {Vec3(-1, 0, 0), Vec3(-5, 2, 1)}};
  EXPECT_TRUE(box_filter(c).empty());
}

TEST(BoxFilterTest, IsIdempotentAndOrderPreserving) {
  CounterRng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const PointCloud c = random_cloud(rng, 300, 20.0);
    Box box;
    box.min = test::random_vec(rng, 10.0) - Vec3::Constant(10.0);
    box.max = box.min + Vec3(rng.uniform(0, 20), rng.uniform(0, 20), rng.uniform(0, 20));
    const PointCloud once = box_filter(c, box);
    EXPECT_EQ(box_filter(once, box).points, once.points);
    std::size_t j = 0;
    for (const Vec3& p : c.points) {
      if (j < once.size() && p == once.points[j]) {
        ++j;
      }
    }
    EXPECT_EQ(j, once.size());
  }
}

TEST(BoxFilterTest, InvertedBoxIsInvalid) {
  Box box;
  box.min = Vec3(1, 0, 0);
  box.max = Vec3(0, 1, 1);
  EXPECT_EQ(code_of([&] { (void)box_filter(PointCloud{FrameId("S"), {Vec3::Zero()}}, box); }),
            ErrorCode::kInvalidArgument);
}

TEST(PointCloudTest, TransformedChecksFrame) {
  const PointCloud c{FrameId("S"), {Vec3(1, 0, 0)}};
  const RigidTransform T{rot_z(kPi / 2), Vec3(0, 0, 1), FrameId("S"), FrameId("D")};
  const PointCloud d = c.transformed(T);
  EXPECT_EQ(d.frame, FrameId("D"));
  EXPECT_LT((d.points[0] - Vec3(0, 1, 1)).norm(), 1e-15);
  EXPECT_EQ(code_of([&] { (void)d.transformed(T); }), ErrorCode::kFrameMismatch);
}

TEST(VoxelDownsample, OneCentroidPerVoxel) {
  const std::vector<Vec3> pts{Vec3(0.01, 0.01, 0.01), Vec3(0.03, 0.01, 0.01), Vec3(0.5, 0.5, 0.5)};
  const auto out = voxel_downsample(pts, 0.2);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_LT((out[0] - Vec3(0.02, 0.01, 0.01)).norm(), 1e-15);
}

TEST(Icp, SelfAlignmentIsIdentity) {
  PointCloud c = scene_cloud();
  PointCloud d = c;
  c.frame = FrameId("S");
  const IcpResult r = icp_align(c, d, RigidTransform::identity(FrameId("S"), FrameId::base()));
  EXPECT_LT((r.T.rotation - Mat3::Identity()).norm(), 1e-9);
  EXPECT_LT(r.T.translation.norm(), 1e-9);
  // Source points are voxel centroids, so the residual is bounded by the noise, not zero.
  EXPECT_LT(r.rms, 0.01);
}

TEST(Icp, RecoversTransformFromPerturbedSeed) {
  CounterRng rng(5);
  SceneSpec scene = calibration_scene();
  const RigidTransform truth{rotation_from_rpy(0.02, -0.01, 0.3), Vec3(0.4, -0.2, 0.1), FrameId("S"),
                            FrameId::base()};
  const PointCloud dst = synth_scene(scene, RigidTransform::identity(FrameId::base(), FrameId::base()), 5);
  const PointCloud src = synth_scene(scene, truth, 6);
  for (int trial = 0; trial < 5; ++trial) {
    RigidTransform seed = truth;
    seed.rotation = test::random_small_rotation(rng, deg2rad(5.0)) * truth.rotation;
    seed.translation += 0.2 * test::random_unit(rng);
    const IcpResult r = icp_align(src, dst, seed);
    EXPECT_LT(rad2deg(test::rotation_error(r.T, truth)), 0.1) << "trial " << trial;
    EXPECT_LT(test::translation_error(r.T, truth), 0.01) << "trial " << trial;
  }
}

TEST(Icp, ResidualIsMonotone) {
  CounterRng rng(6);
  SceneSpec scene = calibration_scene();
  const RigidTransform truth{rot_z(0.1), Vec3(0.3, 0.1, 0.0), FrameId("S"), FrameId::base()};
  const PointCloud dst = synth_scene(scene, RigidTransform::identity(FrameId::base(), FrameId::base()), 7);
  const PointCloud src = synth_scene(scene, truth, 8);
  for (int trial = 0; trial < 10; ++trial) {
    RigidTransform seed = truth;
    seed.rotation = test::random_small_rotation(rng, deg2rad(rng.uniform(1.0, 8.0))) * truth.rotation;
    seed.translation += rng.uniform(0.05, 0.4) * test::random_unit(rng);
    const IcpResult r = icp_align(src, dst, seed);
    ASSERT_FALSE(r.residual_history.empty());
    for (std::size_t i = 1; i < r.residual_history.size(); ++i) {
      EXPECT_LE(r.residual_history[i], r.residual_history[i - 1]);
    }
  }
}

TEST(Icp, SparseCloudIsRejected) {
  CounterRng rng(7);
  const PointCloud small = random_cloud(rng, 50, 5.0, "S");
  const PointCloud big = scene_cloud();
  EXPECT_EQ(code_of([&] {
              (void)icp_align(small, big, RigidTransform::identity(FrameId("S"), FrameId::base()));
            }),
            ErrorCode::kTooSparse);
}

TEST(Icp, SeedMustMapSourceToDestination) {
  const PointCloud c = scene_cloud();
  EXPECT_EQ(code_of([&] { (void)icp_align(c, c, RigidTransform::identity(FrameId("X"), FrameId::base())); }),
            ErrorCode::kFrameMismatch);
}

void expect_canonical(const Feature& f) {
  EXPECT_NEAR(f.direction.norm(), 1.0, 1e-9);
  for (int i = 0; i < 3; ++i) {
    if (f.direction(i) != 0.0) {
      EXPECT_GT(f.direction(i), 0.0);
      break;
    }
  }
  EXPECT_GE(f.rms_fit, 0.0);
}

TEST(Features, SinglePlane) {
  SceneSpec scene;
  scene.planes.push_back({Vec3(5, 0, 0), Vec3::UnitZ(), Vec3::Zero(), 8.0, 8.0});
  const PointCloud c = synth_scene(scene, RigidTransform::identity(FrameId::base(), FrameId::base()), 1);
  const FeatureSet fs = extract_features(c);
  ASSERT_EQ(fs.planes.size(), 1u);
  EXPECT_LT(rad2deg(std::acos(std::min(1.0, std::abs(fs.planes[0].direction.z())))), 0.5);
  EXPECT_TRUE(fs.lines.empty());
  expect_canonical(fs.planes[0]);
}

TEST(Features, VerticalPole) {
  SceneSpec scene;
  scene.lines.push_back({Vec3(5, 0, 0), Vec3::UnitZ(), 4.0});
  scene.line_density = 100.0;
  const PointCloud c = synth_scene(scene, RigidTransform::identity(FrameId::base(), FrameId::base()), 2);
  const FeatureSet fs = extract_features(c);
  ASSERT_EQ(fs.lines.size(), 1u);
  EXPECT_LT(rad2deg(std::acos(std::min(1.0, std::abs(fs.lines[0].direction.z())))), 0.5);
  EXPECT_TRUE(fs.planes.empty());
  expect_canonical(fs.lines[0]);
}

TEST(Features, RandomBallHasNoFeatures) {
  // 600 points in a 5 m ball: a 0.1 m slab through the centre holds ~9 on average.
  SceneSpec scene;
  scene.balls.push_back({Vec3(8, 0, 0), 5.0, 600});
  scene.noise_std = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const PointCloud c =
        synth_scene(scene, RigidTransform::identity(FrameId::base(), FrameId::base()), seed);
    const FeatureSet fs = extract_features(c);
    EXPECT_TRUE(fs.lines.empty()) << "seed " << seed;
    EXPECT_TRUE(fs.planes.empty()) << "seed " << seed;
  }
}

TEST(Features, CalibrationSceneYieldsLinesAndPlanes) {
  const FeatureSet fs = extract_features(scene_cloud());
  EXPECT_GE(fs.planes.size(), 3u);
  EXPECT_GE(fs.lines.size(), 6u);
  for (const Feature& f : fs.lines) {
    expect_canonical(f);
    EXPECT_GE(f.inlier_count, 30u);
  }
  for (const Feature& f : fs.planes) {
    expect_canonical(f);
    EXPECT_GE(f.inlier_count, 30u);
  }
}

TEST(Features, DeterministicForSeed) {
  const PointCloud c = scene_cloud();
  const FeatureSet a = extract_features(c);
  const FeatureSet b = extract_features(c);
  ASSERT_EQ(a.lines.size(), b.lines.size());
  for (std::size_t i = 0; i < a.lines.size(); ++i) {
    EXPECT_EQ(a.lines[i].direction, b.lines[i].direction);
    EXPECT_EQ(a.lines[i].center, b.lines[i].center);
  }
}

TEST(Features, DirectionsFollowSensorPose) {
  const SceneSpec scene = calibration_scene();
  const RigidTransform pose{rot_z(deg2rad(20.0)) * rot_x(deg2rad(2.0)), Vec3(0.5, -0.3, 0.2), FrameId("S"),
                            FrameId::base()};
  const FeatureSet base = extract_features(
      synth_scene(scene, RigidTransform::identity(FrameId::base(), FrameId::base()), 11));
  const FeatureSet moved = extract_features(synth_scene(scene, pose, 12));
  std::vector<Feature> mapped;
  for (const Feature& f : moved.planes) {
    mapped.push_back(transform_feature(f, pose));
  }
  const auto pairs = match_features(base.planes, mapped, deg2rad(10.0), 2.0);
  ASSERT_GE(pairs.size(), 3u);
  for (const MatchPair& p : pairs) {
    EXPECT_LT(rad2deg(p.alpha), 0.5);
  }
}

TEST(Curvature, EdgesScoreHigherThanSurfaces) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      pts.push_back(Vec3(0.1 * i, 0.1 * j, 0.0));
    }
  }
  for (int i = 0; i < 40; ++i) {
    pts.push_back(Vec3(5.0, 0.0, 0.05 * i));
  }
  // k = 9 gives a symmetric 3x3 stencil on the grid.
  const auto s = curvature_scores(pts, 9);
  EXPECT_LT(s[210], 1e-9);
  EXPECT_GT(s[420], 0.9);
}

Feature line(const Vec3& dir, const Vec3& center) {
  return {FeatureKind::kLine, canonical_direction(dir), center, 100, 0.0};
}

Feature plane(const Vec3& normal, const Vec3& center) {
  return {FeatureKind::kPlane, canonical_direction(normal), center, 100, 0.0};
}

std::vector<Feature> random_lines(CounterRng& rng, int n) {
  std::vector<Feature> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(line(test::random_unit(rng), test::random_vec(rng, 20.0)));
  }
  return out;
}

TEST(MatchFeatures, IdenticalListsMatchPerfectly) {
  CounterRng rng(8);
  const auto a = random_lines(rng, 20);
  const auto pairs = match_features(a, a, deg2rad(5.0), 0.5);
  ASSERT_EQ(pairs.size(), a.size());
  for (const MatchPair& p : pairs) {
    EXPECT_NEAR(p.alpha, 0.0, 1e-7);
    EXPECT_NEAR(p.delta, 0.0, 1e-9);
  }
}

TEST(MatchFeatures, ThreeDegreeRotationAgainstThresholds) {
  CounterRng rng(9);
  std::vector<Feature> a, b;
  for (int i = 0; i < 10; ++i) {
    const Vec3 d = test::random_unit(rng);
    const Vec3 c = test::random_vec(rng, 20.0);
    a.push_back(line(d, c));
    // Rotate the direction by 3 degrees about an axis normal to it, keep the center.
    const Vec3 axis = d.cross(test::random_unit(rng)).normalized();
    b.push_back(line(Quaternion::from_axis_angle(axis, deg2rad(3.0)).rotate(d), c));
  }
  EXPECT_EQ(match_features(a, b, deg2rad(5.0), 0.5).size(), a.size());
  EXPECT_TRUE(match_features(a, b, deg2rad(1.0), 0.5).empty());
}

TEST(MatchFeatures, ParallelLinesUsePointToLineDistance) {
  const std::vector<Feature> a{line(Vec3::UnitZ(), Vec3(0, 0, 0))};
  const std::vector<Feature> b{line(Vec3::UnitZ(), Vec3(0.2, 0, 3))};
  const auto pairs = match_features(a, b, deg2rad(5.0), 0.5);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_NEAR(pairs[0].delta, 0.2, 1e-12);
  EXPECT_EQ(pairs[0].alpha, 0.0);
}

TEST(MatchFeatures, NearlyParallelDistantLinesDoNotMatch) {
  CounterRng rng(16);
  for (int trial = 0; trial < 200; ++trial) {
    // Two poles 8 m apart whose fitted directions differ by a fraction of a degree.
    const Vec3 tilt = test::random_small_rotation(rng, deg2rad(rng.uniform(0.01, 4.0))) * Vec3::UnitZ();
    const Feature a = line(Vec3::UnitZ(), Vec3(6, 2, 0.5));
    const Feature b = line(tilt, Vec3(13, 6.5, 0.5));
    EXPECT_GT(feature_delta(a, b), 7.0);
    EXPECT_TRUE(match_features(std::vector<Feature>{a}, std::vector<Feature>{b}, deg2rad(5.0), 0.5).empty());
  }
}

TEST(MatchFeatures, SkewLineDistance) {
  const Feature a = line(Vec3::UnitX(), Vec3(0, 0, 0));
  const Feature b = line(Vec3::UnitY(), Vec3(3, 4, 0.7));
  EXPECT_NEAR(feature_delta(a, b), 0.7, 1e-12);
  EXPECT_NEAR(feature_alpha(a, b), kPi / 2, 1e-12);
}

TEST(MatchFeatures, PlaneDistanceModes) {
  const Feature a = plane(Vec3::UnitZ(), Vec3(0, 0, 0));
  const Feature b = plane(Vec3::UnitZ(), Vec3(4, 1, 0.25));
  EXPECT_NEAR(feature_delta(a, b), 0.25, 1e-12);
  // Parallel normals fall back to the offset along the normal in either mode.
  EXPECT_NEAR(feature_delta(a, b, PlaneDistance::kSkewLine), 0.25, 1e-12);
  const Feature c = plane(Vec3::UnitX(), Vec3(4, 1, 0.25));
  EXPECT_NEAR(feature_delta(a, c), 0.25, 1e-12);
  EXPECT_NEAR(feature_delta(a, c, PlaneDistance::kSkewLine), 1.0, 1e-12);
}

TEST(MatchFeatures, AlphaIsSignInvariant) {
  const Feature a{FeatureKind::kLine, Vec3::UnitX(), Vec3::Zero(), 1, 0.0};
  const Feature b{FeatureKind::kLine, -Vec3::UnitX(), Vec3::Zero(), 1, 0.0};
  EXPECT_EQ(feature_alpha(a, b), 0.0);
}

TEST(MatchFeatures, OneToOneAndKindConsistent) {
  CounterRng rng(10);
  const auto a = random_lines(rng, 30);
  auto b = a;
  b.push_back(a.front());
  b.push_back(plane(Vec3::UnitZ(), a.front().center));
  const auto pairs = match_features(a, b, deg2rad(5.0), 0.5);
  EXPECT_EQ(pairs.size(), a.size());
  for (const MatchPair& p : pairs) {
    EXPECT_EQ(p.a.kind, p.b.kind);
    EXPECT_GE(p.alpha, 0.0);
    EXPECT_LE(p.alpha, kPi / 2);
  }
}

std::vector<MatchPair> perturbed_pairs(CounterRng& rng, const RigidTransform& T_ab, int n, double noise) {
  std::vector<MatchPair> pairs;
  for (const Feature& fa : random_lines(rng, n)) {
    Feature fb = transform_feature(fa, T_ab.inverse());
    if (noise > 0.0) {
      fb.direction = canonical_direction(test::random_small_rotation(rng, noise * std::abs(rng.normal())) *
                                         fb.direction);
    }
    pairs.push_back({fa, fb, feature_alpha(fa, fb), feature_delta(fa, fb)});
  }
  return pairs;
}

TEST(Refine, IdenticalFeaturesGiveIdentity) {
  CounterRng rng(11);
  const auto pairs = perturbed_pairs(rng, RigidTransform::identity(FrameId("b"), FrameId("a")), 20, 0.0);
  const RigidTransform T = refine_extrinsics(pairs);
  EXPECT_LT((T.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(T.translation.norm(), 1e-12);
}

TEST(Refine, RecoversKnownPerturbationExactly) {
  CounterRng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform T{test::random_small_rotation(rng, deg2rad(2.0)), 0.2 * test::random_unit(rng),
                           FrameId("b"), FrameId("a")};
    const RigidTransform est = refine_extrinsics(perturbed_pairs(rng, T, 100, 0.0));
    EXPECT_LT(test::rotation_error(est, T), 1e-6);
    EXPECT_LT(test::translation_error(est, T), 1e-6);
  }
}

TEST(Refine, AgreesWithKabsch) {
  CounterRng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const RigidTransform T{test::random_small_rotation(rng, deg2rad(2.0)), Vec3::Zero(), FrameId("b"),
                           FrameId("a")};
    const auto pairs = perturbed_pairs(rng, T, 30, deg2rad(0.5));
    std::vector<Correspondence> corr;
    for (const MatchPair& p : pairs) {
      // Sign-align b to a as the refinement does.
      const Vec3 db = p.a.direction.dot(p.b.direction) < 0.0 ? Vec3(-p.b.direction) : p.b.direction;
      corr.push_back({db, p.a.direction});
    }
    EXPECT_LT(geodesic_distance(refine_extrinsics(pairs).rotation, kabsch_rotation(corr)), 1e-6);
  }
}

TEST(Refine, UsesAtMostNPairs) {
  CounterRng rng(14);
  const RigidTransform T{rot_z(0.01), Vec3(0.1, 0, 0), FrameId("b"), FrameId("a")};
  auto pairs = perturbed_pairs(rng, T, 10, 0.0);
  auto junk = perturbed_pairs(rng, RigidTransform{rot_x(0.5), Vec3(3, 0, 0), FrameId("b"), FrameId("a")}, 10, 0.0);
  pairs.insert(pairs.end(), junk.begin(), junk.end());
  const RigidTransform est = refine_extrinsics(pairs, 10);
  EXPECT_LT(test::rotation_error(est, T), 1e-9);
}

TEST(Refine, ParallelLinesAreDegenerate) {
  std::vector<MatchPair> pairs;
  for (int i = 0; i < 10; ++i) {
    const Feature f = line(Vec3::UnitZ(), Vec3(i, 0, 0));
    pairs.push_back({f, f, 0.0, 0.0});
  }
  EXPECT_EQ(code_of([&] { (void)refine_extrinsics(pairs); }), ErrorCode::kDegenerateInput);
}

std::vector<Feature> three_planes() {
  return {plane(Vec3::UnitZ(), Vec3(9, 4, -1.8)), plane(Vec3::UnitX(), Vec3(16, 4, 0.2)),
          plane(Vec3::UnitY(), Vec3(9.5, 9, 0.2))};
}

TEST(Verify, TruthIsVerified) {
  const RigidTransform truth{rot_z(0.7), Vec3(0.3, -0.2, 0.1), FrameId("L"), FrameId::base()};
  std::vector<Feature> b;
  for (const Feature& f : three_planes()) {
    b.push_back(transform_feature(f, truth.inverse()));
  }
  const VerifyResult r = verify_extrinsics(three_planes(), b, truth);
  EXPECT_EQ(r.status, VerifyStatus::kVerified);
  EXPECT_EQ(r.pairs.size(), 3u);
  EXPECT_LT(r.max_alpha, 1e-9);
  EXPECT_LT(r.max_delta, 1e-9);
}

TEST(Verify, TwoDegreeYawIsRejected) {
  const RigidTransform truth{rot_z(0.7), Vec3(0.3, -0.2, 0.1), FrameId("L"), FrameId::base()};
  std::vector<Feature> b;
  for (const Feature& f : three_planes()) {
    b.push_back(transform_feature(f, truth.inverse()));
  }
  RigidTransform bad = truth;
  bad.rotation = rot_z(deg2rad(2.0)) * truth.rotation;
  EXPECT_EQ(verify_extrinsics(three_planes(), b, bad).status, VerifyStatus::kRejected);
}

TEST(Verify, NoPlanesIsInconclusive) {
  const VerifyResult r =
      verify_extrinsics({}, three_planes(), RigidTransform::identity(FrameId("L"), FrameId::base()));
  EXPECT_EQ(r.status, VerifyStatus::kNoPlanes);
  EXPECT_FALSE(r.verified());
  EXPECT_STREQ(to_string(r.status), "no_planes");
}

TEST(Verify, SyntheticSceneAtTruth) {
  const SceneSpec scene = calibration_scene();
  const RigidTransform truth{rot_z(deg2rad(45.0)), Vec3(0.23, 0.075, 0.1), FrameId("L1"), FrameId::base()};
  const FeatureSet a = extract_features(
      synth_scene(scene, RigidTransform::identity(FrameId::base(), FrameId::base()), 21));
  const FeatureSet b = extract_features(synth_scene(scene, truth, 22));
  EXPECT_TRUE(verify_extrinsics(a.planes, b.planes, truth).verified());
}

TEST(Compose, AllIdentityIsIdentity) {
  const RigidTransform T = compose_extrinsics(
      RigidTransform::identity(FrameId("L"), FrameId("B@init")),
      RigidTransform::identity(FrameId("B@init"), FrameId("B@imu")),
      RigidTransform::identity(FrameId("B@imu"), FrameId("B@icp")),
      RigidTransform::identity(FrameId("B@icp"), FrameId::base()));
  EXPECT_EQ(T.rotation, Mat3::Identity());
  EXPECT_EQ(T.translation, Vec3::Zero());
  EXPECT_EQ(T.from, FrameId("L"));
  EXPECT_EQ(T.to, FrameId::base());
}

TEST(Compose, MatchesSequentialApplication) {
  CounterRng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t0 = test::random_transform(rng, FrameId("L"), FrameId("B@init"));
    const auto t1 = test::random_transform(rng, FrameId("B@init"), FrameId("B@imu"));
    const auto t2 = test::random_transform(rng, FrameId("B@imu"), FrameId("B@icp"));
    const auto t3 = test::random_transform(rng, FrameId("B@icp"), FrameId::base());
    const RigidTransform T = compose_extrinsics(t0, t1, t2, t3);
    const Vec3 p = test::random_vec(rng, 10.0);
    EXPECT_LT((T.apply(p) - t3.apply(t2.apply(t1.apply(t0.apply(p))))).norm(), 1e-12);
    const RigidTransform again = t3 * t2 * t1 * t0;
    EXPECT_LT((again.matrix() - T.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Compose, MismatchedTagsThrow) {
  EXPECT_EQ(code_of([] {
              (void)compose_extrinsics(RigidTransform::identity(FrameId("L"), FrameId("B@init")),
                                       RigidTransform::identity(FrameId("X"), FrameId("B@imu")),
                                       RigidTransform::identity(FrameId("B@imu"), FrameId("B@icp")),
                                       RigidTransform::identity(FrameId("B@icp"), FrameId::base()));
            }),
            ErrorCode::kFrameMismatch);
}

}  // namespace
}  // namespace rigidcal
