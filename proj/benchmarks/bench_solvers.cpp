#include <benchmark/benchmark.h>

#include <vector>

#include "rigidcal/cloud.hpp"
#include "rigidcal/geometry.hpp"
#include "rigidcal/rng.hpp"
#include "rigidcal/signal_calib.hpp"
#include "rigidcal/sim.hpp"

namespace {

using namespace rigidcal;

Vec3 unit(CounterRng& rng) {
  return Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
}

std::vector<Correspondence> direction_pairs(std::size_t n) {
  CounterRng rng(1);
  const Mat3 r = Quaternion(0.9, 0.1, -0.3, 0.2).normalized().to_matrix();
  std::vector<Correspondence> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 a = unit(rng);
    pairs.push_back({a, r * a});
  }
  return pairs;
}

void BM_Kabsch(benchmark::State& state) {
  const auto pairs = direction_pairs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kabsch_rotation(pairs));
  }
}
BENCHMARK(BM_Kabsch)->Arg(100)->Arg(1500);

void BM_Davenport(benchmark::State& state) {
  const auto pairs = direction_pairs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(davenport_rotation(pairs));
  }
}
BENCHMARK(BM_Davenport)->Arg(100)->Arg(1500);

void BM_Bvls(benchmark::State& state) {
  CounterRng rng(2);
  const auto rows = state.range(0);
  Eigen::MatrixX3d a(rows, 3);
  Eigen::VectorXd b(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    a.row(i) = unit(rng).transpose();
    b(i) = rng.uniform(-1.0, 1.0);
  }
  const TranslationBounds bounds = TranslationBounds::around(Vec3::Zero(), 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bvls_solve(a, b, {}, bounds, Vec3::Zero()));
  }
}
BENCHMARK(BM_Bvls)->Arg(30)->Arg(1500);

struct SceneClouds {
  PointCloud base;
  PointCloud target;
  RigidTransform truth;
};

const SceneClouds& clouds() {
  static const SceneClouds c = [] {
    const SceneSpec scene = calibration_scene();
    const RigidTransform truth{rot_z(deg2rad(45.0)), Vec3(0.23, 0.075, 0.1), FrameId("L1"), FrameId::base()};
    return SceneClouds{synth_scene(scene, RigidTransform::identity(FrameId::base(), FrameId::base()), 1),
                       synth_scene(scene, truth, 2), truth};
  }();
  return c;
}

void BM_Icp(benchmark::State& state) {
  const SceneClouds& c = clouds();
  RigidTransform seed = c.truth;
  seed.rotation = rot_z(deg2rad(2.0)) * seed.rotation;
  seed.translation += Vec3(0.1, -0.05, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(icp_align(c.target, c.base, seed));
  }
}
BENCHMARK(BM_Icp)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  const SceneClouds& c = clouds();
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_features(c.base));
  }
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
