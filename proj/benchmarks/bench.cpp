#include "ephmap/ephemerality.hpp"
#include "ephmap/gicp.hpp"
#include "ephmap/kdtree.hpp"
#include "ephmap/propagation.hpp"
#include "ephmap/rays.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

std::vector<ephmap::Point3> random_cloud(std::size_t n, double extent,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-extent, extent);
  std::vector<ephmap::Point3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back({dist(rng), dist(rng), dist(rng)});
  }
  return pts;
}

void bm_kdtree_build(benchmark::State& state) {
  const auto cloud = random_cloud(std::size_t(state.range(0)), 20.0, 1);
  for (auto _ : state) {
    ephmap::KdIndex index(cloud);
    benchmark::DoNotOptimize(index);
  }
}
BENCHMARK(bm_kdtree_build)->Arg(1000)->Arg(10000)->Arg(100000);

void bm_kdtree_knn(benchmark::State& state) {
  const auto cloud = random_cloud(std::size_t(state.range(0)), 20.0, 2);
  const auto queries = random_cloud(1000, 20.0, 3);
  const ephmap::KdIndex index(cloud);
  std::vector<ephmap::KdIndex::Neighbor> out;
  std::size_t q = 0;
  for (auto _ : state) {
    index.knn(queries[q % queries.size()], 6, out);
    benchmark::DoNotOptimize(out);
    ++q;
  }
}
BENCHMARK(bm_kdtree_knn)->Arg(10000)->Arg(100000);

void bm_fusion(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(0.01, 0.99);
  std::vector<double> values(4096);
  for (double& v : values) v = dist(rng);
  std::size_t i = 0;
  double p = 0.5;
  for (auto _ : state) {
    p = ephmap::bayes_fuse(p, values[i & 4095]);
    benchmark::DoNotOptimize(p);
    ++i;
  }
}
BENCHMARK(bm_fusion);

void bm_kernel(benchmark::State& state) {
  const ephmap::PipelineConfig cfg;
  double x = 0.0;
  for (auto _ : state) {
    const double f =
        ephmap::propagation_kernel(x, ephmap::RayKind::kFreeSpace, cfg);
    benchmark::DoNotOptimize(f);
    x += 0.001;
    if (x > 1.0) x = 0.0;
  }
}
BENCHMARK(bm_kernel);

void bm_gicp_accumulate(benchmark::State& state) {
  const auto target = random_cloud(20000, 10.0, 5);
  ephmap::AttributedPointCloud map;
  for (const auto& p : target) map.points.push_back({p, 0.3, 0.3});
  const ephmap::GicpSettings settings;
  const ephmap::MapModel model(map, settings);
  const auto source = random_cloud(2000, 10.0, 6);
  const auto covs = ephmap::regularized_covariances(
      source, settings.covariance_knn, settings.plane_epsilon);
  for (auto _ : state) {
    const auto ne = ephmap::accumulate_normal_equations(
        model, source, covs, ephmap::Pose::identity(), settings);
    benchmark::DoNotOptimize(ne);
  }
}
BENCHMARK(bm_gicp_accumulate);

}  // namespace

BENCHMARK_MAIN();
