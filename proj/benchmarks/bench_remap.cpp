// Timings of the main pipeline stages on level meshes (1 = 2562-node
// icosphere source, 1016-node cubed-sphere target).
#include <benchmark/benchmark.h>

#include "wlsremap/detector.hpp"
#include "wlsremap/fields.hpp"
#include "wlsremap/mesh.hpp"
#include "wlsremap/remap.hpp"

namespace {

wlsr::SurfaceMesh source_mesh(int level) { return wlsr::gen_icosphere(level + 3); }
wlsr::SurfaceMesh target_mesh(int level) { return wlsr::gen_cubed_sphere(13 << (level - 1)); }

void BM_PlanBuild(benchmark::State& state) {
  const auto src = source_mesh(static_cast<int>(state.range(0)));
  const auto tgt = target_mesh(static_cast<int>(state.range(0)));
  wlsr::RemapConfig config;
  config.degree = static_cast<int>(state.range(1));
  for (auto _ : state) {
    wlsr::RemapPlan plan(src, tgt, config);
    benchmark::DoNotOptimize(plan.smooth_operator().nonzeros());
  }
  state.counters["targets"] = static_cast<double>(tgt.num_nodes());
}

void BM_ApplySmooth(benchmark::State& state) {
  const auto src = source_mesh(static_cast<int>(state.range(0)));
  const auto tgt = target_mesh(static_cast<int>(state.range(0)));
  const wlsr::RemapPlan plan(src, tgt);
  const auto f = wlsr::AnalyticField::f1().sample(src);
  for (auto _ : state) benchmark::DoNotOptimize(plan.apply(f).values.data());
}

void BM_ApplyDiscontinuous(benchmark::State& state) {
  const auto src = source_mesh(static_cast<int>(state.range(0)));
  const auto tgt = target_mesh(static_cast<int>(state.range(0)));
  const wlsr::RemapPlan plan(src, tgt);
  const auto f = wlsr::AnalyticField::f3().sample(src);
  for (auto _ : state) benchmark::DoNotOptimize(plan.apply(f).values.data());
}

void BM_AlphaOperator(benchmark::State& state) {
  const auto src = source_mesh(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(wlsr::build_alpha_operator(src).nonzeros());
}

void BM_IntegrationWeights(benchmark::State& state) {
  const auto src = source_mesh(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(wlsr::integration_weights(src, 4).data());
}

}  // namespace

BENCHMARK(BM_PlanBuild)->Args({1, 2})->Args({1, 4})->Args({2, 4})->Args({1, 6})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplySmooth)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyDiscontinuous)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AlphaOperator)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IntegrationWeights)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
