// Serial reference kernels against their OpenMP counterparts on a full-size
// grid (257x353, K=33, stride 4). Set OMP_NUM_THREADS to vary the thread count.

#include <benchmark/benchmark.h>

#include "pmd/kernels.hpp"
#include "pmd/serial.hpp"

namespace {

struct Fixture {
  pmd::DepthMap gt;
  pmd::SampleSet samples;
  pmd::Selection selection;
  pmd::DepthMap z;

  Fixture() {
    gt = pmd::render_scene(pmd::random_scene(257, 353, 7));
    const auto grid = pmd::make_patch_grid(257, 353, 33, 4);
    samples = pmd::synthesize_samples(gt, grid, 20, pmd::SamplerConfig::ambiguous(7));
    selection.index.assign(grid.patch_count(), 3);
    z = pmd::kernels::mean_depth(samples);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_MeanSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(pmd::serial::mean_depth(fixture().samples));
}
void BM_MeanParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(pmd::kernels::mean_depth(fixture().samples));
}
void BM_VarianceSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(pmd::serial::variance_map(fixture().samples));
}
void BM_VarianceParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(pmd::kernels::variance_map(fixture().samples));
}
void BM_AverageSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(pmd::serial::average_selected(f.samples, f.selection));
}
void BM_AverageParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(pmd::kernels::average_selected(f.samples, f.selection));
}
void BM_SelectSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(pmd::serial::select_samples(f.z, f.samples, nullptr));
}
void BM_SelectParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(pmd::kernels::select_samples(f.z, f.samples, nullptr));
}

BENCHMARK(BM_MeanSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeanParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VarianceSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VarianceParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AverageSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AverageParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SelectSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SelectParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
