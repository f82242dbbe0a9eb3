// Microbenchmarks for the hot paths. `srirkit bench` reports the end-to-end
// stage timings; these isolate the building blocks.

#include <benchmark/benchmark.h>

#include "srir/bench.hpp"
#include "srir/image_source.hpp"
#include "srir/metrics.hpp"
#include "srir/nn/model.hpp"
#include "srir/param_synth.hpp"

namespace {

const srir::SceneGraph& box() {
  static const auto s = srir::make_shoebox({6.0, 4.5, 3.0}, srir::uniform_bands(0.8), srir::uniform_bands(0.1));
  return s;
}

const srir::PositionPair kPair{{1.5, 1.2, 1.4}, {4.1, 3.3, 1.7}};

void BM_ComputeLor(benchmark::State& state) {
  const auto [scene, pair] = srir::bench_scene(static_cast<std::size_t>(state.range(0)), 0);
  for (auto _ : state) benchmark::DoNotOptimize(srir::compute_lor(scene, pair));
  state.SetLabel(std::to_string(scene.size()) + " faces");
}
BENCHMARK(BM_ComputeLor)->Arg(12)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SimulateReference(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(srir::simulate_reference(box(), kPair, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_SimulateReference)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Synthesize(benchmark::State& state) {
  const auto lor = srir::compute_lor(box(), kPair);
  const auto params = srir::extract_params(srir::simulate_reference(box(), kPair, 20), lor);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(srir::synthesize(params, lor, seed++));
}
BENCHMARK(BM_Synthesize)->Unit(benchmark::kMillisecond);

void BM_MelSpectrogram(benchmark::State& state) {
  const auto ir = srir::simulate_reference(box(), kPair, 10);
  const auto cfg = state.range(0) == 0 ? srir::MelConfig::spectral() : srir::MelConfig::temporal();
  for (auto _ : state) benchmark::DoNotOptimize(srir::mel_spectrogram(ir, cfg));
}
BENCHMARK(BM_MelSpectrogram)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ModelForward(benchmark::State& state) {
  const srir::nn::ModelConfig cfg;
  const srir::nn::SrirModel model(cfg, 0);
  const auto input = srir::nn::make_input(box(), kPair, srir::compute_lor(box(), kPair), cfg);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(input));
}
BENCHMARK(BM_ModelForward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
