#include <benchmark/benchmark.h>

#include <random>

#include "flowqa/flow.hpp"
#include "flowqa/lpips.hpp"
#include "flowqa/metrics.hpp"
#include "flowqa/nn.hpp"
#include "flowqa/synthetic.hpp"

namespace {

using namespace flowqa;

const WeightArchive& Archive() {
  static const WeightArchive archive = LoadWeightArchive(FLOWQA_BENCH_WEIGHTS);
  return archive;
}

FeatureMap RandomInput(int c, int h, int w, std::mt19937& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  FeatureMap m(c, h, w);
  for (float& v : m.data) v = u(rng);
  return m;
}

ConvWeights RandomWeights(int out, int in, int k, std::mt19937& rng) {
  std::uniform_real_distribution<float> u(-0.1f, 0.1f);
  ConvWeights w{out, in, k, k, std::vector<float>(static_cast<size_t>(out) * in * k * k), std::vector<float>(out)};
  for (float& v : w.weight) v = u(rng);
  for (float& v : w.bias) v = u(rng);
  return w;
}

// args: channels in, spatial side, kernel
void BM_Conv2d(benchmark::State& state) {
  std::mt19937 rng(1);
  const int c = state.range(0), side = state.range(1), k = state.range(2);
  const FeatureMap in = RandomInput(c, side, side, rng);
  const ConvWeights w = RandomWeights(64, c, k, rng);
  for (auto _ : state) benchmark::DoNotOptimize(Conv2d(in, w, 1, k / 2));
}
BENCHMARK(BM_Conv2d)->Args({3, 64, 11})->Args({64, 32, 5})->Args({64, 16, 3})->Unit(benchmark::kMillisecond);

void BM_Conv2dDirect(benchmark::State& state) {
  std::mt19937 rng(1);
  const int c = state.range(0), side = state.range(1), k = state.range(2);
  const FeatureMap in = RandomInput(c, side, side, rng);
  const ConvWeights w = RandomWeights(64, c, k, rng);
  for (auto _ : state) benchmark::DoNotOptimize(Conv2dDirect(in, w, 1, k / 2));
}
BENCHMARK(BM_Conv2dDirect)->Args({64, 16, 3})->Unit(benchmark::kMillisecond);

void BM_EstimateFlow(benchmark::State& state) {
  const int side = state.range(0);
  const TextureCanvas canvas = MakeTextureCanvas(side + 8, side + 8, 3);
  const Frame a = canvas.Window(0, 0, side, side), b = canvas.Window(4, 2, side, side);
  for (auto _ : state) benchmark::DoNotOptimize(EstimateFlow(a, b));
}
BENCHMARK(BM_EstimateFlow)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  const int side = state.range(0);
  const Frame f = MakeTextureCanvas(side, side, 4).Window(0, 0, side, side);
  for (auto _ : state) benchmark::DoNotOptimize(ExtractFeatures(f, Archive()));
}
BENCHMARK(BM_ExtractFeatures)->Arg(96)->Arg(224)->Unit(benchmark::kMillisecond);

void BM_FlolpipsClip(benchmark::State& state) {
  const VideoSequence ref = PanningClip(MakeTextureCanvas(160, 160, 5), 96, 96, 6, 3, 1, 30, 30);
  const VideoSequence dis = PanningClip(MakeTextureCanvas(160, 160, 6), 96, 96, 6, 3, 1, 30, 30);
  const BuiltinFlowProvider flow;
  for (auto _ : state) benchmark::DoNotOptimize(ScoreVideoFlolpips(ref, dis, Archive(), flow, WeightingMode::kDiff));
}
BENCHMARK(BM_FlolpipsClip)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
