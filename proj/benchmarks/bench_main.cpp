#include <benchmark/benchmark.h>

#include <cmath>

#include "agcn/audio.hpp"
#include "agcn/graph.hpp"
#include "agcn/ops.hpp"
#include "agcn/runtime.hpp"
#include "agcn/train.hpp"

using namespace agcn;

namespace {

Tensor uniform(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(s));
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// 3x3 conv, channels = range(0), spatial 28x28, batch 1.
void BM_Conv3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = uniform({1, c, 28, 28}, 1), w = uniform({c, c, 3, 3}, 2);
  for (auto _ : state) {
    Tape tape;
    Var y = ops::conv2d(tape.constant(x), tape.constant(w), std::nullopt, 1, 1);
    benchmark::DoNotOptimize(y.value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(2 * c * c * 9 * 28 * 28));
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_LogMel5s(benchmark::State& state) {
  AudioClip clip{std::vector<double>(80000), 16000};
  for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = 0.3 * std::sin(0.07 * static_cast<double>(i));
  for (auto _ : state) benchmark::DoNotOptimize(extract_logmel(clip).values.data().data());
}
BENCHMARK(BM_LogMel5s)->Unit(benchmark::kMillisecond);

void BM_SelectNodes(benchmark::State& state) {
  const Tensor v = uniform({28 * 28}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(select_nodes(v.data(), 28, 28, 20).salient.data());
}
BENCHMARK(BM_SelectNodes);

// One forward+backward training step of the tiny model, batch 8.
void BM_TinyTrainStep(benchmark::State& state) {
  AgcnModel model(AgcnConfig::tiny_visual(4));
  const Tensor x = uniform({8, 3, 48, 48}, 4);
  const std::vector<int> labels{0, 1, 2, 3, 0, 1, 2, 3};
  for (auto _ : state) {
    Tape tape;
    Var loss = ops::softmax_cross_entropy(model.forward(tape, x).logits, labels);
    model.params().zero_grad();
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.value()[0]);
  }
}
BENCHMARK(BM_TinyTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  keep_freed_memory();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
