#include <benchmark/benchmark.h>

#include <random>

#include "gaitmtl/model.hpp"
#include "gaitmtl/nn/adam.hpp"
#include "gaitmtl/nn/layers.hpp"
#include "gaitmtl/pipeline.hpp"

namespace {

using namespace gaitmtl;

nn::Tensor uniform_batch(std::size_t batch) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  nn::Tensor x({batch, kNumChannels, kRecords});
  for (auto& v : x.values()) v = u(rng);
  return x;
}

void BM_PhaseForward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const Network gpr = build_gpr_model(1);
  const auto x = uniform_batch(batch);
  for (auto _ : state) benchmark::DoNotOptimize(gpr.predict(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PhaseForward)->Arg(1)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_TerrainForward(benchmark::State& state) {
  Network gpr = build_gpr_model(1);
  const Network tc = attach_tc_head(gpr, 1);
  const auto x = uniform_batch(1);
  for (auto _ : state) benchmark::DoNotOptimize(tc.predict(x));
}
BENCHMARK(BM_TerrainForward)->Unit(benchmark::kMicrosecond);

// One mini-batch of phase training: forward, MSE, backward, Adam.
void BM_PhaseTrainStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  Network gpr = build_gpr_model(1);
  const auto x = uniform_batch(batch);
  nn::Tensor target({batch, 2}, 0.5);
  nn::AdamState adam;
  const auto params = gpr.parameters();
  for (auto _ : state) {
    gpr.zero_grad();
    const auto loss = nn::mse_loss(gpr.forward(x, true), target);
    gpr.backward(loss.grad);
    nn::adam_step(params, adam);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PhaseTrainStep)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_MakeInput(benchmark::State& state) {
  WindowConfig w;
  w.duration_s = kAugmentationDurations[static_cast<std::size_t>(state.range(0))];
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Channels raw;
  for (auto& ch : raw) {
    ch.resize(w.window_length());
    for (auto& v : ch) v = n(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(make_input(raw, w));
}
BENCHMARK(BM_MakeInput)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

void BM_Resample(benchmark::State& state) {
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 17);
  for (auto _ : state) benchmark::DoNotOptimize(resample(x, kRecords));
}
BENCHMARK(BM_Resample)->Arg(75)->Arg(85);

}  // namespace

BENCHMARK_MAIN();
