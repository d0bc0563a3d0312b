#include <benchmark/benchmark.h>

#include <map>

#include <torch/torch.h>

#include "sim2real/miloss.hpp"
#include "sim2real/rng.hpp"
#include "sim2real/toy_data.hpp"

using namespace sim2real;

namespace {

const PairedSample& scene(int side) {
  static std::map<int, PairedSample> cache;
  auto it = cache.find(side);
  if (it == cache.end()) it = cache.emplace(side, render_toy_scene(ToyStyle::A, side, 5)).first;
  return it->second;
}

void BM_HardMI(benchmark::State& state) {
  const auto& s = scene(static_cast<int>(state.range(0)));
  HistogramSpec spec;
  spec.n_bins = static_cast<int>(state.range(1));
  const auto inten = intensity(s.image);
  for (auto _ : state) benchmark::DoNotOptimize(mutual_information(hard_joint_histogram(s.depth, inten, spec)));
  state.SetItemsProcessed(state.iterations() * s.depth.values().size());
}
BENCHMARK(BM_HardMI)->Args({64, 64})->Args({256, 256});

void BM_SoftMI(benchmark::State& state) {
  const auto& s = scene(static_cast<int>(state.range(0)));
  HistogramSpec spec;
  spec.n_bins = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(soft_mi(s.depth, s.image, spec));
  state.SetItemsProcessed(state.iterations() * s.depth.values().size());
}
BENCHMARK(BM_SoftMI)->Args({64, 64})->Args({128, 256});

// Forward and backward through the differentiable loss on a batch of 4.
void BM_SoftMITensorBackward(benchmark::State& state) {
  torch::manual_seed(0);
  const int side = static_cast<int>(state.range(0));
  HistogramSpec spec;
  spec.n_bins = static_cast<int>(state.range(1));
  const auto bins = depth_bins_tensor(torch::rand({4, side, side}) * 200.0, spec);
  const auto valid = torch::ones({4, side, side}, torch::kBool);
  const auto base = torch::rand({4, 3, side, side});
  for (auto _ : state) {
    auto x = base.clone().requires_grad_(true);
    mi_loss_tensor(bins, valid, x, spec).backward();
    benchmark::DoNotOptimize(x.grad().data_ptr());
  }
}
BENCHMARK(BM_SoftMITensorBackward)->Args({64, 64})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
