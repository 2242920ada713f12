#include <numeric>

#include <benchmark/benchmark.h>

#include "atal/adversary.hpp"
#include "atal/gridnet.hpp"
#include "atal/rng.hpp"
#include "atal/sampling.hpp"
#include "atal/superpixel.hpp"

namespace {

atal::Image noise(int size, std::uint64_t seed) {
  atal::Image img(size, size, 3);
  atal::SplitMix64 rng(seed);
  for (double& v : img.values()) v = rng.uniform();
  return img;
}

void BM_Forward(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const atal::GridNet m = atal::GridNet::create("grid16", 3, 1);
  const atal::Image x = noise(size, 2);
  for (auto _ : state) benchmark::DoNotOptimize(atal::forward(m, x));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(32)->Arg(64);

void BM_BackwardWeights(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const atal::GridNet m = atal::GridNet::create("grid16", 3, 1);
  const atal::Image x = noise(size, 3);
  std::vector<atal::PixelTarget> targets;
  for (std::size_t i = 0; i < static_cast<std::size_t>(size * size); i += 7) targets.push_back({i, i % 2 ? 1.0 : 0.0});
  for (auto _ : state) benchmark::DoNotOptimize(atal::backward(m, x, targets, atal::GradientParts::weights));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_BackwardWeights)->Arg(16)->Arg(32);

void BM_PgdAttack(benchmark::State& state) {
  const atal::GridNet m = atal::GridNet::create("grid16", 3, 1);
  const atal::Image x = noise(32, 4);
  const atal::ClassMap y = atal::make_pseudo_labels(atal::forward(m, x));
  for (auto _ : state) benchmark::DoNotOptimize(atal::pgd_attack(m, x, y, atal::AttackConfig{}));
}
BENCHMARK(BM_PgdAttack);

void BM_GreedyCover(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  atal::SplitMix64 rng(5);
  std::vector<atal::CandidatePoint> c(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& p = c[static_cast<std::size_t>(i)];
    p.row = i / 64;
    p.col = i % 64;
    p.y = rng.uniform();
    p.x = rng.uniform();
    p.score = rng.uniform();
  }
  for (auto _ : state) benchmark::DoNotOptimize(atal::greedy_cover(c, 40, 0, 64));
}
BENCHMARK(BM_GreedyCover)->Arg(128)->Arg(512);

void BM_Slic(benchmark::State& state) {
  const atal::Image x = noise(static_cast<int>(state.range(0)), 6);
  for (auto _ : state) benchmark::DoNotOptimize(atal::segment(x, atal::SlicParams{}));
}
BENCHMARK(BM_Slic)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
