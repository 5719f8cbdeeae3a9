// Throughput of the path simulator: noise generation, single-path flows and
// whole ensembles on the preset markets.

#include <benchmark/benchmark.h>

#include "tameflow/flow.hpp"
#include "tameflow/presets.hpp"

using namespace tameflow;

namespace {

void BM_NoiseGeneration(benchmark::State& state) {
  const auto steps = static_cast<int>(state.range(0));
  const auto grid = noise::TimeGrid::uniform(0.0, 1.0, steps);
  std::size_t path = 0;
  for (auto _ : state) {
    auto w = noise::generate(grid, 1, 1, path++);
    benchmark::DoNotOptimize(w.increments.data());
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_NoiseGeneration)->Arg(100)->Arg(1000);

void BM_SimulateFlow(benchmark::State& state) {
  const auto m = presets::market_by_name(
      state.range(1) == 0 ? "bs-1stock" : "state-dependent-vol");
  const auto steps = static_cast<int>(state.range(0));
  const auto grid = noise::TimeGrid::uniform(0.0, m.T, steps);
  std::size_t path = 0;
  for (auto _ : state) {
    const auto w = noise::generate(grid, m.d, 1, path++);
    const auto f = flow::simulate_flow(m, w, 0.0, m.p0);
    benchmark::DoNotOptimize(f.prices.data());
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_SimulateFlow)->Args({100, 0})->Args({1000, 0})->Args({100, 1});

void BM_SimulateEnsemble(benchmark::State& state) {
  const auto m = presets::market_by_name("bs-1stock");
  const auto grid = noise::TimeGrid::uniform(0.0, m.T, 100);
  const auto paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    const auto ens = flow::simulate_ensemble(m, grid, 0.0, m.p0, paths, 7);
    benchmark::DoNotOptimize(ens.flows.data());
  }
  state.SetItemsProcessed(state.iterations() * paths);
}
BENCHMARK(BM_SimulateEnsemble)->Arg(256)->Arg(2048);

}  // namespace
