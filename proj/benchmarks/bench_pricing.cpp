// End-to-end valuation cost: European pricing, the value-surface fit behind
// hedging, and a small early-exercise valuation.

#include <benchmark/benchmark.h>

#include "tameflow/ampricer.hpp"
#include "tameflow/europricer.hpp"
#include "tameflow/presets.hpp"

using namespace tameflow;

namespace {

void BM_PriceEuropean(benchmark::State& state) {
  const auto m = presets::market_by_name("bs-1stock");
  const auto claim = claims::claim_preset("call");
  const auto paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto res = europricer::price_european(m, claim, 0.0, m.p0, paths, 100, 13);
    benchmark::DoNotOptimize(res.price);
  }
  state.SetItemsProcessed(state.iterations() * paths);
}
BENCHMARK(BM_PriceEuropean)->Arg(1000)->Arg(4000);

void BM_ValueSurface(benchmark::State& state) {
  const auto m = presets::market_by_name("bs-1stock");
  const auto claim = claims::claim_preset("call");
  const auto grid = noise::TimeGrid::uniform(0.0, m.T, 50);
  const auto ens = flow::simulate_ensemble(m, grid, 0.0, m.p0, 2000, 17);
  const Vec totals = europricer::deflated_payoffs(m, ens, claim);
  basis::BasisSpec spec;
  spec.degree = 4;
  for (auto _ : state) {
    auto surf = europricer::fit_value_surface(ens, totals, spec);
    benchmark::DoNotOptimize(&surf);
  }
}
BENCHMARK(BM_ValueSurface);

void BM_PriceAmerican(benchmark::State& state) {
  const auto m = presets::market_by_name("bs-1stock");
  const auto claim = claims::claim_preset("put");
  const auto grid = noise::TimeGrid::uniform(0.0, m.T, 50);
  const auto ens = flow::simulate_ensemble(m, grid, 0.0, m.p0, 2000, 19);
  const auto dates = ampricer::exercise_dates(grid->size(), 11);
  basis::BasisSpec spec;
  spec.degree = 3;
  for (auto _ : state) {
    auto env = ampricer::price_american(m, ens, claim, dates, spec);
    benchmark::DoNotOptimize(env.lower_bound);
  }
}
BENCHMARK(BM_PriceAmerican);

}  // namespace
