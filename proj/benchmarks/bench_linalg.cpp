// Cost of the pointwise linear algebra on the pricing hot path: the kernel
// split, the minimal-norm solve and the full risk-price evaluation.

#include <benchmark/benchmark.h>

#include <random>

#include "tameflow/linalg.hpp"
#include "tameflow/market.hpp"
#include "tameflow/presets.hpp"

using namespace tameflow;

namespace {

Mat random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Mat A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = normal(rng);
  return A;
}

void BM_ProjectKernel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Mat A = random_matrix(n, n, 3);
  const Vec v = random_matrix(n, 1, 5).col(0);
  for (auto _ : state) {
    auto split = linalg::project_kernel(A, v);
    benchmark::DoNotOptimize(split.v_ker.data());
  }
}
BENCHMARK(BM_ProjectKernel)->Arg(2)->Arg(8)->Arg(32);

void BM_MinNormSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Mat sigma = random_matrix(n, n, 7);
  const Vec rhs = sigma * random_matrix(n, 1, 11).col(0);
  for (auto _ : state) {
    auto theta = linalg::solve_min_norm_rowspace(sigma, rhs);
    benchmark::DoNotOptimize(theta.data());
  }
}
BENCHMARK(BM_MinNormSolve)->Arg(2)->Arg(8)->Arg(32);

void BM_RiskPrice(benchmark::State& state) {
  const auto m = presets::market_by_name(
      state.range(0) == 0 ? "bs-1stock" : "kappa-arbitrage");
  for (auto _ : state) {
    auto rp = market::risk_price(m, m.p0, 0.5);
    benchmark::DoNotOptimize(rp.theta.data());
  }
}
BENCHMARK(BM_RiskPrice)->Arg(0)->Arg(1);

}  // namespace
