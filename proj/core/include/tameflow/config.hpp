// Experiment configuration: one JSON file with market / grid / noise / task /
// claim / tolerances sections, markets given either by preset name or by
// coefficient expressions over (p0..pn, t).
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tameflow/claims.hpp"
#include "tameflow/market.hpp"

namespace tameflow::config {

struct GridSection {
  int steps = 200;
  std::size_t exercise_dates = 50;  // price-am only
};

struct NoiseSection {
  std::uint64_t seed = 1;
  std::size_t paths = 10000;
};

struct TaskSection {
  std::string name = "simulate";  // simulate | check-market | price-eu |
                                  // hedge-eu | price-am | consistency |
                                  // cocycle | condition1
  double restart = 0.0;           // start time s
  int basis_degree = 4;
  std::size_t box_samples = 4096;       // check-market
  std::size_t backtest_paths = 2000;    // hedge-eu
  double gamma = 2.0;                   // condition1
  double t_eval = 0.5;                  // condition1, in units of T
  std::vector<int> ladder = {1, 2, 4, 8, 16};  // condition1, in grid steps
  std::vector<std::size_t> consistency_ladder = {100, 200, 400};
};

struct ClaimSection {
  std::string preset = "call";
  claims::ClaimParams params;
};

struct ToleranceSection {
  double kappa_tol = 1e-8;
  double rank_tol = 1e-10;
  double hedge_tol = 1e-6;
  double martingale_z = 3.0;
  double domination_slack_frac = 0.05;
};

struct ExperimentConfig {
  market::MarketSpec market;
  std::string market_preset;  // empty when the market came from expressions
  GridSection grid;
  NoiseSection noise;
  TaskSection task;
  ClaimSection claim;
  ToleranceSection tolerances;
};

// parse + validate; throws InvalidInput on malformed or inconsistent input
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

}  // namespace tameflow::config
