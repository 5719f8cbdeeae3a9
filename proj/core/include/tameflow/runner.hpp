// Task execution behind the command line: runs one configured operation and
// writes results.csv plus summary.json into an output directory.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tameflow/config.hpp"

namespace tameflow::runner {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitPricingRefused = 3;
inline constexpr int kExitHedgingInfeasible = 4;
inline constexpr int kExitExplosion = 5;

struct RunOptions {
  std::string out_dir;
  std::optional<std::uint64_t> seed;   // overrides the config
  std::optional<std::size_t> paths;    // overrides the config
  int threads = 1;
  std::string config_digest;           // hash of the raw config bytes
};

struct RunResult {
  int exit_code = kExitOk;
  std::string message;       // empty on success
  std::string results_path;  // empty when no results were written
  std::string summary_path;
};

// Executes cfg.task. results.csv is only written when the task completes;
// summary.json is written even on failure (with the error recorded), so a
// caller always has a machine-readable outcome. Never throws.
RunResult run_task(const config::ExperimentConfig& cfg, const RunOptions& opts);

}  // namespace tameflow::runner
