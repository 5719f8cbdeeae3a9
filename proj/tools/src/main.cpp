// Command line front end: one task per invocation, configured by a JSON
// file, results written as CSV plus a JSON summary.
//
//   tameflow run --config exp.json --out results/ [--seed N] [--threads N]
//                [--paths N]
//   tameflow list-presets
//
// Exit codes: 0 success, 2 validation error, 3 pricing refused by the
// arbitrage screen, 4 hedging infeasible, 5 simulation explosion.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tameflow/claims.hpp"
#include "tameflow/config.hpp"
#include "tameflow/errors.hpp"
#include "tameflow/presets.hpp"
#include "tameflow/runner.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_dir,
                std::optional<std::uint64_t> seed,
                std::optional<std::size_t> paths, int threads) {
  tameflow::config::ExperimentConfig cfg;
  std::string digest;
  try {
    cfg = tameflow::config::load_config(config_path);
    digest = tameflow::fnv1a_file_hex(config_path);
  } catch (const std::exception& e) {
    // a config that does not parse produces no output files at all
    std::cerr << "config error: " << e.what() << '\n';
    return tameflow::runner::kExitValidation;
  }

  tameflow::runner::RunOptions opts;
  opts.out_dir = out_dir;
  opts.seed = seed;
  opts.paths = paths;
  opts.threads = threads;
  opts.config_digest = digest;

  const auto result = tameflow::runner::run_task(cfg, opts);
  if (!result.message.empty()) {
    std::cerr << "task failed: " << result.message << '\n';
  }
  if (!result.results_path.empty()) {
    std::cout << "results: " << result.results_path << '\n';
  }
  if (!result.summary_path.empty()) {
    std::cout << "summary: " << result.summary_path << '\n';
  }
  return result.exit_code;
}

int list_presets() {
  std::cout << "markets:\n";
  for (const auto& name : tameflow::presets::market_names()) {
    const auto m = tameflow::presets::market_by_name(name);
    std::cout << "  " << name << "  (n=" << m.n << ", d=" << m.d
              << ", T=" << m.T << ")\n";
  }
  std::cout << "claims:\n";
  for (const auto& name : tameflow::claims::claim_names()) {
    std::cout << "  " << name << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consistent price flow simulation, pricing and hedging"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  int threads = 1;

  auto* run = app.add_subcommand("run", "execute one configured task");
  run->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  run->add_option("--out", out_dir, "output directory")->required();
  auto* seed_opt =
      run->add_option("--seed", seed, "override the config seed");
  auto* paths_opt =
      run->add_option("--paths", paths, "override the config path count");
  run->add_option("--threads", threads, "worker thread cap");

  auto* list = app.add_subcommand("list-presets",
                                  "print built-in markets and claims");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // CLI11 returns 0 for --help; everything else is a usage error
    return code == 0 ? 0 : tameflow::runner::kExitValidation;
  }

  if (list->parsed()) return list_presets();
  return run_command(
      config_path, out_dir,
      seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt,
      paths_opt->count() ? std::optional<std::size_t>(paths) : std::nullopt,
      threads);
}
