#include "tameflow/runner.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tameflow/ampricer.hpp"
#include "tameflow/errors.hpp"
#include "tameflow/europricer.hpp"
#include "tameflow/presets.hpp"
#include "tameflow/wealth.hpp"

namespace tameflow::runner {

namespace {

using nlohmann::json;

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string digest_of(const std::string& bytes) {
  Fnv1a h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

// all tasks accumulate rows here and only touch the filesystem on success
struct TaskOutput {
  std::string csv;
  json numbers = json::object();
  json screens = json::object();
};

struct Context {
  const config::ExperimentConfig& cfg;
  std::uint64_t seed;
  std::size_t paths;
  int threads;
};

noise::GridPtr task_grid(const Context& ctx) {
  return noise::TimeGrid::uniform(ctx.cfg.task.restart, ctx.cfg.market.T,
                                  ctx.cfg.grid.steps);
}

flow::Ensemble simulate(const Context& ctx, const noise::GridPtr& grid) {
  flow::SimOptions opts;
  opts.kappa_tol = ctx.cfg.tolerances.kappa_tol;
  opts.rank_tol = ctx.cfg.tolerances.rank_tol;
  return flow::simulate_ensemble(ctx.cfg.market, grid, ctx.cfg.task.restart,
                                 ctx.cfg.market.p0, ctx.paths, ctx.seed,
                                 ctx.threads, opts);
}

claims::ClaimSpec make_claim(const Context& ctx) {
  return claims::claim_preset(ctx.cfg.claim.preset, ctx.cfg.claim.params);
}

basis::BasisSpec make_basis(const Context& ctx) {
  basis::BasisSpec spec;
  spec.degree = ctx.cfg.task.basis_degree;
  return spec;
}

TaskOutput run_simulate(const Context& ctx) {
  const auto grid = task_grid(ctx);
  const auto ens = simulate(ctx, grid);
  double kappa_max = 0.0;
  std::size_t flagged = 0;
  for (const auto& f : ens.flows) {
    if (f.exploded) {
      throw Explosion("path exploded during simulation", f.explosion_time);
    }
    kappa_max = std::max(kappa_max, f.kappa_max);
    flagged += f.arbitrage_flag ? 1 : 0;
  }

  TaskOutput out;
  std::ostringstream csv;
  const int n = ctx.cfg.market.n;
  csv << "time";
  for (int i = 0; i <= n; ++i) csv << ",mean_P" << i;
  csv << ",mean_B,mean_Z,mean_H\n";
  const auto& times = grid->times();
  const double inv = 1.0 / static_cast<double>(ens.size());
  for (std::size_t i = 0; i < grid->size(); ++i) {
    Vec mp = Vec::Zero(n + 1);
    double mb = 0.0, mz = 0.0, mh = 0.0;
    for (const auto& f : ens.flows) {
      mp += f.prices.col(i);
      mb += f.B[i];
      mz += f.Z[i];
      mh += f.H[i];
    }
    csv << format_double(times[i]);
    for (int c = 0; c <= n; ++c) csv << ',' << format_double(mp[c] * inv);
    csv << ',' << format_double(mb * inv) << ',' << format_double(mz * inv)
        << ',' << format_double(mh * inv) << '\n';
  }
  out.csv = csv.str();
  out.numbers["kappa_max"] = kappa_max;
  out.numbers["paths_flagged"] = flagged;
  out.screens["arbitrage_flagged"] = flagged > 0;
  return out;
}

TaskOutput run_check_market(const Context& ctx) {
  const auto& m = ctx.cfg.market;
  const auto box = market::default_box(m);
  const auto report = market::is_state_arbitrage_free(
      m, box, ctx.cfg.task.box_samples, ctx.cfg.tolerances.kappa_tol);

  TaskOutput out;
  std::ostringstream csv;
  csv << "quantity,value\n";
  csv << "free," << (report.free ? 1 : 0) << '\n';
  csv << "worst_kappa," << format_double(report.worst_kappa) << '\n';
  csv << "min_rank," << report.min_rank << '\n';
  csv << "max_rank," << report.max_rank << '\n';
  csv << "samples," << report.samples << '\n';
  if (!report.free) {
    // witness: the kernel residual at the worst point is itself the
    // arbitrage portfolio
    const auto rp =
        market::risk_price(m, report.witness_p, report.witness_t,
                           ctx.cfg.tolerances.rank_tol);
    for (int i = 0; i < m.n; ++i) {
      csv << "witness_pi" << (i + 1) << ',' << format_double(rp.kappa[i])
          << '\n';
    }
  }
  out.csv = csv.str();
  out.numbers["worst_kappa"] = report.worst_kappa;
  out.screens["free"] = report.free;
  return out;
}

TaskOutput run_price_eu(const Context& ctx) {
  const auto grid = task_grid(ctx);
  const auto ens = simulate(ctx, grid);
  const auto claim = make_claim(ctx);
  const auto result = europricer::price_european(ctx.cfg.market, ens, claim);

  TaskOutput out;
  std::ostringstream csv;
  csv << "claim,price,se,paths\n";
  csv << claim.id << ',' << format_double(result.price) << ','
      << format_double(result.se) << ',' << result.paths << '\n';
  out.csv = csv.str();
  out.numbers["price"] = result.price;
  out.numbers["se"] = result.se;
  return out;
}

TaskOutput run_hedge_eu(const Context& ctx) {
  const auto grid = task_grid(ctx);
  const auto ens = simulate(ctx, grid);
  const auto claim = make_claim(ctx);
  const auto spec = make_basis(ctx);

  const Vec totals = europricer::deflated_payoffs(ctx.cfg.market, ens, claim);
  const auto result = europricer::price_european(ctx.cfg.market, ens, claim);
  const auto surface = europricer::fit_value_surface(ens, totals, spec);
  const Mat values = europricer::value_matrix(surface, ens);
  const auto screen = europricer::check_martingale(values);
  const auto rep = europricer::estimate_representation(values, ens, spec,
                                                       claim.driving);
  const auto rule =
      europricer::hedge_rule(ctx.cfg.market, rep, ctx.cfg.market.p0[0],
                             ctx.cfg.tolerances.hedge_tol);
  const auto backtest = europricer::replication_backtest(
      ctx.cfg.market, claim, rule, result.price, grid, ctx.cfg.task.restart,
      ctx.cfg.market.p0, ctx.cfg.task.backtest_paths, ctx.seed + 1,
      ctx.threads);

  TaskOutput out;
  std::ostringstream csv;
  csv << "claim,price,se,martingale_pass,worst_z,replication_rmse,"
         "replication_rel\n";
  csv << claim.id << ',' << format_double(result.price) << ','
      << format_double(result.se) << ',' << (screen.passes ? 1 : 0) << ','
      << format_double(screen.worst_z) << ',' << format_double(backtest.rmse)
      << ',' << format_double(backtest.rmse_rel) << '\n';
  out.csv = csv.str();
  out.numbers["price"] = result.price;
  out.numbers["se"] = result.se;
  out.numbers["replication_rmse"] = backtest.rmse;
  out.numbers["replication_rel"] = backtest.rmse_rel;
  out.screens["martingale"] = screen.passes;
  return out;
}

TaskOutput run_price_am(const Context& ctx) {
  const auto grid = task_grid(ctx);
  const auto ens = simulate(ctx, grid);
  const auto claim = make_claim(ctx);
  const auto spec = make_basis(ctx);
  const auto dates =
      ampricer::exercise_dates(grid->size(), ctx.cfg.grid.exercise_dates);
  const auto table =
      ampricer::build_exercise_table(ctx.cfg.market, ens, claim, dates);
  const auto env = ampricer::snell_envelope(table, spec);
  const auto super = ampricer::check_snell_supermartingale(env.envelope);

  TaskOutput out;
  std::ostringstream csv;
  csv << "claim,lower_bound,lower_se,regression_value,regression_se,"
         "supermartingale_pass,worst_margin\n";
  csv << claim.id << ',' << format_double(env.lower_bound) << ','
      << format_double(env.lower_se) << ','
      << format_double(env.regression_value) << ','
      << format_double(env.regression_se) << ',' << (super.passes ? 1 : 0)
      << ',' << format_double(super.worst_margin) << '\n';
  out.csv = csv.str();
  out.numbers["lower_bound"] = env.lower_bound;
  out.numbers["lower_se"] = env.lower_se;
  out.numbers["regression_value"] = env.regression_value;
  out.numbers["regression_se"] = env.regression_se;
  out.screens["supermartingale"] = super.passes;
  return out;
}

TaskOutput run_consistency(const Context& ctx) {
  const auto& m = ctx.cfg.market;
  const double s = ctx.cfg.task.restart;
  const double s_mid = 0.5 * (s + m.T);
  flow::SimOptions opts;
  opts.kappa_tol = ctx.cfg.tolerances.kappa_tol;
  opts.rank_tol = ctx.cfg.tolerances.rank_tol;
  const auto report = flow::check_consistency(
      m, s, s_mid, m.T, m.p0, ctx.cfg.task.consistency_ladder, ctx.paths,
      ctx.seed, ctx.threads, opts);

  TaskOutput out;
  std::ostringstream csv;
  csv << "steps,restart_gap,refine_gap\n";
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    csv << report.steps[i] << ',' << format_double(report.restart_gaps[i])
        << ',';
    if (i > 0) csv << format_double(report.refine_gaps[i - 1]);
    csv << '\n';
  }
  out.csv = csv.str();
  out.numbers["max_restart_gap"] = report.max_restart_gap;
  out.numbers["convergence_slope"] = report.convergence_slope;
  out.screens["flow_property"] = report.max_restart_gap < 1e-10;
  return out;
}

TaskOutput run_cocycle(const Context& ctx) {
  const auto& m = ctx.cfg.market;
  const double s = ctx.cfg.task.restart > 0.0 ? ctx.cfg.task.restart
                                              : 0.5 * m.T;
  const double t = m.T - s;
  flow::SimOptions opts;
  opts.kappa_tol = ctx.cfg.tolerances.kappa_tol;
  opts.rank_tol = ctx.cfg.tolerances.rank_tol;
  const auto report = flow::check_cocycle(
      m, s, t, m.p0, static_cast<std::size_t>(ctx.cfg.grid.steps), ctx.paths,
      ctx.seed, ctx.threads, opts);

  TaskOutput out;
  std::ostringstream csv;
  csv << "quantity,value\n";
  csv << "max_gap," << format_double(report.max_gap) << '\n';
  out.csv = csv.str();
  out.numbers["max_gap"] = report.max_gap;
  out.screens["cocycle"] = report.max_gap < 1e-10;
  return out;
}

TaskOutput run_condition1(const Context& ctx) {
  const auto& m = ctx.cfg.market;
  const auto claim = make_claim(ctx);
  const auto base_steps = static_cast<std::size_t>(ctx.cfg.grid.steps);
  const double dt = m.T / static_cast<double>(base_steps);
  std::vector<double> ladder;
  for (int k : ctx.cfg.task.ladder) ladder.push_back(k * dt);
  const auto report = ampricer::condition1_diagnostic(
      m, claim, 0.0, ctx.cfg.task.gamma, ladder, base_steps,
      ctx.cfg.task.t_eval * m.T, ctx.paths, ctx.seed, ctx.threads);

  TaskOutput out;
  std::ostringstream csv;
  csv << "parameter,exponent,degenerate\n";
  const auto row = [&](const std::string& name, double value,
                       bool degenerate) {
    csv << name << ',' << (degenerate ? "" : format_double(value)) << ','
        << (degenerate ? 1 : 0) << '\n';
  };
  row("restart", report.alpha1, report.alpha1_degenerate);
  row("horizon", report.alpha2, report.alpha2_degenerate);
  row("wealth", report.alpha3, report.alpha3_degenerate);
  for (int c = 0; c < static_cast<int>(report.beta.size()); ++c) {
    row("price" + std::to_string(c), report.beta[c],
        report.beta_degenerate[static_cast<std::size_t>(c)] != 0);
  }
  out.csv = csv.str();
  out.numbers["reciprocal_sum"] = report.reciprocal_sum;
  out.numbers["gamma"] = report.gamma;
  out.screens["satisfied"] = report.satisfied;
  return out;
}

}  // namespace

RunResult run_task(const config::ExperimentConfig& cfg,
                   const RunOptions& opts) {
  RunResult result;
  json summary;
  summary["task"] = cfg.task.name;
  summary["market"] = cfg.market.name;
  summary["claim"] = cfg.claim.preset;
  summary["config_digest"] = opts.config_digest;

  Context ctx{cfg, opts.seed.value_or(cfg.noise.seed),
              opts.paths.value_or(cfg.noise.paths),
              opts.threads > 0 ? opts.threads : 1};
  summary["seed"] = ctx.seed;
  summary["paths"] = ctx.paths;
  summary["threads"] = ctx.threads;

  TaskOutput output;
  try {
    if (cfg.task.name == "simulate") {
      output = run_simulate(ctx);
    } else if (cfg.task.name == "check-market") {
      output = run_check_market(ctx);
    } else if (cfg.task.name == "price-eu") {
      output = run_price_eu(ctx);
    } else if (cfg.task.name == "hedge-eu") {
      output = run_hedge_eu(ctx);
    } else if (cfg.task.name == "price-am") {
      output = run_price_am(ctx);
    } else if (cfg.task.name == "consistency") {
      output = run_consistency(ctx);
    } else if (cfg.task.name == "cocycle") {
      output = run_cocycle(ctx);
    } else if (cfg.task.name == "condition1") {
      output = run_condition1(ctx);
    } else {
      throw InvalidInput("unknown task '" + cfg.task.name + "'");
    }
    result.exit_code = kExitOk;
    summary["status"] = "ok";
  } catch (const PricingRefused& e) {
    result.exit_code = kExitPricingRefused;
    result.message = e.what();
    summary["status"] = "pricing-refused";
  } catch (const HedgingInfeasible& e) {
    result.exit_code = kExitHedgingInfeasible;
    result.message = e.what();
    summary["status"] = "hedging-infeasible";
  } catch (const NoSolution& e) {
    result.exit_code = kExitHedgingInfeasible;
    result.message = e.what();
    summary["status"] = "hedging-infeasible";
  } catch (const Explosion& e) {
    result.exit_code = kExitExplosion;
    result.message = e.what();
    summary["status"] = "explosion";
  } catch (const Error& e) {
    result.exit_code = kExitValidation;
    result.message = e.what();
    summary["status"] = "validation-error";
  } catch (const std::exception& e) {
    result.exit_code = kExitValidation;
    result.message = e.what();
    summary["status"] = "validation-error";
  }

  if (!result.message.empty()) summary["error"] = result.message;
  summary["exit_code"] = result.exit_code;
  summary["numbers"] = output.numbers;
  summary["screens"] = output.screens;
  summary["results_digest"] =
      result.exit_code == kExitOk ? digest_of(output.csv) : "";
  summary["timestamp"] = iso_timestamp();

  std::error_code fs_error;
  std::filesystem::create_directories(opts.out_dir, fs_error);
  if (fs_error) {
    result.exit_code = kExitValidation;
    result.message = "cannot create output directory '" + opts.out_dir + "'";
    return result;
  }

  if (result.exit_code == kExitOk) {
    const auto csv_path =
        (std::filesystem::path(opts.out_dir) / "results.csv").string();
    std::ofstream csv(csv_path, std::ios::binary);
    csv << output.csv;
    if (!csv) {
      result.exit_code = kExitValidation;
      result.message = "cannot write " + csv_path;
      return result;
    }
    result.results_path = csv_path;
  }

  const auto summary_path =
      (std::filesystem::path(opts.out_dir) / "summary.json").string();
  std::ofstream sj(summary_path, std::ios::binary);
  sj << summary.dump(2) << '\n';
  if (sj) result.summary_path = summary_path;
  return result;
}

}  // namespace tameflow::runner
