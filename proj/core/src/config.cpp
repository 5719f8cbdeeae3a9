#include "tameflow/config.hpp"

#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "tameflow/errors.hpp"
#include "tameflow/expr.hpp"
#include "tameflow/presets.hpp"

namespace tameflow::config {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw InvalidInput(what); }

const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_number(const json& j, const char* key, double fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number()) bad(std::string("'") + key + "' must be a number");
  return v->get<double>();
}

std::int64_t get_integer(const json& j, const char* key,
                         std::int64_t fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) {
    bad(std::string("'") + key + "' must be an integer");
  }
  return v->get<std::int64_t>();
}

std::string get_string(const json& j, const char* key,
                       const std::string& fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_string()) bad(std::string("'") + key + "' must be a string");
  return v->get<std::string>();
}

// coefficient entries may be numbers or expression strings
expr::Expression parse_coefficient(const json& v, int n, const char* where) {
  if (v.is_number()) {
    return expr::Expression::parse(std::to_string(v.get<double>()), n);
  }
  if (v.is_string()) return expr::Expression::parse(v.get<std::string>(), n);
  bad(std::string(where) + " entries must be numbers or expression strings");
}

market::MarketSpec market_from_expressions(const json& jm) {
  const auto n = static_cast<int>(get_integer(jm, "n", 0));
  const auto d = static_cast<int>(get_integer(jm, "d", 0));
  if (n < 1 || d < 1) bad("market needs n >= 1 stocks and d >= 1 factors");

  const json* jb = find(jm, "b");
  const json* jsigma = find(jm, "sigma");
  const json* jp0 = find(jm, "p0");
  if (!jb || !jb->is_array() || static_cast<int>(jb->size()) != n) {
    bad("market 'b' must be an array of n entries");
  }
  if (!jsigma || !jsigma->is_array() ||
      static_cast<int>(jsigma->size()) != n) {
    bad("market 'sigma' must be an array of n rows");
  }
  if (!jp0 || !jp0->is_array() || static_cast<int>(jp0->size()) != n + 1) {
    bad("market 'p0' must list the n+1 initial prices, shadow stock first");
  }

  auto b_exprs = std::make_shared<std::vector<expr::Expression>>();
  for (const json& v : *jb) b_exprs->push_back(parse_coefficient(v, n, "'b'"));

  auto sigma_exprs =
      std::make_shared<std::vector<std::vector<expr::Expression>>>();
  for (const json& row : *jsigma) {
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      bad("each 'sigma' row must list d entries");
    }
    std::vector<expr::Expression> cells;
    for (const json& v : row) cells.push_back(parse_coefficient(v, n, "'sigma'"));
    sigma_exprs->push_back(std::move(cells));
  }

  auto delta_exprs = std::make_shared<std::vector<expr::Expression>>();
  if (const json* jdelta = find(jm, "delta")) {
    if (!jdelta->is_array() || static_cast<int>(jdelta->size()) != n) {
      bad("market 'delta' must be an array of n entries");
    }
    for (const json& v : *jdelta) {
      delta_exprs->push_back(parse_coefficient(v, n, "'delta'"));
    }
  } else {
    for (int i = 0; i < n; ++i) {
      delta_exprs->push_back(expr::Expression::parse("0", n));
    }
  }

  auto r_expr = std::make_shared<expr::Expression>(
      find(jm, "r") ? parse_coefficient(*find(jm, "r"), n, "'r'")
                    : expr::Expression::parse("0", n));

  bool uses_time = r_expr->uses_time();
  bool uses_price = r_expr->uses_price();
  const auto absorb = [&](const expr::Expression& e) {
    uses_time = uses_time || e.uses_time();
    uses_price = uses_price || e.uses_price();
  };
  for (const auto& e : *b_exprs) absorb(e);
  for (const auto& e : *delta_exprs) absorb(e);
  for (const auto& row : *sigma_exprs) {
    for (const auto& e : row) absorb(e);
  }

  market::MarketSpec m;
  m.n = n;
  m.d = d;
  m.T = get_number(jm, "T", 1.0);
  m.name = get_string(jm, "name", "config-market");
  m.autonomous = !uses_time;
  m.constant_coefficients = !uses_time && !uses_price;
  m.p0.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    const json& v = (*jp0)[static_cast<std::size_t>(i)];
    if (!v.is_number()) bad("'p0' entries must be numbers");
    m.p0[i] = v.get<double>();
  }
  m.b = [b_exprs](const Vec& p, double t, Vec& out) {
    for (std::size_t i = 0; i < b_exprs->size(); ++i) {
      out[static_cast<Eigen::Index>(i)] = (*b_exprs)[i].eval(p, t);
    }
  };
  m.delta = [delta_exprs](const Vec& p, double t, Vec& out) {
    for (std::size_t i = 0; i < delta_exprs->size(); ++i) {
      out[static_cast<Eigen::Index>(i)] = (*delta_exprs)[i].eval(p, t);
    }
  };
  m.sigma = [sigma_exprs](const Vec& p, double t, Mat& out) {
    for (std::size_t i = 0; i < sigma_exprs->size(); ++i) {
      const auto& row = (*sigma_exprs)[i];
      for (std::size_t j = 0; j < row.size(); ++j) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            row[j].eval(p, t);
      }
    }
  };
  m.r = [r_expr](const Vec& p, double t) { return r_expr->eval(p, t); };
  return m;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) bad("config is not valid JSON");
  if (!root.is_object()) bad("config root must be an object");

  ExperimentConfig cfg;

  const json* jm = find(root, "market");
  if (!jm || !jm->is_object()) bad("config needs a 'market' section");
  if (const json* preset = find(*jm, "preset")) {
    if (!preset->is_string()) bad("market 'preset' must be a string");
    cfg.market_preset = preset->get<std::string>();
    cfg.market = presets::market_by_name(cfg.market_preset);
    cfg.market.T = get_number(*jm, "T", cfg.market.T);
  } else {
    cfg.market = market_from_expressions(*jm);
  }
  market::validate_spec(cfg.market);

  if (const json* jg = find(root, "grid")) {
    if (!jg->is_object()) bad("'grid' must be an object");
    cfg.grid.steps = static_cast<int>(
        get_integer(*jg, "steps", cfg.grid.steps));
    cfg.grid.exercise_dates = static_cast<std::size_t>(get_integer(
        *jg, "exercise_dates",
        static_cast<std::int64_t>(cfg.grid.exercise_dates)));
  }
  if (cfg.grid.steps < 1) bad("'grid.steps' must be positive");
  if (cfg.grid.exercise_dates < 1) bad("'grid.exercise_dates' must be positive");

  if (const json* jn = find(root, "noise")) {
    if (!jn->is_object()) bad("'noise' must be an object");
    const std::int64_t seed = get_integer(
        *jn, "seed", static_cast<std::int64_t>(cfg.noise.seed));
    if (seed < 0) bad("'noise.seed' must be non-negative");
    cfg.noise.seed = static_cast<std::uint64_t>(seed);
    const std::int64_t paths = get_integer(
        *jn, "paths", static_cast<std::int64_t>(cfg.noise.paths));
    if (paths < 2) bad("'noise.paths' must be at least 2");
    cfg.noise.paths = static_cast<std::size_t>(paths);
  }

  if (const json* jt = find(root, "task")) {
    if (!jt->is_object()) bad("'task' must be an object");
    cfg.task.name = get_string(*jt, "name", cfg.task.name);
    cfg.task.restart = get_number(*jt, "restart", cfg.task.restart);
    cfg.task.basis_degree = static_cast<int>(
        get_integer(*jt, "basis_degree", cfg.task.basis_degree));
    cfg.task.box_samples = static_cast<std::size_t>(get_integer(
        *jt, "box_samples",
        static_cast<std::int64_t>(cfg.task.box_samples)));
    cfg.task.backtest_paths = static_cast<std::size_t>(get_integer(
        *jt, "backtest_paths",
        static_cast<std::int64_t>(cfg.task.backtest_paths)));
    cfg.task.gamma = get_number(*jt, "gamma", cfg.task.gamma);
    cfg.task.t_eval = get_number(*jt, "t_eval", cfg.task.t_eval);
    if (const json* jl = find(*jt, "ladder")) {
      if (!jl->is_array() || jl->empty()) bad("'task.ladder' must be an array");
      cfg.task.ladder.clear();
      for (const json& v : *jl) {
        if (!v.is_number_integer()) bad("'task.ladder' holds step counts");
        cfg.task.ladder.push_back(static_cast<int>(v.get<std::int64_t>()));
      }
    }
    if (const json* jl = find(*jt, "consistency_ladder")) {
      if (!jl->is_array() || jl->size() < 2) {
        bad("'task.consistency_ladder' needs at least two levels");
      }
      cfg.task.consistency_ladder.clear();
      for (const json& v : *jl) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 2) {
          bad("'task.consistency_ladder' holds step counts");
        }
        cfg.task.consistency_ladder.push_back(
            static_cast<std::size_t>(v.get<std::int64_t>()));
      }
    }
  }
  static const char* kTasks[] = {"simulate",    "check-market", "price-eu",
                                 "hedge-eu",    "price-am",     "consistency",
                                 "cocycle",     "condition1"};
  bool known = false;
  for (const char* t : kTasks) known = known || cfg.task.name == t;
  if (!known) bad("unknown task '" + cfg.task.name + "'");
  if (cfg.task.restart < 0.0 || cfg.task.restart >= cfg.market.T) {
    bad("'task.restart' must lie in [0, T)");
  }
  if (cfg.task.basis_degree < 1 || cfg.task.basis_degree > 8) {
    bad("'task.basis_degree' must lie in [1, 8]");
  }

  if (const json* jc = find(root, "claim")) {
    if (!jc->is_object()) bad("'claim' must be an object");
    cfg.claim.preset = get_string(*jc, "preset", cfg.claim.preset);
    cfg.claim.params.strike =
        get_number(*jc, "strike", cfg.claim.params.strike);
    cfg.claim.params.barrier =
        get_number(*jc, "barrier", cfg.claim.params.barrier);
    cfg.claim.params.cash = get_number(*jc, "cash", cfg.claim.params.cash);
  }
  {
    bool claim_known = false;
    for (const auto& name : claims::claim_names()) {
      claim_known = claim_known || name == cfg.claim.preset;
    }
    if (!claim_known) bad("unknown claim preset '" + cfg.claim.preset + "'");
  }

  if (const json* jtol = find(root, "tolerances")) {
    if (!jtol->is_object()) bad("'tolerances' must be an object");
    cfg.tolerances.kappa_tol =
        get_number(*jtol, "kappa_tol", cfg.tolerances.kappa_tol);
    cfg.tolerances.rank_tol =
        get_number(*jtol, "rank_tol", cfg.tolerances.rank_tol);
    cfg.tolerances.hedge_tol =
        get_number(*jtol, "hedge_tol", cfg.tolerances.hedge_tol);
    cfg.tolerances.martingale_z =
        get_number(*jtol, "martingale_z", cfg.tolerances.martingale_z);
    cfg.tolerances.domination_slack_frac = get_number(
        *jtol, "domination_slack_frac", cfg.tolerances.domination_slack_frac);
  }
  for (double tol : {cfg.tolerances.kappa_tol, cfg.tolerances.rank_tol,
                     cfg.tolerances.hedge_tol, cfg.tolerances.martingale_z,
                     cfg.tolerances.domination_slack_frac}) {
    if (!(tol > 0.0)) bad("tolerances must be positive");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace tameflow::config
