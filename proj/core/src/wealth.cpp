#include "tameflow/wealth.hpp"

#include <cmath>
#include <mutex>
#include <ostream>

#include "tameflow/errors.hpp"
#include "tameflow/util.hpp"

namespace tameflow::wealth {

namespace {

void require_income_shape(const PortfolioRule& rule) {
  const bool has_drift = static_cast<bool>(rule.income_drift);
  const bool has_vol = static_cast<bool>(rule.income_vol);
  if (has_drift != has_vol) {
    throw InvalidInput("portfolio rule '" + rule.name +
                       "' defines only one half of the income structure");
  }
}

}  // namespace

PortfolioRule zero_rule() {
  PortfolioRule rule;
  rule.name = "zero";
  rule.pi = [](double, const Vec&, double, Vec& out) { out.setZero(); };
  return rule;
}

PortfolioRule constant_rule(const Vec& pi) {
  if (!pi.allFinite()) {
    throw InvalidInput("constant_rule: holdings must be finite");
  }
  PortfolioRule rule;
  rule.name = "constant";
  rule.pi = [pi](double, const Vec&, double, Vec& out) { out = pi; };
  return rule;
}

WealthIncomePath simulate_wealth(const market::MarketSpec& m,
                                 const flow::FlowPath& f,
                                 const noise::NoisePath& w,
                                 const PortfolioRule& rule, double x0) {
  require_income_shape(rule);
  if (!rule.pi) throw InvalidInput("portfolio rule has no holdings callback");
  if (f.exploded) throw Explosion("flow path exploded", f.explosion_time);
  if (!f.grid || f.valid_states != f.size()) {
    throw InvalidInput("simulate_wealth needs a complete flow path");
  }
  if (w.increments.rows() + 1 != static_cast<Eigen::Index>(f.size()) ||
      w.d != m.d) {
    throw InvalidInput("noise path does not match the flow grid");
  }

  const std::size_t size = f.size();
  const auto& times = f.grid->times();
  const bool has_income = static_cast<bool>(rule.income_drift);

  WealthIncomePath wp;
  wp.grid = f.grid;
  wp.x0 = x0;
  wp.X.resize(size);
  wp.Gamma = Vec::Zero(size);
  wp.G.resize(size);
  wp.Y.resize(size);
  wp.H = f.H;
  wp.pi0.resize(size);
  wp.pi.resize(m.n, size);

  market::Coeffs coeffs;
  if (m.constant_coefficients) {
    market::eval_coeffs(m, f.start, times.front(), coeffs);
  }

  // the discounted wealth X/B and the two running integrals behind G and Y
  double disc = x0;
  double excess_int = 0.0;  // sum of B^{-1} pi'(sigma dW + excess dt)
  double income_defl = 0.0; // sum of H dGamma

  Vec pi(m.n), sig_vol(m.d), inc_vol(has_income ? m.d : 0);
  wp.X[0] = x0;
  wp.G[0] = 0.0;
  wp.Y[0] = x0;  // H starts at 1

  for (std::size_t i = 0; i + 1 < size; ++i) {
    const double t = times[i];
    const double dt = times[i + 1] - times[i];
    const Vec p = f.prices.col(i);
    const double x = wp.X[i];
    if (!m.constant_coefficients) market::eval_coeffs(m, p, t, coeffs);

    rule.pi(x, p, t, pi);
    if (!pi.allFinite()) {
      throw ModelEvaluation("portfolio rule returned a non-finite holding at t=" +
                            format_double(t));
    }
    wp.pi.col(i) = pi;
    wp.pi0[i] = x - pi.sum();

    // pi' sigma dW + pi'(b + delta - r 1) dt, Brownian part first
    sig_vol.noalias() = coeffs.sigma.transpose() * pi;
    const double d_excess =
        sig_vol.dot(w.increments.row(i)) +
        pi.dot(coeffs.b + coeffs.delta - Vec::Constant(m.n, coeffs.r)) * dt;

    double d_gamma = 0.0;
    if (has_income) {
      rule.income_vol(x, p, t, inc_vol);
      d_gamma = rule.income_drift(x, p, t) * dt +
                inc_vol.dot(w.increments.row(i));
      if (!std::isfinite(d_gamma)) {
        throw ModelEvaluation("income stream returned a non-finite value at t=" +
                              format_double(t));
      }
    }

    const double inv_b = 1.0 / f.B[i];
    disc += inv_b * (d_gamma + d_excess);
    excess_int += inv_b * d_excess;
    income_defl += f.H[i] * d_gamma;

    wp.X[i + 1] = f.B[i + 1] * disc;
    wp.G[i + 1] = f.B[i + 1] * excess_int;
    wp.Gamma[i + 1] = wp.Gamma[i] + d_gamma;
    wp.Y[i + 1] = f.H[i + 1] * wp.X[i + 1] - income_defl;
    if (!std::isfinite(wp.X[i + 1])) {
      throw ModelEvaluation("wealth became non-finite at t=" +
                            format_double(times[i + 1]));
    }
  }

  // trailing holdings are cosmetic: nothing is traded after the last time
  rule.pi(wp.X[size - 1], f.prices.col(size - 1), times[size - 1], pi);
  wp.pi.col(size - 1) = pi.allFinite() ? pi : Vec::Zero(m.n).eval();
  wp.pi0[size - 1] = wp.X[size - 1] - wp.pi.col(size - 1).sum();
  return wp;
}

WealthEnsemble simulate_wealth_ensemble(const market::MarketSpec& m,
                                        const flow::Ensemble& ens,
                                        const PortfolioRule& rule, double x0,
                                        int threads) {
  if (ens.noise.size() != ens.flows.size()) {
    throw InvalidInput("ensemble noise and flow counts differ");
  }
  WealthEnsemble out;
  out.paths.resize(ens.size());
  std::exception_ptr first_error;
  std::mutex error_lock;
  parallel_for(ens.size(), threads, [&](std::size_t lo, std::size_t hi) {
    try {
      for (std::size_t k = lo; k < hi; ++k) {
        out.paths[k] = simulate_wealth(m, ens.flows[k], ens.noise[k], rule, x0);
      }
    } catch (...) {
      std::lock_guard<std::mutex> guard(error_lock);
      if (!first_error) first_error = std::current_exception();
    }
  });
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

Vec gain_in_excess(const flow::FlowPath& f, const WealthIncomePath& wp) {
  if (f.size() != static_cast<std::size_t>(wp.X.size())) {
    throw InvalidInput("gain_in_excess: flow and wealth grids differ");
  }
  const std::size_t size = f.size();
  Vec g(size);
  double income_disc = 0.0;  // sum of B^{-1} dGamma
  g[0] = 0.0;
  for (std::size_t i = 0; i + 1 < size; ++i) {
    income_disc += (wp.Gamma[i + 1] - wp.Gamma[i]) / f.B[i];
    g[i + 1] = wp.X[i + 1] - wp.x0 * f.B[i + 1] - f.B[i + 1] * income_disc;
  }
  return g;
}

PortfolioRule arbitrage_portfolio(const market::MarketSpec& m, double tol) {
  market::validate_spec(m);
  PortfolioRule rule;
  rule.name = "arbitrage";
  if (m.constant_coefficients) {
    const auto rp = market::risk_price(m, m.p0, 0.0);
    if (rp.kappa_norm <= tol) return zero_rule();
    const Vec kappa = rp.kappa;
    rule.pi = [kappa](double, const Vec&, double, Vec& out) { out = kappa; };
    return rule;
  }
  market::MarketSpec local = m;
  rule.pi = [local, tol](double, const Vec& p, double t, Vec& out) {
    const auto rp = market::risk_price(local, p, t);
    out = rp.kappa_norm <= tol ? Vec::Zero(local.n).eval() : rp.kappa;
  };
  return rule;
}

TamenessReport check_state_tame(const WealthEnsemble& ens, double floor) {
  TamenessReport rep;
  rep.floor = floor;
  rep.inf_HG = 0.0;  // H G starts at zero on every path
  for (const auto& wp : ens.paths) {
    const Eigen::Index size = wp.G.size();
    for (Eigen::Index i = 0; i < size; ++i) {
      const double hg = wp.H[i] * wp.G[i];
      if (hg < rep.inf_HG) rep.inf_HG = hg;
    }
  }
  rep.tame = rep.inf_HG >= floor;
  return rep;
}

OpportunityReport check_arbitrage_opportunity(const WealthEnsemble& ens,
                                              std::size_t time_index) {
  if (ens.paths.empty()) throw InvalidInput("empty wealth ensemble");
  OpportunityReport rep;
  rep.all_nonneg = true;
  std::size_t positive = 0;
  for (const auto& wp : ens.paths) {
    if (time_index >= static_cast<std::size_t>(wp.G.size())) {
      throw InvalidInput("check_arbitrage_opportunity: time index out of range");
    }
    const double hg = wp.H[time_index] * wp.G[time_index];
    if (hg < 0.0) rep.all_nonneg = false;
    if (hg > 0.0) ++positive;
  }
  rep.frac_positive = static_cast<double>(positive) / ens.paths.size();
  rep.opportunity = rep.all_nonneg && positive > 0;
  return rep;
}

void write_summary_csv(const WealthEnsemble& ens, std::ostream& out) {
  if (ens.paths.empty()) throw InvalidInput("empty wealth ensemble");
  const auto& grid = *ens.paths.front().grid;
  out << "time,mean_Y,se_Y,inf_HG\n";
  std::vector<double> y(ens.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double inf_hg = 0.0;
    for (std::size_t k = 0; k < ens.size(); ++k) {
      const auto& wp = ens.paths[k];
      y[k] = wp.Y[i];
      const double hg = wp.H[i] * wp.G[i];
      if (hg < inf_hg) inf_hg = hg;
    }
    const auto ms = mean_se(y);
    out << format_double(grid.times()[i]) << ','
        << format_double(ms.mean) << ',' << format_double(ms.se)
        << ',' << format_double(inf_hg) << '\n';
  }
}

}  // namespace tameflow::wealth
