#pragma once

// Wealth and cumulative-income dynamics financed by a portfolio rule, plus
// the arbitrage-side diagnostics: the gain in excess of bond-financed
// trading, the deflated value process, the empirical state-tameness floor
// and the arbitrage-opportunity screen.
//
// The scheme advances the discounted wealth (Eq form: d(X/B) = B^{-1}dGamma
// + B^{-1}pi'(sigma dW + (b + delta - r 1)dt)), with coefficients and
// holdings frozen at left grid points. Advancing the discounted form makes
// the two computations of the excess gain
//     G = B * sum B^{-1} pi'(sigma dW + (b+delta-r1) dt)      (accumulated)
//     G = X - x B - B * sum B^{-1} dGamma                     (identity)
// agree to rounding, and gives the deflated value process
//     Y = H X - sum H dGamma
// zero drift per step whenever the excess returns are attainable and the
// income carries no theta-aligned volatility.

#include "tameflow/flow.hpp"

namespace tameflow::wealth {

struct PortfolioRule {
  std::string name;
  // currency amounts held in stocks 1..n; the stock-0 position is the
  // remainder X - sum(pi), reported but never an input
  std::function<void(double x, const Vec& p, double t, Vec& out)> pi;
  // income structure; either both or neither of these may be null
  std::function<double(double x, const Vec& p, double t)> income_drift;
  std::function<void(double x, const Vec& p, double t, Vec& out)> income_vol;
};

PortfolioRule zero_rule();
PortfolioRule constant_rule(const Vec& pi);

struct WealthIncomePath {
  noise::GridPtr grid;
  double x0 = 0.0;
  Vec X;      // wealth
  Vec Gamma;  // cumulative income
  Vec G;      // gain in excess of bond-financed trading
  Vec Y;      // deflated value H X - integral of H dGamma
  Vec H;      // deflator copied from the driving flow
  Vec pi0;    // residual stock-0 position at left endpoints
  Mat pi;     // n x size, holdings used over [t_i, t_{i+1})
};

WealthIncomePath simulate_wealth(const market::MarketSpec& m,
                                 const flow::FlowPath& f,
                                 const noise::NoisePath& w,
                                 const PortfolioRule& rule, double x0);

struct WealthEnsemble {
  std::vector<WealthIncomePath> paths;
  std::size_t size() const { return paths.size(); }
};

WealthEnsemble simulate_wealth_ensemble(const market::MarketSpec& m,
                                        const flow::Ensemble& ens,
                                        const PortfolioRule& rule, double x0,
                                        int threads = 1);

// Recomputes G along a path from the identity G = X - x B - B sum B^{-1}
// dGamma; the caller compares it with the accumulated path.G.
Vec gain_in_excess(const flow::FlowPath& f, const WealthIncomePath& wp);

// The constructive arbitrage rule pi = kappa(p, t). When |kappa| <= tol at
// the spot check (p0, 0) and the market is flagged constant, the exact zero
// rule is returned.
PortfolioRule arbitrage_portfolio(const market::MarketSpec& m,
                                  double tol = 1e-12);

struct TamenessReport {
  double inf_HG = 0.0;   // empirical infimum of H G over paths and times
  double floor = -1e6;
  bool tame = false;
};

TamenessReport check_state_tame(const WealthEnsemble& ens,
                                double floor = -1e6);

struct OpportunityReport {
  bool all_nonneg = false;   // H G >= 0 at t on every path
  double frac_positive = 0;  // fraction of paths with H G > 0 at t
  bool opportunity = false;  // all_nonneg and frac_positive > 0
};

// Screens the deflated excess gain at one grid time (index into the grid).
OpportunityReport check_arbitrage_opportunity(const WealthEnsemble& ens,
                                              std::size_t time_index);

// CSV columns: time,meanY,seY,infHG
void write_summary_csv(const WealthEnsemble& ens, std::ostream& out);

}  // namespace tameflow::wealth
