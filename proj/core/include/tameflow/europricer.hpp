#pragma once

// European-claim valuation and hedging. Prices are sample means of deflated
// terminal values. Hedges come in three steps that mirror the valuation
// identity: fit the conditional deflated value per grid time (a martingale
// surface), estimate its Brownian representation integrand phi by
// cross-sectional increment regression, then solve the linear system
//     sigma' pi = H^{-1} phi + X theta
// for the minimal-norm holdings. A right hand side outside the traded span
// is the incompleteness signal and raises HedgingInfeasible; the witness
// constructor manufactures exactly such a claim in rank-deficient markets.

#include "tameflow/basis.hpp"
#include "tameflow/claims.hpp"
#include "tameflow/wealth.hpp"

namespace tameflow::europricer {

struct PriceResult {
  double price = 0.0;
  double se = 0.0;
  std::size_t paths = 0;
};

// H(tau) g(0, p(tau)) minus the deflated income accumulation, one entry per
// path. Throws PricingRefused when any path tripped the arbitrage screen
// and Explosion when any path exploded.
Vec deflated_payoffs(const market::MarketSpec& m, const flow::Ensemble& ens,
                     const claims::ClaimSpec& claim);

PriceResult price_european(const market::MarketSpec& m,
                           const flow::Ensemble& ens,
                           const claims::ClaimSpec& claim);

// convenience overload: simulate an ensemble from (s, p) and price on it
PriceResult price_european(const market::MarketSpec& m,
                           const claims::ClaimSpec& claim, double s,
                           const Vec& p, std::size_t n_paths,
                           std::size_t steps, std::uint64_t seed,
                           int threads = 1);

// conditional deflated value fitted per grid time on the state basis
class ValueSurface {
 public:
  ValueSurface(noise::GridPtr grid, basis::FeatureMap features,
               std::vector<basis::Regression> per_time);
  double eval(std::size_t i, const Vec& p, double x) const;
  const noise::GridPtr& grid() const { return grid_; }
  const basis::FeatureMap& features() const { return features_; }
  const basis::Regression& at(std::size_t i) const { return per_time_.at(i); }

 private:
  noise::GridPtr grid_;
  basis::FeatureMap features_;
  std::vector<basis::Regression> per_time_;
};

// regression of the per-path totals on the state at every grid time
ValueSurface fit_value_surface(const flow::Ensemble& ens, const Vec& totals,
                               const basis::BasisSpec& spec);

// fitted surface values over the ensemble, paths x times; X supplies the
// wealth coordinate when the basis includes it
Mat value_matrix(const ValueSurface& surf, const flow::Ensemble& ens,
                 const Mat* X = nullptr);

struct MartingaleScreen {
  bool passes = false;
  double worst_z = 0.0;  // max |mean(Y_t) - mean(Y_0)| / SE(Y_t - Y_0)
};

// sample mean of a deflated value matrix must stay constant in time within
// 3 standard errors of the pathwise difference
MartingaleScreen check_martingale(const Mat& Y);

// Brownian representation integrand phi(t, state), one regression per grid
// interval; components outside the driving set are forced to zero
class RepresentationEstimate {
 public:
  RepresentationEstimate(noise::GridPtr grid, basis::FeatureMap features,
                         std::vector<basis::Regression> per_interval,
                         std::vector<int> driving, int d);
  void eval(std::size_t interval, const Vec& p, double x, Vec& out) const;
  const noise::GridPtr& grid() const { return grid_; }
  const basis::FeatureMap& features() const { return features_; }
  int d() const { return d_; }
  const std::vector<int>& driving() const { return driving_; }

 private:
  noise::GridPtr grid_;
  basis::FeatureMap features_;
  std::vector<basis::Regression> per_interval_;
  std::vector<int> driving_;
  int d_ = 0;
};

// Cross-sectional regression of dY * dW_j / dt on the state basis, per grid
// interval. Y is paths x times; `alive`, when given (paths x (times-1),
// nonzero = include), restricts each fit to rows whose increment still
// belongs to the modeled process. X supplies the wealth coordinate.
RepresentationEstimate estimate_representation(
    const Mat& Y, const flow::Ensemble& ens, const basis::BasisSpec& spec,
    const std::vector<int>& driving = {}, const Mat* X = nullptr,
    const Mat* alive = nullptr);

struct HedgePath {
  noise::GridPtr grid;
  Vec pi0;             // residual stock-0 position per grid time
  Mat pi;              // n x times
  double max_residual = 0.0;  // worst accepted linear-system residual
};

// Solves sigma' pi = H^{-1} phi + X theta at every grid time of one flow
// path (phi is d x times). Throws HedgingInfeasible when the right hand
// side leaves the traded span by more than tol * max(1, |rhs|).
HedgePath synthesize_hedge(const market::MarketSpec& m,
                           const flow::FlowPath& f, const Vec& X,
                           const Mat& phi, double tol = 1e-6);

// State-feedback trading rule built from a representation estimate: at
// (x, p, t) it evaluates phi, forms the right hand side with the deflator
// read off the shadow stock, and solves for the minimal-norm holdings.
wealth::PortfolioRule hedge_rule(const market::MarketSpec& m,
                                 const RepresentationEstimate& rep,
                                 double shadow_ref, double tol = 1e-6);

struct ReplicationReport {
  double price = 0.0;
  double rmse = 0.0;       // RMS of X(T) - payoff
  double rmse_rel = 0.0;   // rmse / price
  double mean_error = 0.0;
  std::size_t paths = 0;
};

// Simulates a fresh ensemble, trades the rule from initial capital `price`,
// and compares terminal wealth with the claim payoff.
ReplicationReport replication_backtest(const market::MarketSpec& m,
                                       const claims::ClaimSpec& claim,
                                       const wealth::PortfolioRule& rule,
                                       double price,
                                       const noise::GridPtr& grid, double s,
                                       const Vec& p, std::size_t n_paths,
                                       std::uint64_t seed, int threads = 1);

enum class WitnessStatus {
  NotHedgeable,        // genuine witness: integrand leaves the traded span
  TriviallyHedgeable,  // selector vanished, the claim degenerates to x
};

struct WitnessResult {
  WitnessStatus status = WitnessStatus::TriviallyHedgeable;
  claims::ClaimSpec claim;  // pays its own wealth, driven by `driving`
  Vec psi;                  // constant integrand of the deflated wealth
  double selector_norm = 0.0;
  double residual = 0.0;    // hedge-system residual at the start state
  std::vector<int> driving;
};

// Builds the non-hedgeability witness for the Brownian components outside
// `complement`: the selector of the complementary volatility block sets the
// integrand's size, its direction comes from the kernel of the driving
// block. Throws WitnessUnavailable when that block has full column rank
// (the market is complete for claims driven by it).
WitnessResult incompleteness_witness(const market::MarketSpec& m,
                                     const std::vector<int>& complement,
                                     double tol = linalg::kDefaultRankTol);

struct WitnessPaths {
  Mat X;  // paths x times, wealth of the witness claim
  Mat Y;  // paths x times, deflated wealth (a martingale by construction)
};

WitnessPaths simulate_witness(const flow::Ensemble& ens, const Vec& psi,
                              double x0);

// CSV columns: time,pi0,pi1..pin,phi1..phid
void write_hedge_csv(const HedgePath& hedge, const Mat& phi,
                     std::ostream& out);

}  // namespace tameflow::europricer
