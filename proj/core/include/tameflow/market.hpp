#pragma once

// Market description and its pointwise diagnostics. A market is n traded
// stocks plus the numeraire-like stock 0 whose price encodes the deflator,
// driven by d Brownian components. Coefficients are callbacks of the full
// augmented price vector p = (p_0, ..., p_n) and time.
//
// risk_price splits the excess-return vector b + delta - r*1 against the
// volatility matrix: the attainable part yields the market price of risk
// theta (minimal-norm, orthogonal to Ker(sigma)); the orthogonal remainder
// kappa is the arbitrage residual. The market is free of state arbitrage on
// a region exactly when kappa vanishes there.

#include <functional>
#include <string>

#include "tameflow/linalg.hpp"
#include "tameflow/util.hpp"

namespace tameflow::market {

// callbacks fill caller-owned buffers to keep the hot simulation loop free
// of per-call allocations
using DriftFn = std::function<void(const Vec& p, double t, Vec& out)>;    // n
using VolFn = std::function<void(const Vec& p, double t, Mat& out)>;      // n x d
using RateFn = std::function<double(const Vec& p, double t)>;

struct MarketSpec {
  int n = 0;  // traded stocks (excluding stock 0)
  int d = 0;  // Brownian components
  DriftFn b;
  VolFn sigma;
  DriftFn delta;  // dividend intensities
  RateFn r;
  Vec p0;    // initial augmented prices, size n+1, strictly positive
  double T = 1.0;
  bool autonomous = false;            // coefficients ignore t
  bool constant_coefficients = false; // coefficients ignore (p, t)
  std::string name;
};

// basic shape/positivity validation; throws InvalidInput
void validate_spec(const MarketSpec& m);

// one coefficient evaluation, reused across steps as scratch
struct Coeffs {
  Vec b;
  Vec delta;
  Mat sigma;
  double r = 0.0;
};

// evaluates all coefficient fields at (p, t); throws ModelEvaluation if any
// entry comes back non-finite
void eval_coeffs(const MarketSpec& m, const Vec& p, double t, Coeffs& out);

struct RiskPrice {
  Vec theta;          // in Range(sigma'), minimal norm
  Vec kappa;          // component of b + delta - r*1 in Ker(sigma')
  Eigen::Index rank = 0;
  double kappa_norm = 0.0;
};

// tol is the relative rank tolerance of the underlying decomposition
RiskPrice risk_price(const MarketSpec& m, const Vec& p, double t,
                     double tol = linalg::kDefaultRankTol);

// sampling region over the augmented price box and a time window
struct Box {
  Vec lo;  // size n+1, strictly positive
  Vec hi;
  double t_lo = 0.0;
  double t_hi = 1.0;
};

// [lo, hi] = [scale_lo, scale_hi] * p0 componentwise, t in [0, T]
Box default_box(const MarketSpec& m, double scale_lo = 0.5,
                double scale_hi = 2.0);

struct ArbitrageReport {
  bool free = false;
  double worst_kappa = 0.0;
  Vec witness_p;        // sample point attaining worst_kappa
  double witness_t = 0.0;
  Eigen::Index min_rank = 0;  // rank variation across the box is a
  Eigen::Index max_rank = 0;  // regularity warning for downstream users
  std::size_t samples = 0;
};

// Low-discrepancy sweep of the box; free iff max |kappa| <= tol everywhere
// sampled. This is a screen, not a proof: it reports the worst sample.
ArbitrageReport is_state_arbitrage_free(const MarketSpec& m, const Box& box,
                                        std::size_t samples = 4096,
                                        double tol = 1e-8);

struct CompletenessReport {
  bool complete = false;
  std::size_t k = 0;          // requested column count
  Eigen::Index min_rank = 0;
  Eigen::Index max_rank = 0;
  Vec witness_p;              // sample point attaining min_rank
  double witness_t = 0.0;
  std::size_t samples = 0;
};

// Sampled rank of the column submatrix sigma_{indices} (0-based Brownian
// component indices); complete iff rank == indices.size() at every sample.
CompletenessReport completeness_check(const MarketSpec& m, const Box& box,
                                      const std::vector<int>& indices,
                                      std::size_t samples = 4096,
                                      double tol = linalg::kDefaultRankTol);

struct LipschitzReport {
  double max_quotient = 0.0;  // max |coeff(p + h e_i) - coeff(p)| / h
  std::size_t samples = 0;
};

// empirical local-Lipschitz screen: bounded difference quotients of all
// coefficient fields over the box, using relative bumps of size `bump`
LipschitzReport lipschitz_screen(const MarketSpec& m, const Box& box,
                                 std::size_t samples = 256,
                                 double bump = 1e-5);

}  // namespace tameflow::market
