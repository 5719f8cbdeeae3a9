#pragma once

// Simulation of the consistent price flow P(s, ., p) together with the bond
// B, the exponential factor Z and the deflator H = Z/B.
//
// The scheme advances log prices with coefficients frozen at the left grid
// point, so prices stay positive for finite coefficients:
//   dlog P_k = (b_k - 1/2 sum_j sigma_kj^2) dt + (sigma dW)_k
//   dlog B   = r dt
//   dlog Z   = -1/2 |theta|^2 dt - theta'dW
// Stock 0 and the deflator are built from the same accumulated log
// increments: H = exp(log Z - log B) and P_0 = p_0 * H, which makes the
// shadow identity P_0 = p_0 H hold bitwise along every path.
//
// A path that reaches a non-finite state is truncated and marked exploded at
// the first bad time (pricing layers refuse ensembles containing such
// paths). A path that visits a state with nonzero arbitrage residual kappa
// is marked, and pricing layers refuse those ensembles as well.

#include <iosfwd>
#include <optional>

#include "tameflow/market.hpp"
#include "tameflow/noise.hpp"

namespace tameflow::flow {

struct SimOptions {
  double kappa_tol = 1e-8;  // |kappa| above this flags the path
  double rank_tol = linalg::kDefaultRankTol;
};

struct FlowPath {
  noise::GridPtr grid;  // times from s to the horizon
  double s = 0.0;
  Vec start;    // augmented price at s (size n+1)
  Mat prices;   // (n+1) x size, column i is the augmented price at t_i
  Vec B;        // bond started at 1 at s
  Vec Z;        // exponential factor started at 1
  Vec H;        // deflator Z/B
  Mat theta;    // d x size, market price of risk at each grid time
  double kappa_max = 0.0;
  bool arbitrage_flag = false;
  bool exploded = false;
  double explosion_time = 0.0;
  std::size_t valid_states = 0;  // prefix of columns that hold real data

  std::size_t size() const { return grid ? grid->size() : 0; }
};

// Simulates from s using the increments of `w` at and after s (s must be a
// grid point of w). `p` is the full augmented starting price.
FlowPath simulate_flow(const market::MarketSpec& m, const noise::NoisePath& w,
                       double s, const Vec& p, const SimOptions& opts = {});

struct Ensemble {
  std::vector<noise::NoisePath> noise;
  std::vector<FlowPath> flows;

  std::size_t size() const { return flows.size(); }
};

Ensemble simulate_ensemble(const market::MarketSpec& m,
                           const noise::GridPtr& grid, double s, const Vec& p,
                           std::size_t n_paths, std::uint64_t seed,
                           int threads = 1, const SimOptions& opts = {});

// Throws Explosion if any path exploded, PricingRefused if any path saw a
// nonzero arbitrage residual. Valuation entry points call this first.
void require_clean(const Ensemble& ens);

// H-weighted values along the path: out[i] = H[i] * values[i].
Vec deflate(const FlowPath& path, const Vec& values);

struct ConsistencyReport {
  std::vector<std::size_t> steps;        // refinement ladder, ascending
  std::vector<double> restart_gaps;      // per level: flow-property gap
  std::vector<double> refine_gaps;       // consecutive-level distance at t
  double max_restart_gap = 0.0;
  double convergence_slope = 0.0;        // log-log order of refine_gaps
};

// Two experiments on common noise (the finest level is generated once per
// path and coarsened onto the other levels):
//  - restart gap: |P(s,t,p) - P(s_mid,t,P(s,s_mid,p))| with both legs on the
//    same grid and the same increments. This is the flow property itself.
//  - refinement gap: distance at t between consecutive ladder levels, whose
//    log-log slope against dt estimates the strong order of the scheme.
// steps_ladder entries must divide each other pairwise (nested grids) and
// place s_mid and t on every level.
ConsistencyReport check_consistency(const market::MarketSpec& m, double s,
                                    double s_mid, double t, const Vec& p,
                                    const std::vector<std::size_t>& steps_ladder,
                                    std::size_t n_paths, std::uint64_t seed,
                                    int threads = 1,
                                    const SimOptions& opts = {});

struct CocycleReport {
  double max_gap = 0.0;  // worst relative state gap across paths
};

// For autonomous coefficients: P(s, s+t, p) must equal P(0, t, p) driven by
// the time-shifted noise. Requires a uniform grid with s on it; throws
// Unsupported for time-dependent coefficients.
CocycleReport check_cocycle(const market::MarketSpec& m, double s, double t,
                            const Vec& p, std::size_t steps,
                            std::size_t n_paths, std::uint64_t seed,
                            int threads = 1, const SimOptions& opts = {});

// CSV columns: time,P0,...,Pn,B,Z,H
void write_csv(const FlowPath& path, std::ostream& out);

}  // namespace tameflow::flow
