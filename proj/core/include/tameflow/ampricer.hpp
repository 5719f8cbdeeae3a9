#pragma once

// American-claim valuation on a finite exercise grid. The sup over
// consistent stopping families is realized over state-based rules: a rule
// may consult only the date and the current augmented state, which keeps
// the induced family consistent under restarts by construction.
//
// Valuation runs two regression passes over the same paths. The decision
// pass fits continuation values on in-the-money paths and induces the
// exercise rule; evaluating that rule pathwise gives the lower-bound
// estimate. The envelope pass fits on all paths and propagates
// max(exercise, continuation), giving the biased-high regression estimate
// and the envelope matrix used by the supermartingale screen and the
// dominating hedge.

#include <memory>
#include <optional>

#include "tameflow/europricer.hpp"

namespace tameflow::ampricer {

// deflated exercise values and raw states at each exercise date
struct ExerciseTable {
  std::vector<double> times;            // exercise date times
  std::vector<std::size_t> grid_index;  // their positions on the sim grid
  Mat Y;                                // paths x dates, deflated exercise value
  std::vector<Mat> states;              // per date: paths x (n+1) prices
  Vec p_ref;                            // anchor for the feature map

  std::size_t paths() const { return static_cast<std::size_t>(Y.rows()); }
  std::size_t dates() const { return static_cast<std::size_t>(Y.cols()); }
};

// `count` grid indices evenly spread from 0 to grid_size-1, deduplicated,
// always ending at the last index
std::vector<std::size_t> exercise_dates(std::size_t grid_size,
                                        std::size_t count);

ExerciseTable build_exercise_table(const market::MarketSpec& m,
                                   const flow::Ensemble& ens,
                                   const claims::ClaimSpec& claim,
                                   const std::vector<std::size_t>& date_index);

class StoppingRule {
 public:
  virtual ~StoppingRule() = default;
  // date position (not grid index) at which path k stops; the last date
  // caps every rule
  virtual std::size_t first_stop(const ExerciseTable& table,
                                 std::size_t k) const = 0;
  virtual std::string name() const = 0;
};

// stop at the first date where the predicate holds
std::shared_ptr<StoppingRule> make_state_rule(
    std::function<bool(double t, const Vec& p)> stop_when, std::string name);
std::shared_ptr<StoppingRule> make_immediate_rule();
std::shared_ptr<StoppingRule> make_never_rule();

// rule induced by the fitted continuations: stop at the first date whose
// exercise value is positive and not below the fitted continuation; dates
// without a fit (no in-the-money paths) never stop
class SnellRule : public StoppingRule {
 public:
  SnellRule(basis::FeatureMap features,
            std::vector<std::optional<basis::Regression>> continuation);
  std::size_t first_stop(const ExerciseTable& table,
                         std::size_t k) const override;
  std::string name() const override { return "snell"; }
  const std::optional<basis::Regression>& continuation_at(std::size_t i) const {
    return continuation_.at(i);
  }

 private:
  basis::FeatureMap features_;
  std::vector<std::optional<basis::Regression>> continuation_;
};

struct SnellEnvelope {
  std::vector<double> times;
  std::vector<std::size_t> grid_index;
  double lower_bound = 0.0;  // induced-rule estimate, the reported root value
  double lower_se = 0.0;
  double regression_value = 0.0;  // envelope-pass estimate, biased high
  double regression_se = 0.0;
  double u = 0.0;            // alias of lower_bound
  Mat envelope;              // paths x dates, max(exercise, continuation)
  std::vector<std::size_t> stop_pos;  // per path, induced-rule date position
  Vec stopped_value;               // per path, exercise value at the stop
  std::shared_ptr<SnellRule> rule;
};

// backward-induction valuation over the table's dates
SnellEnvelope snell_envelope(const ExerciseTable& table,
                             const basis::BasisSpec& spec);

SnellEnvelope price_american(const market::MarketSpec& m,
                             const flow::Ensemble& ens,
                             const claims::ClaimSpec& claim,
                             const std::vector<std::size_t>& date_index,
                             const basis::BasisSpec& spec);

// mean and standard error of the exercise value at the rule's stop
MeanSE evaluate_stopping(const ExerciseTable& table,
                               const StoppingRule& rule);

struct CombineDiagnostics {
  MeanSE rule1;
  MeanSE rule2;
  MeanSE combined;
};

// At the earlier of the two stop times, stop only when the immediate value
// is at least the fitted conditional expectation of the value at the later
// stop time; otherwise wait for the later one. Never falls below either
// input beyond sampling noise.
std::shared_ptr<StoppingRule> combine_stopping(
    const ExerciseTable& table, std::shared_ptr<const StoppingRule> rule1,
    std::shared_ptr<const StoppingRule> rule2, const basis::BasisSpec& spec,
    CombineDiagnostics* diagnostics = nullptr);

struct SupermartingaleReport {
  bool passes = false;
  double worst_margin = 0.0;  // max over dates of mean(increment) - 3 SE
  std::vector<double> mean_increment;
  std::vector<double> se_increment;
};

// sample means of the envelope must not increase between consecutive dates
// beyond 3 standard errors of the pathwise increment
SupermartingaleReport check_snell_supermartingale(const Mat& envelope);

struct DominationReport {
  bool dominates = false;      // within the slack, at every checked entry
  double worst_wealth_gap = 0.0;   // max over checked entries of X_B - X_A
  double worst_income_gap = 0.0;   // max over checked entries of Gamma_A - Gamma_B
  double rms_violation = 0.0;      // RMS of the positive parts of both gaps
  std::size_t checked = 0;
};

// A dominates B when X_A >= X_B - slack and Gamma_A <= Gamma_B + slack at
// every grid time up to B's stop index, on every path. Income matrices may
// be empty (treated as zero).
DominationReport check_domination(const Mat& XA, const Mat& GammaA,
                                  const Mat& XB, const Mat& GammaB,
                                  const std::vector<std::size_t>& stop_index,
                                  double slack = 1e-9);

struct DominationHedge {
  double u = 0.0;                // root value financing the hedge
  double mart_root_gap = 0.0;    // |mean martingale target at 0 - u|
  DominationReport domination;
  double slack = 0.0;            // absolute slack used for the verdict
  bool verdict = false;          // rms_violation <= slack
  SnellEnvelope envelope;
};

// Domination check: extend the stopped envelope to a full-grid
// martingale target, estimate its representation on pre-stop increments,
// trade the induced rule from the root value, and compare the hedged
// wealth with the claim's exercise wealth up to each path's stop.
// exercise_values is paths x grid-times, deflated. Raises HedgingInfeasible
// when the representation leaves the traded span (the rank-deficiency
// signal).
DominationHedge dominating_hedge(const market::MarketSpec& m,
                                 const flow::Ensemble& ens,
                                 const Mat& exercise_values,
                                 const std::vector<std::size_t>& date_index,
                                 const basis::BasisSpec& spec,
                                 double hedge_tol = 1e-6,
                                 double slack_frac = 0.05);

// payoff-claim convenience overload: exercise value H * g(0, p)
DominationHedge dominating_hedge(const market::MarketSpec& m,
                                 const flow::Ensemble& ens,
                                 const claims::ClaimSpec& claim,
                                 const std::vector<std::size_t>& date_index,
                                 const basis::BasisSpec& spec,
                                 double hedge_tol = 1e-6,
                                 double slack_frac = 0.05);

struct Condition1Report {
  double gamma = 2.0;
  double alpha1 = 0.0;  // restart-time exponent
  double alpha2 = 0.0;  // horizon-time exponent
  double alpha3 = 0.0;  // wealth exponent
  Vec beta;             // per price coordinate
  bool alpha1_degenerate = false;
  bool alpha2_degenerate = false;
  bool alpha3_degenerate = false;
  std::vector<char> beta_degenerate;
  double reciprocal_sum = 0.0;  // over non-degenerate exponents only
  bool satisfied = false;       // reciprocal_sum < 1
  std::vector<double> ladder;   // relative perturbation sizes used
};

// Log-log fit of empirical gamma-moments of Y = H * g(x, P) differences
// under one-at-a-time perturbations of (s, t, x, p) on common noise.
// Purely diagnostic: never gates pricing. The ladder entries must be
// multiples of 1/base_steps; the horizon probe reads Y at t_eval and
// t_eval + h on a base_steps grid over [0, T].
Condition1Report condition1_diagnostic(const market::MarketSpec& m,
                                       const claims::ClaimSpec& claim,
                                       double x_base, double gamma,
                                       const std::vector<double>& ladder,
                                       std::size_t base_steps, double t_eval,
                                       std::size_t n_paths,
                                       std::uint64_t seed, int threads = 1);

// CSV columns: date,time,n_exercised,exercised_min_p1,exercised_max_p1
void write_boundary_csv(const SnellEnvelope& env, const ExerciseTable& table,
                        std::ostream& out);

// CSV columns: claim,lower_bound,lower_se,regression_value,regression_se
void write_value_csv(const std::string& claim_id, const SnellEnvelope& env,
                     std::ostream& out);

}  // namespace tameflow::ampricer
