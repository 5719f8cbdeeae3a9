#include "tameflow/ampricer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>

#include "tameflow/errors.hpp"
#include "tameflow/wealth.hpp"

namespace tameflow::ampricer {

namespace {

MeanSE mean_se_vec(const Vec& v) {
  std::vector<double> tmp(v.data(), v.data() + v.size());
  return mean_se(tmp);
}

// feature rows for one exercise date, assembled from raw states
void build_design(const basis::FeatureMap& fm, const Mat& states, Mat& design) {
  design.resize(states.rows(), fm.count());
  parallel_for(static_cast<std::size_t>(states.rows()), 1,
                     [&](std::size_t lo, std::size_t hi) {
    Vec feat(fm.count());
    Vec p(states.cols());
    for (std::size_t k = lo; k < hi; ++k) {
      const Eigen::Index kk = static_cast<Eigen::Index>(k);
      p = states.row(kk).transpose();
      fm.eval(p, 0.0, feat);
      design.row(kk) = feat.transpose();
    }
  });
}

class StateRule final : public StoppingRule {
 public:
  StateRule(std::function<bool(double, const Vec&)> stop_when,
            std::string name)
      : stop_when_(std::move(stop_when)), name_(std::move(name)) {
    if (!stop_when_) throw InvalidInput("state rule has no predicate");
  }

  std::size_t first_stop(const ExerciseTable& table,
                         std::size_t k) const override {
    const std::size_t last = table.dates() - 1;
    Vec p;
    for (std::size_t i = 0; i < last; ++i) {
      p = table.states[i].row(static_cast<Eigen::Index>(k)).transpose();
      if (stop_when_(table.times[i], p)) return i;
    }
    return last;
  }

  std::string name() const override { return name_; }

 private:
  std::function<bool(double, const Vec&)> stop_when_;
  std::string name_;
};

class CombinedRule final : public StoppingRule {
 public:
  CombinedRule(std::shared_ptr<const StoppingRule> rule1,
               std::shared_ptr<const StoppingRule> rule2,
               basis::FeatureMap features,
               std::vector<std::optional<basis::Regression>> later_value)
      : rule1_(std::move(rule1)),
        rule2_(std::move(rule2)),
        features_(std::move(features)),
        later_value_(std::move(later_value)) {}

  std::size_t first_stop(const ExerciseTable& table,
                         std::size_t k) const override {
    const std::size_t p1 = rule1_->first_stop(table, k);
    const std::size_t p2 = rule2_->first_stop(table, k);
    const std::size_t lo = std::min(p1, p2);
    const std::size_t hi = std::max(p1, p2);
    if (lo == hi) return lo;
    const auto& fit = later_value_.at(lo);
    if (!fit) return lo;  // nothing learned at this date, take the early stop
    Vec feat(features_.count());
    Vec p = table.states[lo].row(static_cast<Eigen::Index>(k)).transpose();
    features_.eval(p, 0.0, feat);
    const double continued = fit->predict_one(feat);
    return table.Y(static_cast<Eigen::Index>(k),
                   static_cast<Eigen::Index>(lo)) >= continued
               ? lo
               : hi;
  }

  std::string name() const override {
    return "combine(" + rule1_->name() + "," + rule2_->name() + ")";
  }

 private:
  std::shared_ptr<const StoppingRule> rule1_;
  std::shared_ptr<const StoppingRule> rule2_;
  basis::FeatureMap features_;
  std::vector<std::optional<basis::Regression>> later_value_;
};

int stocks_of(const flow::Ensemble& ens) {
  if (ens.size() == 0) throw InvalidInput("empty ensemble");
  return static_cast<int>(ens.flows.front().prices.rows()) - 1;
}

void validate_dates(const std::vector<std::size_t>& date_index,
                    std::size_t grid_size) {
  if (date_index.empty()) throw InvalidInput("no exercise dates");
  for (std::size_t i = 0; i < date_index.size(); ++i) {
    if (date_index[i] >= grid_size) {
      throw InvalidInput("exercise date index beyond the grid");
    }
    if (i > 0 && date_index[i] <= date_index[i - 1]) {
      throw InvalidInput("exercise dates must be strictly increasing");
    }
  }
  if (date_index.back() != grid_size - 1) {
    throw InvalidInput("the last exercise date must be the horizon");
  }
}

ExerciseTable table_from_values(const flow::Ensemble& ens, const Mat& values,
                                const std::vector<std::size_t>& date_index) {
  const std::size_t paths = ens.size();
  const std::size_t times = ens.flows.front().size();
  validate_dates(date_index, times);
  if (values.rows() != static_cast<Eigen::Index>(paths) ||
      values.cols() != static_cast<Eigen::Index>(times)) {
    throw InvalidInput("exercise value matrix shape mismatch");
  }
  const int n = stocks_of(ens);
  ExerciseTable table;
  table.grid_index = date_index;
  table.p_ref = ens.flows.front().start;
  table.Y.resize(paths, date_index.size());
  table.states.reserve(date_index.size());
  const auto& grid_times = ens.flows.front().grid->times();
  for (std::size_t i = 0; i < date_index.size(); ++i) {
    const std::size_t gi = date_index[i];
    table.times.push_back(grid_times[gi]);
    table.Y.col(static_cast<Eigen::Index>(i)) =
        values.col(static_cast<Eigen::Index>(gi));
    Mat st(paths, n + 1);
    for (std::size_t k = 0; k < paths; ++k) {
      st.row(static_cast<Eigen::Index>(k)) =
          ens.flows[k].prices.col(gi).transpose();
    }
    table.states.push_back(std::move(st));
  }
  return table;
}

// deflated exercise value H * g(0, p) at every grid time
Mat exercise_value_matrix(const market::MarketSpec& m,
                          const flow::Ensemble& ens,
                          const claims::ClaimSpec& claim) {
  claims::validate_claim(claim, m.d);
  if (claim.inside || claim.has_income() || claim.wealth_dependent) {
    throw Unsupported(
        "American valuation supports fixed-horizon payoff claims; supply an "
        "exercise value matrix for anything richer");
  }
  flow::require_clean(ens);
  const std::size_t paths = ens.size();
  const std::size_t times = ens.flows.front().size();
  Mat values(paths, times);
  parallel_for(paths, 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& f = ens.flows[k];
      for (std::size_t i = 0; i < times; ++i) {
        const double g = claim.payoff(0.0, f.prices.col(i));
        if (!std::isfinite(g)) {
          throw ModelEvaluation("claim payoff returned a non-finite value");
        }
        values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
            f.H[i] * g;
      }
    }
  });
  return values;
}

}  // namespace

std::vector<std::size_t> exercise_dates(std::size_t grid_size,
                                        std::size_t count) {
  if (grid_size < 2) throw InvalidInput("grid too small for exercise dates");
  if (count < 1) throw InvalidInput("need at least one exercise date");
  count = std::min(count, grid_size);
  std::vector<std::size_t> dates;
  if (count == 1) {
    dates.push_back(grid_size - 1);
    return dates;
  }
  for (std::size_t j = 0; j < count; ++j) {
    const double pos = static_cast<double>(j) *
                       static_cast<double>(grid_size - 1) /
                       static_cast<double>(count - 1);
    const std::size_t idx = static_cast<std::size_t>(std::llround(pos));
    if (dates.empty() || idx > dates.back()) dates.push_back(idx);
  }
  return dates;
}

ExerciseTable build_exercise_table(const market::MarketSpec& m,
                                   const flow::Ensemble& ens,
                                   const claims::ClaimSpec& claim,
                                   const std::vector<std::size_t>& date_index) {
  const Mat values = exercise_value_matrix(m, ens, claim);
  return table_from_values(ens, values, date_index);
}

std::shared_ptr<StoppingRule> make_state_rule(
    std::function<bool(double t, const Vec& p)> stop_when, std::string name) {
  return std::make_shared<StateRule>(std::move(stop_when), std::move(name));
}

std::shared_ptr<StoppingRule> make_immediate_rule() {
  return make_state_rule([](double, const Vec&) { return true; }, "immediate");
}

std::shared_ptr<StoppingRule> make_never_rule() {
  return make_state_rule([](double, const Vec&) { return false; }, "never");
}

SnellRule::SnellRule(
    basis::FeatureMap features,
    std::vector<std::optional<basis::Regression>> continuation)
    : features_(std::move(features)), continuation_(std::move(continuation)) {}

std::size_t SnellRule::first_stop(const ExerciseTable& table,
                                  std::size_t k) const {
  const std::size_t last = table.dates() - 1;
  Vec feat(features_.count());
  Vec p;
  for (std::size_t i = 0; i < last && i < continuation_.size(); ++i) {
    const double y = table.Y(static_cast<Eigen::Index>(k),
                             static_cast<Eigen::Index>(i));
    if (y <= 0.0 || !continuation_[i]) continue;
    p = table.states[i].row(static_cast<Eigen::Index>(k)).transpose();
    features_.eval(p, 0.0, feat);
    if (y >= continuation_[i]->predict_one(feat)) return i;
  }
  return last;
}

SnellEnvelope snell_envelope(const ExerciseTable& table,
                             const basis::BasisSpec& spec) {
  if (spec.include_wealth) {
    throw InvalidInput("exercise regressions run on the price state only");
  }
  const std::size_t paths = table.paths();
  const std::size_t dates = table.dates();
  if (paths == 0 || dates == 0) throw InvalidInput("empty exercise table");
  if (!table.Y.allFinite()) {
    throw InvalidInput("exercise values hold non-finite entries");
  }
  const int n = static_cast<int>(table.states.front().cols()) - 1;
  basis::FeatureMap fm(n, table.p_ref, spec);

  SnellEnvelope env;
  env.times = table.times;
  env.grid_index = table.grid_index;
  env.envelope.resize(paths, dates);
  env.stop_pos.assign(paths, dates - 1);

  Vec cash = table.Y.col(static_cast<Eigen::Index>(dates) - 1);
  Vec value = cash;  // envelope-pass values
  env.envelope.col(static_cast<Eigen::Index>(dates) - 1) = value;

  std::vector<std::optional<basis::Regression>> continuation(
      dates > 0 ? dates - 1 : 0);
  MeanSE first_dispersed{0.0, 0.0, 0};

  Mat design;
  std::vector<Eigen::Index> itm;
  for (std::size_t ii = dates - 1; ii-- > 0;) {
    const Eigen::Index i = static_cast<Eigen::Index>(ii);
    build_design(fm, table.states[ii], design);

    // envelope pass over all paths
    const basis::Regression tvr = basis::fit(design, value);
    for (std::size_t k = 0; k < paths; ++k) {
      const Eigen::Index kk = static_cast<Eigen::Index>(k);
      const double continued =
          tvr.predict_one(design.row(kk).transpose());
      value[kk] = std::max(table.Y(kk, i), continued);
    }
    env.envelope.col(i) = value;
    if (ii > 0) first_dispersed = mean_se_vec(value);

    // decision pass on in-the-money paths
    itm.clear();
    for (std::size_t k = 0; k < paths; ++k) {
      if (table.Y(static_cast<Eigen::Index>(k), i) > 0.0) {
        itm.push_back(static_cast<Eigen::Index>(k));
      }
    }
    if (itm.size() >= static_cast<std::size_t>(fm.count())) {
      Mat design_itm(itm.size(), fm.count());
      Mat cash_itm(itm.size(), 1);
      for (std::size_t r = 0; r < itm.size(); ++r) {
        design_itm.row(static_cast<Eigen::Index>(r)) = design.row(itm[r]);
        cash_itm(static_cast<Eigen::Index>(r), 0) = cash[itm[r]];
      }
      basis::Regression reg = basis::fit(design_itm, cash_itm);
      for (std::size_t r = 0; r < itm.size(); ++r) {
        const Eigen::Index kk = itm[r];
        const double continued =
            reg.predict_one(design.row(kk).transpose());
        if (table.Y(kk, i) >= continued) {
          cash[kk] = table.Y(kk, i);
          env.stop_pos[static_cast<std::size_t>(kk)] = ii;
        }
      }
      continuation[ii] = std::move(reg);
    }
  }

  const auto lower = mean_se_vec(cash);
  env.lower_bound = lower.mean;
  env.lower_se = lower.se;
  env.u = lower.mean;
  const auto reg_ms = mean_se_vec(value);
  env.regression_value = reg_ms.mean;
  // at the root all states coincide and the pathwise spread collapses, so
  // the quoted error comes from the last date with dispersion
  env.regression_se = dates > 1 ? first_dispersed.se : reg_ms.se;
  env.stopped_value = cash;
  env.rule = std::make_shared<SnellRule>(std::move(fm), std::move(continuation));
  return env;
}

SnellEnvelope price_american(const market::MarketSpec& m,
                             const flow::Ensemble& ens,
                             const claims::ClaimSpec& claim,
                             const std::vector<std::size_t>& date_index,
                             const basis::BasisSpec& spec) {
  const ExerciseTable table = build_exercise_table(m, ens, claim, date_index);
  return snell_envelope(table, spec);
}

MeanSE evaluate_stopping(const ExerciseTable& table,
                               const StoppingRule& rule) {
  const std::size_t paths = table.paths();
  if (paths == 0) throw InvalidInput("empty exercise table");
  std::vector<double> values(paths);
  parallel_for(paths, 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t pos = std::min(rule.first_stop(table, k),
                                       table.dates() - 1);
      values[k] = table.Y(static_cast<Eigen::Index>(k),
                          static_cast<Eigen::Index>(pos));
    }
  });
  return mean_se(values);
}

std::shared_ptr<StoppingRule> combine_stopping(
    const ExerciseTable& table, std::shared_ptr<const StoppingRule> rule1,
    std::shared_ptr<const StoppingRule> rule2, const basis::BasisSpec& spec,
    CombineDiagnostics* diagnostics) {
  if (!rule1 || !rule2) throw InvalidInput("combine_stopping needs two rules");
  if (spec.include_wealth) {
    throw InvalidInput("exercise regressions run on the price state only");
  }
  const std::size_t paths = table.paths();
  const std::size_t dates = table.dates();
  const int n = static_cast<int>(table.states.front().cols()) - 1;
  basis::FeatureMap fm(n, table.p_ref, spec);

  std::vector<std::size_t> pos1(paths), pos2(paths);
  parallel_for(paths, 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      pos1[k] = std::min(rule1->first_stop(table, k), dates - 1);
      pos2[k] = std::min(rule2->first_stop(table, k), dates - 1);
    }
  });

  // fit E[value at the later stop | state] at each date that is the earlier
  // stop of some paths with a genuinely later alternative
  std::vector<std::optional<basis::Regression>> later_value(dates);
  std::vector<Eigen::Index> rows;
  for (std::size_t d = 0; d < dates; ++d) {
    rows.clear();
    for (std::size_t k = 0; k < paths; ++k) {
      if (std::min(pos1[k], pos2[k]) == d && std::max(pos1[k], pos2[k]) > d) {
        rows.push_back(static_cast<Eigen::Index>(k));
      }
    }
    if (rows.size() < static_cast<std::size_t>(fm.count())) continue;
    Mat design(rows.size(), fm.count());
    Mat target(rows.size(), 1);
    Vec feat(fm.count());
    Vec p;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t k = static_cast<std::size_t>(rows[r]);
      p = table.states[d].row(rows[r]).transpose();
      fm.eval(p, 0.0, feat);
      design.row(static_cast<Eigen::Index>(r)) = feat.transpose();
      const std::size_t later = std::max(pos1[k], pos2[k]);
      target(static_cast<Eigen::Index>(r), 0) =
          table.Y(rows[r], static_cast<Eigen::Index>(later));
    }
    later_value[d] = basis::fit(design, target);
  }

  auto combined = std::make_shared<CombinedRule>(
      std::move(rule1), std::move(rule2), std::move(fm),
      std::move(later_value));
  if (diagnostics) {
    diagnostics->rule1 = MeanSE{};
    diagnostics->rule2 = MeanSE{};
    std::vector<double> v1(paths), v2(paths), vc(paths);
    for (std::size_t k = 0; k < paths; ++k) {
      v1[k] = table.Y(static_cast<Eigen::Index>(k),
                      static_cast<Eigen::Index>(pos1[k]));
      v2[k] = table.Y(static_cast<Eigen::Index>(k),
                      static_cast<Eigen::Index>(pos2[k]));
      vc[k] = table.Y(static_cast<Eigen::Index>(k),
                      static_cast<Eigen::Index>(combined->first_stop(table, k)));
    }
    diagnostics->rule1 = mean_se(v1);
    diagnostics->rule2 = mean_se(v2);
    diagnostics->combined = mean_se(vc);
  }
  return combined;
}

SupermartingaleReport check_snell_supermartingale(const Mat& envelope) {
  if (envelope.rows() < 2 || envelope.cols() < 2) {
    throw InvalidInput("supermartingale screen needs a populated envelope");
  }
  SupermartingaleReport report;
  report.worst_margin = -std::numeric_limits<double>::infinity();
  std::vector<double> diff(static_cast<std::size_t>(envelope.rows()));
  for (Eigen::Index i = 0; i + 1 < envelope.cols(); ++i) {
    for (Eigen::Index k = 0; k < envelope.rows(); ++k) {
      diff[static_cast<std::size_t>(k)] = envelope(k, i + 1) - envelope(k, i);
    }
    const auto ms = mean_se(diff);
    report.mean_increment.push_back(ms.mean);
    report.se_increment.push_back(ms.se);
    const double margin = ms.mean - 3.0 * ms.se;
    if (margin > report.worst_margin) report.worst_margin = margin;
  }
  report.passes = report.worst_margin <= 0.0;
  return report;
}

DominationReport check_domination(const Mat& XA, const Mat& GammaA,
                                  const Mat& XB, const Mat& GammaB,
                                  const std::vector<std::size_t>& stop_index,
                                  double slack) {
  if (XA.rows() != XB.rows() || XA.cols() != XB.cols()) {
    throw InvalidInput("domination check: wealth grids differ");
  }
  const auto check_income =
      [&](const Mat& g) { return g.size() == 0 || (g.rows() == XA.rows() &&
                                                   g.cols() == XA.cols()); };
  if (!check_income(GammaA) || !check_income(GammaB)) {
    throw InvalidInput("domination check: income grids differ");
  }
  if (stop_index.size() != static_cast<std::size_t>(XA.rows())) {
    throw InvalidInput("domination check: one stop index per path required");
  }
  DominationReport report;
  report.dominates = true;
  report.worst_wealth_gap = -std::numeric_limits<double>::infinity();
  report.worst_income_gap = -std::numeric_limits<double>::infinity();
  double sq = 0.0;
  for (Eigen::Index k = 0; k < XA.rows(); ++k) {
    const std::size_t stop = stop_index[static_cast<std::size_t>(k)];
    if (stop >= static_cast<std::size_t>(XA.cols())) {
      throw InvalidInput("domination check: stop index beyond the grid");
    }
    for (Eigen::Index i = 0; i <= static_cast<Eigen::Index>(stop); ++i) {
      const double wgap = XB(k, i) - XA(k, i);
      const double ga = GammaA.size() ? GammaA(k, i) : 0.0;
      const double gb = GammaB.size() ? GammaB(k, i) : 0.0;
      const double ggap = ga - gb;
      if (wgap > report.worst_wealth_gap) report.worst_wealth_gap = wgap;
      if (ggap > report.worst_income_gap) report.worst_income_gap = ggap;
      if (wgap > slack || ggap > slack) report.dominates = false;
      const double vw = std::max(0.0, wgap);
      const double vg = std::max(0.0, ggap);
      sq += vw * vw + vg * vg;
      ++report.checked;
    }
  }
  report.rms_violation =
      report.checked ? std::sqrt(sq / static_cast<double>(report.checked)) : 0.0;
  return report;
}

DominationHedge dominating_hedge(const market::MarketSpec& m,
                                 const flow::Ensemble& ens,
                                 const Mat& exercise_values,
                                 const std::vector<std::size_t>& date_index,
                                 const basis::BasisSpec& spec,
                                 double hedge_tol, double slack_frac) {
  flow::require_clean(ens);
  const std::size_t paths = ens.size();
  const std::size_t times = ens.flows.front().size();
  ExerciseTable table = table_from_values(ens, exercise_values, date_index);

  DominationHedge out;
  out.envelope = snell_envelope(table, spec);
  out.u = out.envelope.u;

  std::vector<std::size_t> stop_grid(paths);
  for (std::size_t k = 0; k < paths; ++k) {
    stop_grid[k] = date_index[out.envelope.stop_pos[k]];
  }

  // stopped-value martingale target on the full grid: frozen after the
  // stop, fitted conditional expectation of the stopped value before it
  const int n = stocks_of(ens);
  basis::FeatureMap fm(n, table.p_ref, spec);
  Mat target(paths, times);
  Mat alive(paths, times - 1);
  for (std::size_t k = 0; k < paths; ++k) {
    for (std::size_t i = 0; i + 1 < times; ++i) {
      alive(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          i < stop_grid[k] ? 1.0 : 0.0;
    }
  }
  std::vector<Eigen::Index> rows;
  Mat design;
  Vec feat(fm.count());
  for (std::size_t i = 0; i < times; ++i) {
    rows.clear();
    for (std::size_t k = 0; k < paths; ++k) {
      if (stop_grid[k] > i) rows.push_back(static_cast<Eigen::Index>(k));
    }
    if (rows.size() >= static_cast<std::size_t>(fm.count())) {
      Mat sub_design(rows.size(), fm.count());
      Mat sub_target(rows.size(), 1);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t k = static_cast<std::size_t>(rows[r]);
        fm.eval(ens.flows[k].prices.col(i), 0.0, feat);
        sub_design.row(static_cast<Eigen::Index>(r)) = feat.transpose();
        sub_target(static_cast<Eigen::Index>(r), 0) =
            out.envelope.stopped_value[rows[r]];
      }
      const basis::Regression reg = basis::fit(sub_design, sub_target);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t k = static_cast<std::size_t>(rows[r]);
        fm.eval(ens.flows[k].prices.col(i), 0.0, feat);
        target(rows[r], static_cast<Eigen::Index>(i)) = reg.predict_one(feat);
      }
    } else if (!rows.empty()) {
      // too few live paths to regress; fall back to their plain mean
      double mean = 0.0;
      for (Eigen::Index r : rows) mean += out.envelope.stopped_value[r];
      mean /= static_cast<double>(rows.size());
      for (Eigen::Index r : rows) {
        target(r, static_cast<Eigen::Index>(i)) = mean;
      }
    }
    for (std::size_t k = 0; k < paths; ++k) {
      if (stop_grid[k] <= i) {
        target(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
            out.envelope.stopped_value[static_cast<Eigen::Index>(k)];
      }
    }
  }
  out.mart_root_gap = std::abs(target.col(0).mean() - out.u);

  const auto rep = europricer::estimate_representation(target, ens, spec, {},
                                                       nullptr, &alive);
  const auto rule = europricer::hedge_rule(m, rep, table.p_ref[0], hedge_tol);
  const auto wens = wealth::simulate_wealth_ensemble(m, ens, rule, out.u, 1);

  Mat XA(paths, times);
  Mat XB(paths, times);
  for (std::size_t k = 0; k < paths; ++k) {
    const Eigen::Index kk = static_cast<Eigen::Index>(k);
    XA.row(kk) = wens.paths[k].X.transpose();
    for (std::size_t i = 0; i < times; ++i) {
      XB(kk, static_cast<Eigen::Index>(i)) =
          exercise_values(kk, static_cast<Eigen::Index>(i)) /
          ens.flows[k].H[i];
    }
  }
  out.slack = slack_frac * std::max(std::abs(out.u), 1e-12);
  out.domination = check_domination(XA, Mat(), XB, Mat(), stop_grid, out.slack);
  out.verdict = out.domination.rms_violation <= out.slack;
  return out;
}

DominationHedge dominating_hedge(const market::MarketSpec& m,
                                 const flow::Ensemble& ens,
                                 const claims::ClaimSpec& claim,
                                 const std::vector<std::size_t>& date_index,
                                 const basis::BasisSpec& spec,
                                 double hedge_tol, double slack_frac) {
  const Mat values = exercise_value_matrix(m, ens, claim);
  return dominating_hedge(m, ens, values, date_index, spec, hedge_tol,
                          slack_frac);
}

namespace {

struct MomentFit {
  double exponent = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;
};

MomentFit fit_exponent(const std::vector<double>& ladder,
                       const std::vector<double>& moments) {
  MomentFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(moments[i] > 1e-300) || !std::isfinite(moments[i])) {
      fit.degenerate = true;
      return fit;
    }
    lx.push_back(std::log(ladder[i]));
    ly.push_back(std::log(moments[i]));
  }
  fit.exponent = fit_slope(lx, ly);
  if (!std::isfinite(fit.exponent) || fit.exponent <= 0.0) {
    fit.degenerate = true;
    fit.exponent = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

}  // namespace

Condition1Report condition1_diagnostic(const market::MarketSpec& m,
                                       const claims::ClaimSpec& claim,
                                       double x_base, double gamma,
                                       const std::vector<double>& ladder,
                                       std::size_t base_steps, double t_eval,
                                       std::size_t n_paths,
                                       std::uint64_t seed, int threads) {
  market::validate_spec(m);
  claims::validate_claim(claim, m.d);
  if (ladder.empty()) throw InvalidInput("perturbation ladder is empty");
  if (!(gamma > 0.0)) throw InvalidInput("gamma must be positive");
  if (n_paths < 2) throw InvalidInput("need at least two paths");
  const double dt = m.T / static_cast<double>(base_steps);
  for (double h : ladder) {
    const double ratio = h / dt;
    if (!(h > 0.0) ||
        std::abs(ratio - std::llround(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      throw InvalidInput("ladder entries must be positive multiples of T/steps");
    }
  }
  const double h_max = *std::max_element(ladder.begin(), ladder.end());
  if (t_eval + h_max > m.T + 1e-12 || t_eval < h_max) {
    throw InvalidInput("t_eval must keep all perturbations inside [0, T]");
  }

  const auto grid = noise::TimeGrid::uniform(0.0, m.T,
                                             static_cast<int>(base_steps));
  const auto master =
      flow::simulate_ensemble(m, grid, 0.0, m.p0, n_paths, seed, threads);
  flow::require_clean(master);
  const std::ptrdiff_t i_eval = grid->find(t_eval);
  if (i_eval < 0) throw InvalidInput("t_eval must be a grid time");

  const auto field_at = [&](const flow::FlowPath& f, std::size_t idx,
                            double x) {
    return f.H[idx] * claim.payoff(x, f.prices.col(idx));
  };

  Vec base(static_cast<Eigen::Index>(n_paths));
  for (std::size_t k = 0; k < n_paths; ++k) {
    base[static_cast<Eigen::Index>(k)] =
        field_at(master.flows[k], static_cast<std::size_t>(i_eval), x_base);
  }

  const auto moment = [&](const Vec& perturbed) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < perturbed.size(); ++k) {
      acc += std::pow(std::abs(perturbed[k] - base[k]), gamma);
    }
    return acc / static_cast<double>(perturbed.size());
  };

  Condition1Report report;
  report.gamma = gamma;
  report.ladder = ladder;

  // horizon probe: read the field later on the same paths
  std::vector<double> mom_t;
  for (double h : ladder) {
    const std::ptrdiff_t ih = grid->find(t_eval + h);
    if (ih < 0) throw InvalidInput("horizon perturbation left the grid");
    Vec v(static_cast<Eigen::Index>(n_paths));
    for (std::size_t k = 0; k < n_paths; ++k) {
      v[static_cast<Eigen::Index>(k)] =
          field_at(master.flows[k], static_cast<std::size_t>(ih), x_base);
    }
    mom_t.push_back(moment(v));
  }
  auto fit_t = fit_exponent(ladder, mom_t);
  report.alpha2 = fit_t.exponent;
  report.alpha2_degenerate = fit_t.degenerate;

  // restart probe: same noise, flow restarted at s = h from the same state
  std::vector<double> mom_s;
  for (double h : ladder) {
    Vec v(static_cast<Eigen::Index>(n_paths));
    std::exception_ptr first_error;
    std::mutex error_lock;
    parallel_for(n_paths, threads, [&](std::size_t lo, std::size_t hi) {
      try {
        for (std::size_t k = lo; k < hi; ++k) {
          const auto restricted = noise::restrict_after(master.noise[k], h);
          const auto f = flow::simulate_flow(m, restricted, h, m.p0);
          if (f.exploded) throw Explosion("restart probe exploded", h);
          const std::ptrdiff_t ih = f.grid->find(t_eval);
          v[static_cast<Eigen::Index>(k)] =
              field_at(f, static_cast<std::size_t>(ih), x_base);
        }
      } catch (...) {
        std::lock_guard<std::mutex> guard(error_lock);
        if (!first_error) first_error = std::current_exception();
      }
    });
    if (first_error) std::rethrow_exception(first_error);
    mom_s.push_back(moment(v));
  }
  auto fit_s = fit_exponent(ladder, mom_s);
  report.alpha1 = fit_s.exponent;
  report.alpha1_degenerate = fit_s.degenerate;

  // wealth probe: re-evaluate the payoff only
  const double x_scale = std::max(1.0, std::abs(x_base));
  std::vector<double> mom_x;
  for (double h : ladder) {
    Vec v(static_cast<Eigen::Index>(n_paths));
    for (std::size_t k = 0; k < n_paths; ++k) {
      v[static_cast<Eigen::Index>(k)] = field_at(
          master.flows[k], static_cast<std::size_t>(i_eval),
          x_base + h * x_scale);
    }
    mom_x.push_back(moment(v));
  }
  auto fit_x = fit_exponent(ladder, mom_x);
  report.alpha3 = fit_x.exponent;
  report.alpha3_degenerate = fit_x.degenerate;

  // price probes: common noise, bumped start coordinates
  report.beta.resize(m.n + 1);
  report.beta_degenerate.assign(static_cast<std::size_t>(m.n) + 1, 0);
  for (int c = 0; c <= m.n; ++c) {
    std::vector<double> mom_p;
    for (double h : ladder) {
      Vec start = m.p0;
      start[c] *= 1.0 + h;
      const auto bumped =
          flow::simulate_ensemble(m, grid, 0.0, start, n_paths, seed, threads);
      flow::require_clean(bumped);
      Vec v(static_cast<Eigen::Index>(n_paths));
      for (std::size_t k = 0; k < n_paths; ++k) {
        v[static_cast<Eigen::Index>(k)] =
            field_at(bumped.flows[k], static_cast<std::size_t>(i_eval), x_base);
      }
      mom_p.push_back(moment(v));
    }
    auto fit_p = fit_exponent(ladder, mom_p);
    report.beta[c] = fit_p.exponent;
    report.beta_degenerate[static_cast<std::size_t>(c)] =
        fit_p.degenerate ? 1 : 0;
  }

  double sum = 0.0;
  const auto add = [&sum](double alpha, bool degenerate) {
    if (!degenerate) sum += 1.0 / alpha;
  };
  add(report.alpha1, report.alpha1_degenerate);
  add(report.alpha2, report.alpha2_degenerate);
  add(report.alpha3, report.alpha3_degenerate);
  for (int c = 0; c <= m.n; ++c) {
    add(report.beta[c], report.beta_degenerate[static_cast<std::size_t>(c)] != 0);
  }
  report.reciprocal_sum = sum;
  report.satisfied = sum < 1.0;
  return report;
}

void write_boundary_csv(const SnellEnvelope& env, const ExerciseTable& table,
                        std::ostream& out) {
  out << "date,time,n_exercised,exercised_min_p1,exercised_max_p1\n";
  for (std::size_t i = 0; i < table.dates(); ++i) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (std::size_t k = 0; k < table.paths(); ++k) {
      if (env.stop_pos[k] != i) continue;
      const double p1 = table.states[i](static_cast<Eigen::Index>(k), 1);
      lo = std::min(lo, p1);
      hi = std::max(hi, p1);
      ++count;
    }
    out << i << ',' << format_double(table.times[i]) << ',' << count;
    if (count > 0) {
      out << ',' << format_double(lo) << ',' << format_double(hi);
    } else {
      out << ",,";
    }
    out << '\n';
  }
}

void write_value_csv(const std::string& claim_id, const SnellEnvelope& env,
                     std::ostream& out) {
  out << "claim,lower_bound,lower_se,regression_value,regression_se\n";
  out << claim_id << ',' << format_double(env.lower_bound) << ','
      << format_double(env.lower_se) << ','
      << format_double(env.regression_value) << ','
      << format_double(env.regression_se) << '\n';
}

}  // namespace tameflow::ampricer
