#include "tameflow/europricer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "tameflow/errors.hpp"

namespace tameflow::europricer {

namespace {

MeanSE mean_se_vec(const Vec& v) {
  std::vector<double> tmp(v.data(), v.data() + v.size());
  return mean_se(tmp);
}

// deflated income accumulation along one path, wealth argument zero
double deflated_income(const claims::ClaimSpec& claim, const flow::FlowPath& f,
                       const noise::NoisePath& w, std::size_t expiry) {
  if (!claim.has_income()) return 0.0;
  double acc = 0.0;
  Vec vol(w.d);
  const auto& times = f.grid->times();
  for (std::size_t i = 0; i < expiry; ++i) {
    const Vec p = f.prices.col(i);
    const double drift = claim.income_drift(0.0, p, times[i]);
    claim.income_vol(0.0, p, times[i], vol);
    const double dg = drift * (times[i + 1] - times[i]) +
                      vol.dot(w.increments.row(i));
    if (!std::isfinite(dg)) {
      throw ModelEvaluation("claim income returned a non-finite value at t=" +
                            format_double(times[i]));
    }
    acc += f.H[i] * dg;
  }
  return acc;
}

int stocks_of(const flow::Ensemble& ens) {
  if (ens.size() == 0) throw InvalidInput("empty ensemble");
  return static_cast<int>(ens.flows.front().prices.rows()) - 1;
}

void sign_normalize(Vec& v) {
  Eigen::Index pivot = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      pivot = i;
    }
  }
  if (v[pivot] < 0.0) v = -v;
}

}  // namespace

Vec deflated_payoffs(const market::MarketSpec& m, const flow::Ensemble& ens,
                     const claims::ClaimSpec& claim) {
  market::validate_spec(m);
  claims::validate_claim(claim, m.d);
  flow::require_clean(ens);
  if (ens.size() == 0) throw InvalidInput("empty ensemble");
  if (claim.inside && !claim.inside(ens.flows.front().start)) {
    throw InvalidInput("claim continuation region must contain the start state");
  }
  Vec out(static_cast<Eigen::Index>(ens.size()));
  for (std::size_t k = 0; k < ens.size(); ++k) {
    const auto& f = ens.flows[k];
    const std::size_t tau = claims::expiry_index(claim, f);
    const double g = claim.payoff(0.0, f.prices.col(tau));
    if (!std::isfinite(g)) {
      throw ModelEvaluation("claim payoff returned a non-finite value");
    }
    out[static_cast<Eigen::Index>(k)] =
        f.H[tau] * g - deflated_income(claim, f, ens.noise[k], tau);
  }
  return out;
}

PriceResult price_european(const market::MarketSpec& m,
                           const flow::Ensemble& ens,
                           const claims::ClaimSpec& claim) {
  const Vec values = deflated_payoffs(m, ens, claim);
  const auto ms = mean_se_vec(values);
  return {ms.mean, ms.se, ens.size()};
}

PriceResult price_european(const market::MarketSpec& m,
                           const claims::ClaimSpec& claim, double s,
                           const Vec& p, std::size_t n_paths,
                           std::size_t steps, std::uint64_t seed,
                           int threads) {
  const auto grid = noise::TimeGrid::uniform(s, m.T, static_cast<int>(steps));
  const auto ens = flow::simulate_ensemble(m, grid, s, p, n_paths, seed, threads);
  return price_european(m, ens, claim);
}

ValueSurface::ValueSurface(noise::GridPtr grid, basis::FeatureMap features,
                           std::vector<basis::Regression> per_time)
    : grid_(std::move(grid)),
      features_(std::move(features)),
      per_time_(std::move(per_time)) {}

double ValueSurface::eval(std::size_t i, const Vec& p, double x) const {
  Vec feat(features_.count());
  features_.eval(p, x, feat);
  return per_time_.at(i).predict_one(feat);
}

ValueSurface fit_value_surface(const flow::Ensemble& ens, const Vec& totals,
                               const basis::BasisSpec& spec) {
  flow::require_clean(ens);
  if (spec.include_wealth) {
    throw InvalidInput("value surface regressions run on the price state only");
  }
  const std::size_t paths = ens.size();
  if (totals.size() != static_cast<Eigen::Index>(paths)) {
    throw InvalidInput("value surface: one total per path required");
  }
  const int n = stocks_of(ens);
  basis::FeatureMap fm(n, ens.flows.front().start, spec);
  const std::size_t times = ens.flows.front().size();

  const Mat targets = totals;
  std::vector<basis::Regression> fits;
  fits.reserve(times);
  Mat design(paths, fm.count());
  for (std::size_t i = 0; i < times; ++i) {
    parallel_for(paths, 1, [&](std::size_t lo, std::size_t hi) {
      Vec feat(fm.count());
      for (std::size_t k = lo; k < hi; ++k) {
        fm.eval(ens.flows[k].prices.col(i), 0.0, feat);
        design.row(static_cast<Eigen::Index>(k)) = feat.transpose();
      }
    });
    fits.push_back(basis::fit(design, targets));
  }
  return ValueSurface(ens.flows.front().grid, std::move(fm), std::move(fits));
}

Mat value_matrix(const ValueSurface& surf, const flow::Ensemble& ens,
                 const Mat* X) {
  const std::size_t paths = ens.size();
  const std::size_t times = ens.flows.front().size();
  Mat out(paths, times);
  parallel_for(paths, 1, [&](std::size_t lo, std::size_t hi) {
    Vec feat(surf.features().count());
    for (std::size_t k = lo; k < hi; ++k) {
      for (std::size_t i = 0; i < times; ++i) {
        const double x = X ? (*X)(static_cast<Eigen::Index>(k),
                                  static_cast<Eigen::Index>(i))
                           : 0.0;
        surf.features().eval(ens.flows[k].prices.col(i), x, feat);
        out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
            surf.at(i).predict_one(feat);
      }
    }
  });
  return out;
}

MartingaleScreen check_martingale(const Mat& Y) {
  if (Y.rows() < 2 || Y.cols() < 1) {
    throw InvalidInput("martingale screen needs a populated value matrix");
  }
  MartingaleScreen screen;
  std::vector<double> diff(static_cast<std::size_t>(Y.rows()));
  for (Eigen::Index i = 1; i < Y.cols(); ++i) {
    for (Eigen::Index k = 0; k < Y.rows(); ++k) {
      diff[static_cast<std::size_t>(k)] = Y(k, i) - Y(k, 0);
    }
    const auto ms = mean_se(diff);
    double z;
    if (ms.se > 0.0) {
      z = std::abs(ms.mean) / ms.se;
    } else {
      z = ms.mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    if (z > screen.worst_z) screen.worst_z = z;
  }
  screen.passes = screen.worst_z <= 3.0;
  return screen;
}

RepresentationEstimate::RepresentationEstimate(
    noise::GridPtr grid, basis::FeatureMap features,
    std::vector<basis::Regression> per_interval, std::vector<int> driving,
    int d)
    : grid_(std::move(grid)),
      features_(std::move(features)),
      per_interval_(std::move(per_interval)),
      driving_(std::move(driving)),
      d_(d) {}

void RepresentationEstimate::eval(std::size_t interval, const Vec& p, double x,
                                  Vec& out) const {
  Vec feat(features_.count());
  features_.eval(p, x, feat);
  per_interval_.at(interval).predict(feat, out);
}

RepresentationEstimate estimate_representation(
    const Mat& Y, const flow::Ensemble& ens, const basis::BasisSpec& spec,
    const std::vector<int>& driving, const Mat* X, const Mat* alive) {
  flow::require_clean(ens);
  const std::size_t paths = ens.size();
  const std::size_t times = ens.flows.front().size();
  if (Y.rows() != static_cast<Eigen::Index>(paths) ||
      Y.cols() != static_cast<Eigen::Index>(times)) {
    throw InvalidInput("representation: value matrix shape mismatch");
  }
  if (spec.include_wealth && X == nullptr) {
    throw InvalidInput("representation: wealth basis needs the wealth matrix");
  }
  if (alive && (alive->rows() != static_cast<Eigen::Index>(paths) ||
                alive->cols() + 1 != static_cast<Eigen::Index>(times))) {
    throw InvalidInput("representation: alive mask shape mismatch");
  }
  const int n = stocks_of(ens);
  const int d = ens.noise.front().d;
  for (int j : driving) {
    if (j < 0 || j >= d) throw InvalidInput("driving index out of range");
  }

  basis::FeatureMap fm(n, ens.flows.front().start, spec);
  const auto& grid = *ens.flows.front().grid;
  std::vector<basis::Regression> fits;
  fits.reserve(times - 1);

  std::vector<char> keep_component(static_cast<std::size_t>(d), 1);
  if (!driving.empty()) {
    std::fill(keep_component.begin(), keep_component.end(), 0);
    for (int j : driving) keep_component[static_cast<std::size_t>(j)] = 1;
  }

  std::vector<std::size_t> rows;
  rows.reserve(paths);
  for (std::size_t i = 0; i + 1 < times; ++i) {
    rows.clear();
    for (std::size_t k = 0; k < paths; ++k) {
      if (!alive || (*alive)(static_cast<Eigen::Index>(k),
                             static_cast<Eigen::Index>(i)) != 0.0) {
        rows.push_back(k);
      }
    }
    if (rows.size() < static_cast<std::size_t>(fm.count())) {
      if (!alive) {
        throw DegenerateBasis("representation fit at t=" +
                              format_double(grid.times()[i]) +
                              " has fewer paths than basis terms");
      }
      // a masked fit may run out of live paths near the end; degrade to a
      // constant (or zero) prediction instead of refusing the whole estimate
      basis::Regression reg;
      reg.x_mean = Vec::Zero(fm.count());
      reg.x_scale = Vec::Zero(fm.count());
      reg.y_mean = Vec::Zero(d);
      reg.coef = Mat::Zero(fm.count(), d);
      reg.rank = 0;
      if (!rows.empty()) {
        const double dt_i = grid.dt(i);
        for (std::size_t k : rows) {
          const Eigen::Index kk = static_cast<Eigen::Index>(k);
          const double dy = Y(kk, static_cast<Eigen::Index>(i) + 1) -
                            Y(kk, static_cast<Eigen::Index>(i));
          reg.y_mean += (dy / dt_i) *
                        ens.noise[k].increments.row(i).transpose();
        }
        reg.y_mean /= static_cast<double>(rows.size());
        for (int j = 0; j < d; ++j) {
          if (!keep_component[static_cast<std::size_t>(j)]) reg.y_mean[j] = 0.0;
        }
      }
      fits.push_back(std::move(reg));
      continue;
    }
    const double dt = grid.dt(i);
    Mat design(rows.size(), fm.count());
    Mat target(rows.size(), d);
    parallel_for(rows.size(), 1, [&](std::size_t lo, std::size_t hi) {
      Vec feat(fm.count());
      for (std::size_t rr = lo; rr < hi; ++rr) {
        const std::size_t k = rows[rr];
        const Eigen::Index kk = static_cast<Eigen::Index>(k);
        const double x = X ? (*X)(kk, static_cast<Eigen::Index>(i)) : 0.0;
        fm.eval(ens.flows[k].prices.col(i), x, feat);
        design.row(static_cast<Eigen::Index>(rr)) = feat.transpose();
        const double dy = Y(kk, static_cast<Eigen::Index>(i) + 1) -
                          Y(kk, static_cast<Eigen::Index>(i));
        target.row(static_cast<Eigen::Index>(rr)) =
            (dy / dt) * ens.noise[k].increments.row(i);
      }
    });
    basis::Regression reg = basis::fit(design, target);
    for (int j = 0; j < d; ++j) {
      if (!keep_component[static_cast<std::size_t>(j)]) {
        reg.y_mean[j] = 0.0;
        reg.coef.col(j).setZero();
      }
    }
    fits.push_back(std::move(reg));
  }
  return RepresentationEstimate(ens.flows.front().grid, std::move(fm),
                                std::move(fits), driving, d);
}

HedgePath synthesize_hedge(const market::MarketSpec& m,
                           const flow::FlowPath& f, const Vec& X,
                           const Mat& phi, double tol) {
  market::validate_spec(m);
  if (f.exploded || f.valid_states != f.size()) {
    throw InvalidInput("synthesize_hedge needs a complete flow path");
  }
  const std::size_t times = f.size();
  if (X.size() != static_cast<Eigen::Index>(times) ||
      phi.rows() != m.d || phi.cols() != static_cast<Eigen::Index>(times)) {
    throw InvalidInput("synthesize_hedge: path shape mismatch");
  }
  HedgePath hedge;
  hedge.grid = f.grid;
  hedge.pi0.resize(times);
  hedge.pi.resize(m.n, times);

  market::Coeffs coeffs;
  if (m.constant_coefficients) {
    market::eval_coeffs(m, f.start, f.grid->times().front(), coeffs);
  }
  for (std::size_t i = 0; i < times; ++i) {
    const Vec p = f.prices.col(i);
    const double t = f.grid->times()[i];
    if (!m.constant_coefficients) market::eval_coeffs(m, p, t, coeffs);
    const Vec rhs = phi.col(i) / f.H[i] + X[i] * f.theta.col(i);
    Vec pi;
    try {
      pi = linalg::solve_min_norm_rowspace(coeffs.sigma.transpose(), rhs, tol);
    } catch (const NoSolution& e) {
      throw HedgingInfeasible(
          "hedge system unsolvable at t=" + format_double(t) +
              ": right hand side leaves the traded span",
          e.residual());
    }
    const double res = (coeffs.sigma.transpose() * pi - rhs).norm();
    if (res > hedge.max_residual) hedge.max_residual = res;
    hedge.pi.col(i) = pi;
    hedge.pi0[i] = X[i] - pi.sum();
  }
  return hedge;
}

wealth::PortfolioRule hedge_rule(const market::MarketSpec& m,
                                 const RepresentationEstimate& rep,
                                 double shadow_ref, double tol) {
  market::validate_spec(m);
  if (!(shadow_ref > 0.0)) {
    throw InvalidInput("hedge rule needs a positive shadow reference price");
  }
  wealth::PortfolioRule rule;
  rule.name = "hedge";

  if (m.constant_coefficients) {
    market::Coeffs coeffs;
    market::eval_coeffs(m, m.p0, 0.0, coeffs);
    const auto rp = market::risk_price(m, m.p0, 0.0);
    // thin SVD of sigma' applied as a pseudo-inverse, factored once
    Eigen::JacobiSVD<Mat> svd(coeffs.sigma.transpose(),
                              Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues().size() > 0
                            ? svd.singularValues()[0]
                            : 0.0;
    Mat u = svd.matrixU();
    Mat v = svd.matrixV();
    Vec sv = svd.singularValues();
    const Mat sigma_t = coeffs.sigma.transpose();
    const Vec theta = rp.theta;
    const auto rep_copy = rep;
    rule.pi = [rep_copy, sigma_t, u, v, sv, smax, theta, shadow_ref,
               tol](double x, const Vec& p, double t, Vec& out) {
      const std::size_t interval = rep_copy.grid()->interval_of(t);
      Vec phi(rep_copy.d());
      rep_copy.eval(interval, p, x, phi);
      const double h = p[0] / shadow_ref;
      const Vec rhs = phi / h + x * theta;
      Vec y = u.transpose() * rhs;
      for (Eigen::Index j = 0; j < sv.size(); ++j) {
        y[j] = sv[j] > linalg::kDefaultRankTol * smax ? y[j] / sv[j] : 0.0;
      }
      out.noalias() = v * y;
      const double res = (sigma_t * out - rhs).norm();
      if (res > tol * std::max(1.0, rhs.norm())) {
        throw HedgingInfeasible(
            "hedge system unsolvable at t=" + format_double(t) +
                ": right hand side leaves the traded span",
            res);
      }
    };
    return rule;
  }

  market::MarketSpec local = m;
  const auto rep_copy = rep;
  rule.pi = [local, rep_copy, shadow_ref, tol](double x, const Vec& p,
                                               double t, Vec& out) {
    const std::size_t interval = rep_copy.grid()->interval_of(t);
    Vec phi(rep_copy.d());
    rep_copy.eval(interval, p, x, phi);
    market::Coeffs coeffs;
    market::eval_coeffs(local, p, t, coeffs);
    const auto rp = market::risk_price(local, p, t);
    const double h = p[0] / shadow_ref;
    const Vec rhs = phi / h + x * rp.theta;
    try {
      out = linalg::solve_min_norm_rowspace(coeffs.sigma.transpose(), rhs, tol);
    } catch (const NoSolution& e) {
      throw HedgingInfeasible(
          "hedge system unsolvable at t=" + format_double(t) +
              ": right hand side leaves the traded span",
          e.residual());
    }
  };
  return rule;
}

ReplicationReport replication_backtest(const market::MarketSpec& m,
                                       const claims::ClaimSpec& claim,
                                       const wealth::PortfolioRule& rule,
                                       double price,
                                       const noise::GridPtr& grid, double s,
                                       const Vec& p, std::size_t n_paths,
                                       std::uint64_t seed, int threads) {
  claims::validate_claim(claim, m.d);
  if (claim.inside) {
    throw Unsupported("replication backtests support fixed-horizon claims");
  }
  const auto ens = flow::simulate_ensemble(m, grid, s, p, n_paths, seed, threads);
  flow::require_clean(ens);
  const auto wens = wealth::simulate_wealth_ensemble(m, ens, rule, price, threads);

  ReplicationReport report;
  report.price = price;
  report.paths = n_paths;
  const std::size_t last = grid->size() - 1;
  double sq = 0.0, mean = 0.0;
  for (std::size_t k = 0; k < n_paths; ++k) {
    const double err = wens.paths[k].X[static_cast<Eigen::Index>(last)] -
                       claim.payoff(0.0, ens.flows[k].prices.col(last));
    sq += err * err;
    mean += err;
  }
  report.rmse = std::sqrt(sq / static_cast<double>(n_paths));
  report.mean_error = mean / static_cast<double>(n_paths);
  report.rmse_rel = price != 0.0 ? report.rmse / std::abs(price)
                                 : report.rmse;
  return report;
}

WitnessResult incompleteness_witness(const market::MarketSpec& m,
                                     const std::vector<int>& complement,
                                     double tol) {
  market::validate_spec(m);
  std::vector<char> in_complement(static_cast<std::size_t>(m.d), 0);
  for (int j : complement) {
    if (j < 0 || j >= m.d) {
      throw InvalidInput("witness: complement index out of range");
    }
    if (in_complement[static_cast<std::size_t>(j)]) {
      throw InvalidInput("witness: duplicate complement index");
    }
    in_complement[static_cast<std::size_t>(j)] = 1;
  }
  std::vector<int> driving;
  for (int j = 0; j < m.d; ++j) {
    if (!in_complement[static_cast<std::size_t>(j)]) driving.push_back(j);
  }

  market::Coeffs coeffs;
  market::eval_coeffs(m, m.p0, 0.0, coeffs);

  WitnessResult result;
  result.driving = driving;

  double scale = 0.0;
  if (!complement.empty()) {
    Mat block(m.n, static_cast<Eigen::Index>(complement.size()));
    for (std::size_t c = 0; c < complement.size(); ++c) {
      block.col(static_cast<Eigen::Index>(c)) = coeffs.sigma.col(complement[c]);
    }
    scale = linalg::rowspace_selector(block, tol).norm();
  }

  if (scale <= 0.0) {
    // the selector vanished: the integrand is forced to zero and the claim
    // degenerates to holding x in the bond
    result.status = WitnessStatus::TriviallyHedgeable;
    result.psi = Vec::Zero(m.d);
    result.claim.id = "witness-trivial";
    result.claim.payoff = [](double x, const Vec&) { return x; };
    result.claim.wealth_dependent = true;
    result.claim.driving = driving;
    return result;
  }

  if (driving.empty()) {
    throw WitnessUnavailable(
        "witness: no Brownian components left to drive the claim");
  }
  Mat drive_block(m.n, static_cast<Eigen::Index>(driving.size()));
  for (std::size_t c = 0; c < driving.size(); ++c) {
    drive_block.col(static_cast<Eigen::Index>(c)) =
        coeffs.sigma.col(driving[c]);
  }
  const auto rep = linalg::rank_with_tolerance(drive_block, tol);
  if (rep.kernel_basis.cols() == 0) {
    throw WitnessUnavailable(
        "witness: the driving volatility block has full column rank, every "
        "claim on it is hedgeable");
  }
  Vec direction = rep.kernel_basis.col(0);
  sign_normalize(direction);

  result.status = WitnessStatus::NotHedgeable;
  result.selector_norm = scale;
  result.psi = Vec::Zero(m.d);
  for (std::size_t c = 0; c < driving.size(); ++c) {
    result.psi[driving[c]] = scale * direction[static_cast<Eigen::Index>(c)];
  }
  result.residual = result.psi.norm();
  result.claim.id = "witness";
  result.claim.payoff = [](double x, const Vec&) { return x; };
  result.claim.wealth_dependent = true;
  result.claim.driving = driving;
  return result;
}

WitnessPaths simulate_witness(const flow::Ensemble& ens, const Vec& psi,
                              double x0) {
  flow::require_clean(ens);
  const std::size_t paths = ens.size();
  const std::size_t times = ens.flows.front().size();
  if (psi.size() != static_cast<Eigen::Index>(ens.noise.front().d)) {
    throw InvalidInput("witness integrand dimension mismatch");
  }
  WitnessPaths out;
  out.X.resize(paths, times);
  out.Y.resize(paths, times);
  parallel_for(paths, 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& f = ens.flows[k];
      const auto& w = ens.noise[k];
      const Eigen::Index kk = static_cast<Eigen::Index>(k);
      // Accumulate the deflated value y directly so it stays a martingale to
      // rounding; the wealth path is recovered as y / H.
      double y = x0;
      out.X(kk, 0) = y / f.H[0];
      out.Y(kk, 0) = y;
      for (std::size_t i = 0; i + 1 < times; ++i) {
        y += psi.dot(w.increments.row(i));
        out.X(kk, static_cast<Eigen::Index>(i) + 1) = y / f.H[i + 1];
        out.Y(kk, static_cast<Eigen::Index>(i) + 1) = y;
      }
    }
  });
  return out;
}

void write_hedge_csv(const HedgePath& hedge, const Mat& phi,
                     std::ostream& out) {
  const std::size_t times = hedge.grid->size();
  out << "time,pi0";
  for (Eigen::Index j = 0; j < hedge.pi.rows(); ++j) {
    out << ",pi" << (j + 1);
  }
  for (Eigen::Index j = 0; j < phi.rows(); ++j) {
    out << ",phi" << (j + 1);
  }
  out << '\n';
  for (std::size_t i = 0; i < times; ++i) {
    const Eigen::Index ii = static_cast<Eigen::Index>(i);
    out << format_double(hedge.grid->times()[i]) << ','
        << format_double(hedge.pi0[ii]);
    for (Eigen::Index j = 0; j < hedge.pi.rows(); ++j) {
      out << ',' << format_double(hedge.pi(j, ii));
    }
    for (Eigen::Index j = 0; j < phi.rows(); ++j) {
      out << ',' << format_double(phi(j, ii));
    }
    out << '\n';
  }
}

}  // namespace tameflow::europricer
