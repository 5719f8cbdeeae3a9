#include "tameflow/flow.hpp"

#include <cmath>
#include <ostream>

#include "tameflow/errors.hpp"

namespace tameflow::flow {

namespace {

bool finite_positive(const Vec& p) {
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (!std::isfinite(p[i]) || !(p[i] > 0.0)) return false;
  return true;
}

}  // namespace

FlowPath simulate_flow(const market::MarketSpec& m, const noise::NoisePath& w,
                       double s, const Vec& p, const SimOptions& opts) {
  market::validate_spec(m);
  if (!w.grid) throw InvalidInput("simulate_flow: empty noise path");
  if (w.d != m.d) throw InvalidInput("simulate_flow: noise dimension != d");
  if (p.size() != m.n + 1)
    throw InvalidInput("simulate_flow: start price must have n+1 entries");
  if (!finite_positive(p))
    throw InvalidInput("simulate_flow: start price must be positive finite");

  noise::NoisePath local;
  const noise::NoisePath* wp = &w;
  if (w.grid->find(s) != 0) {
    local = noise::restrict_after(w, s);
    wp = &local;
  }
  const noise::NoisePath& noise_path = *wp;
  const noise::TimeGrid& grid = *noise_path.grid;
  std::size_t mtimes = grid.size();

  FlowPath out;
  out.grid = noise_path.grid;
  out.s = s;
  out.start = p;
  out.prices.resize(m.n + 1, static_cast<Eigen::Index>(mtimes));
  out.B.resize(static_cast<Eigen::Index>(mtimes));
  out.Z.resize(static_cast<Eigen::Index>(mtimes));
  out.H.resize(static_cast<Eigen::Index>(mtimes));
  out.theta = Mat::Zero(m.d, static_cast<Eigen::Index>(mtimes));

  Vec log_p(m.n);
  for (int k = 0; k < m.n; ++k) log_p[k] = std::log(p[k + 1]);
  double log_b = 0.0;
  double log_z = 0.0;

  out.prices.col(0) = p;
  out.B[0] = 1.0;
  out.Z[0] = 1.0;
  out.H[0] = 1.0;
  out.valid_states = 1;

  // constant-coefficient markets get one decomposition for the whole path
  market::Coeffs coeffs;
  market::RiskPrice rp;
  bool cached = false;
  if (m.constant_coefficients) {
    rp = market::risk_price(m, p, grid[0], opts.rank_tol);
    market::eval_coeffs(m, p, grid[0], coeffs);
    cached = true;
    for (std::size_t i = 0; i < mtimes; ++i)
      out.theta.col(static_cast<Eigen::Index>(i)) = rp.theta;
  }

  Vec p_now = p;
  Vec sig_dw(m.n);
  for (std::size_t i = 0; i + 1 < mtimes; ++i) {
    double t_i = grid[i];
    if (!cached) {
      if (!p_now.allFinite()) {
        out.exploded = true;
        out.explosion_time = t_i;
        break;
      }
      try {
        rp = market::risk_price(m, p_now, t_i, opts.rank_tol);
        market::eval_coeffs(m, p_now, t_i, coeffs);
      } catch (const ModelEvaluation&) {
        if (i == 0) throw;  // the very first evaluation must succeed
        out.exploded = true;
        out.explosion_time = t_i;
        break;
      }
      out.theta.col(static_cast<Eigen::Index>(i)) = rp.theta;
    }
    if (rp.kappa_norm > opts.kappa_tol) {
      out.arbitrage_flag = true;
      out.kappa_max = std::max(out.kappa_max, rp.kappa_norm);
    }

    double dt = grid.dt(i);
    auto dw = noise_path.increments.row(static_cast<Eigen::Index>(i));
    double theta_dw = rp.theta.dot(dw);
    double theta_sq = rp.theta.squaredNorm();

    double dlog_z = -0.5 * theta_sq * dt - theta_dw;
    double dlog_b = coeffs.r * dt;
    log_z += dlog_z;
    log_b += dlog_b;

    sig_dw.noalias() = coeffs.sigma * dw.transpose();
    for (int k = 0; k < m.n; ++k) {
      double sig_sq = coeffs.sigma.row(k).squaredNorm();
      log_p[k] += (coeffs.b[k] - 0.5 * sig_sq) * dt + sig_dw[k];
    }

    Eigen::Index col = static_cast<Eigen::Index>(i + 1);
    double B = std::exp(log_b);
    double Z = std::exp(log_z);
    double H = std::exp(log_z - log_b);
    out.B[col] = B;
    out.Z[col] = Z;
    out.H[col] = H;
    out.prices(0, col) = p.coeff(0) * H;  // shadow identity, bit for bit
    for (int k = 0; k < m.n; ++k) out.prices(k + 1, col) = std::exp(log_p[k]);

    if (!std::isfinite(B) || !std::isfinite(Z) || !std::isfinite(H) ||
        !out.prices.col(col).allFinite()) {
      out.exploded = true;
      out.explosion_time = grid[i + 1];
      break;
    }
    p_now = out.prices.col(col);
    out.valid_states = i + 2;
  }

  if (!cached && !out.exploded) {
    // theta at the final state, for completeness of dumps and hedging rhs
    try {
      rp = market::risk_price(m, p_now, grid[mtimes - 1], opts.rank_tol);
      out.theta.col(static_cast<Eigen::Index>(mtimes - 1)) = rp.theta;
    } catch (const ModelEvaluation&) {
      // final-point coefficients are only cosmetic; leave zeros
    }
  }
  if (out.exploded) {
    // wipe columns past the last valid state so stale reads are loud
    for (std::size_t i = out.valid_states; i < mtimes; ++i) {
      out.prices.col(static_cast<Eigen::Index>(i)).setConstant(
          std::numeric_limits<double>::quiet_NaN());
      out.B[static_cast<Eigen::Index>(i)] =
          std::numeric_limits<double>::quiet_NaN();
      out.Z[static_cast<Eigen::Index>(i)] =
          std::numeric_limits<double>::quiet_NaN();
      out.H[static_cast<Eigen::Index>(i)] =
          std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

Ensemble simulate_ensemble(const market::MarketSpec& m,
                           const noise::GridPtr& grid, double s, const Vec& p,
                           std::size_t n_paths, std::uint64_t seed,
                           int threads, const SimOptions& opts) {
  Ensemble ens;
  ens.noise.resize(n_paths);
  ens.flows.resize(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      ens.noise[k] = noise::generate(grid, m.d, seed, k);
      ens.flows[k] = simulate_flow(m, ens.noise[k], s, p, opts);
    }
  });
  return ens;
}

void require_clean(const Ensemble& ens) {
  for (const auto& f : ens.flows) {
    if (f.exploded)
      throw Explosion("ensemble contains an exploded path", f.explosion_time);
  }
  for (const auto& f : ens.flows) {
    if (f.arbitrage_flag)
      throw PricingRefused(
          "ensemble visited states with nonzero arbitrage residual",
          f.kappa_max);
  }
}

Vec deflate(const FlowPath& path, const Vec& values) {
  if (values.size() != static_cast<Eigen::Index>(path.size()))
    throw InvalidInput("deflate: values length != grid size");
  return path.H.cwiseProduct(values);
}

namespace {

double rel_gap(const Vec& a, const Vec& b) {
  double g = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    g = std::max(g, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
  return g;
}

}  // namespace

ConsistencyReport check_consistency(const market::MarketSpec& m, double s,
                                    double s_mid, double t, const Vec& p,
                                    const std::vector<std::size_t>& steps_ladder,
                                    std::size_t n_paths, std::uint64_t seed,
                                    int threads, const SimOptions& opts) {
  if (!(s <= s_mid && s_mid <= t) || !(s < t))
    throw InvalidInput("check_consistency: need s <= s_mid <= t, s < t");
  if (steps_ladder.empty())
    throw InvalidInput("check_consistency: empty refinement ladder");
  if (n_paths == 0) throw InvalidInput("check_consistency: no paths");

  std::vector<std::size_t> steps = steps_ladder;
  std::sort(steps.begin(), steps.end());
  std::size_t finest = steps.back();
  double span = t - s;
  for (std::size_t lv : steps) {
    if (lv == 0 || finest % lv != 0)
      throw InvalidInput("check_consistency: ladder levels must nest");
    // s_mid must land on the level grid
    double pos = (s_mid - s) / span * static_cast<double>(lv);
    if (std::abs(pos - std::round(pos)) > 1e-9)
      throw InvalidInput("check_consistency: s_mid not on every level grid");
  }

  auto fine_grid = noise::TimeGrid::uniform(s, t, static_cast<int>(finest));
  std::size_t levels = steps.size();

  // per path and level, terminal state and restart gap
  std::vector<std::vector<Vec>> terminal(levels,
                                         std::vector<Vec>(n_paths));
  std::vector<double> restart(levels, 0.0);
  std::vector<std::vector<double>> restart_by_path(
      levels, std::vector<double>(n_paths, 0.0));

  parallel_for(n_paths, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      noise::NoisePath fine = noise::generate(fine_grid, m.d, seed, k);
      for (std::size_t lv = 0; lv < levels; ++lv) {
        noise::NoisePath w =
            steps[lv] == finest
                ? fine
                : noise::coarsen(fine, static_cast<int>(finest / steps[lv]));
        FlowPath a = simulate_flow(m, w, s, p, opts);
        if (a.exploded)
          throw Explosion("check_consistency: path exploded",
                          a.explosion_time);
        std::ptrdiff_t mid = a.grid->find(s_mid);
        Vec p_mid = a.prices.col(static_cast<Eigen::Index>(mid));
        noise::NoisePath w_tail = noise::restrict_after(w, s_mid);
        FlowPath bleg = simulate_flow(m, w_tail, s_mid, p_mid, opts);
        Vec a_end = a.prices.col(a.prices.cols() - 1);
        Vec b_end = bleg.prices.col(bleg.prices.cols() - 1);
        restart_by_path[lv][k] = rel_gap(a_end, b_end);
        terminal[lv][k] = a_end;
      }
    }
  });

  ConsistencyReport rep;
  rep.steps = steps;
  rep.restart_gaps.resize(levels, 0.0);
  for (std::size_t lv = 0; lv < levels; ++lv) {
    for (std::size_t k = 0; k < n_paths; ++k)
      rep.restart_gaps[lv] = std::max(rep.restart_gaps[lv],
                                      restart_by_path[lv][k]);
    rep.max_restart_gap = std::max(rep.max_restart_gap, rep.restart_gaps[lv]);
  }

  // rms distance between consecutive levels, attributed to the coarse dt
  std::vector<double> log_dt, log_gap;
  for (std::size_t lv = 0; lv + 1 < levels; ++lv) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n_paths; ++k) {
      double g = rel_gap(terminal[lv + 1][k], terminal[lv][k]);
      acc += g * g;
    }
    double rms = std::sqrt(acc / static_cast<double>(n_paths));
    rep.refine_gaps.push_back(rms);
    if (rms > 0.0) {
      log_dt.push_back(std::log(span / static_cast<double>(steps[lv])));
      log_gap.push_back(std::log(rms));
    }
  }
  rep.convergence_slope =
      log_dt.size() >= 2 ? fit_slope(log_dt, log_gap)
                         : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

CocycleReport check_cocycle(const market::MarketSpec& m, double s, double t,
                            const Vec& p, std::size_t steps,
                            std::size_t n_paths, std::uint64_t seed,
                            int threads, const SimOptions& opts) {
  if (!m.autonomous)
    throw Unsupported(
        "check_cocycle: defined for time-independent coefficients only");
  if (!(s >= 0.0) || !(t > 0.0))
    throw InvalidInput("check_cocycle: need s >= 0 and t > 0");
  if (steps == 0 || n_paths == 0)
    throw InvalidInput("check_cocycle: steps and paths must be positive");

  auto grid = noise::TimeGrid::uniform(0.0, s + t, static_cast<int>(steps));
  if (grid->find(s) < 0)
    throw InvalidInput("check_cocycle: s must land on the uniform grid");

  std::vector<double> gaps(n_paths, 0.0);
  parallel_for(n_paths, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      noise::NoisePath w = noise::generate(grid, m.d, seed, k);
      FlowPath a = simulate_flow(m, w, s, p, opts);            // P(s, s+t, p)
      noise::NoisePath ws = noise::shift(w, s);
      FlowPath c = simulate_flow(m, ws, 0.0, p, opts);         // P(0, t, p)
      if (a.exploded || c.exploded)
        throw Explosion("check_cocycle: path exploded",
                        a.exploded ? a.explosion_time : c.explosion_time);
      gaps[k] = rel_gap(a.prices.col(a.prices.cols() - 1),
                        c.prices.col(c.prices.cols() - 1));
    }
  });
  CocycleReport rep;
  for (double g : gaps) rep.max_gap = std::max(rep.max_gap, g);
  return rep;
}

void write_csv(const FlowPath& path, std::ostream& out) {
  int n_plus_1 = static_cast<int>(path.prices.rows());
  out << "time";
  for (int k = 0; k < n_plus_1; ++k) out << ",P" << k;
  out << ",B,Z,H\n";
  for (std::size_t i = 0; i < path.valid_states; ++i) {
    Eigen::Index c = static_cast<Eigen::Index>(i);
    out << format_double((*path.grid)[i]);
    for (int k = 0; k < n_plus_1; ++k)
      out << ',' << format_double(path.prices(k, c));
    out << ',' << format_double(path.B[c]) << ',' << format_double(path.Z[c])
        << ',' << format_double(path.H[c]) << '\n';
  }
}

}  // namespace tameflow::flow
