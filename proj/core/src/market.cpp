#include "tameflow/market.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "tameflow/errors.hpp"

namespace tameflow::market {

void validate_spec(const MarketSpec& m) {
  if (m.n < 1) throw InvalidInput("MarketSpec: need at least one stock");
  if (m.d < 1) throw InvalidInput("MarketSpec: need at least one factor");
  if (m.p0.size() != m.n + 1)
    throw InvalidInput("MarketSpec: p0 must have n+1 entries");
  for (Eigen::Index i = 0; i < m.p0.size(); ++i)
    if (!(m.p0[i] > 0.0) || !std::isfinite(m.p0[i]))
      throw InvalidInput("MarketSpec: p0 entries must be positive and finite");
  if (!(m.T > 0.0) || !std::isfinite(m.T))
    throw InvalidInput("MarketSpec: T must be positive");
  if (!m.b || !m.sigma || !m.delta || !m.r)
    throw InvalidInput("MarketSpec: all coefficient callbacks must be set");
}

void eval_coeffs(const MarketSpec& m, const Vec& p, double t, Coeffs& out) {
  out.b.resize(m.n);
  out.delta.resize(m.n);
  out.sigma.resize(m.n, m.d);
  m.b(p, t, out.b);
  m.delta(p, t, out.delta);
  m.sigma(p, t, out.sigma);
  out.r = m.r(p, t);
  if (!out.b.allFinite() || !out.delta.allFinite() ||
      !out.sigma.allFinite() || !std::isfinite(out.r))
    throw ModelEvaluation("eval_coeffs: non-finite coefficient at t=" +
                          format_double(t));
}

RiskPrice risk_price(const MarketSpec& m, const Vec& p, double t, double tol) {
  Coeffs c;
  eval_coeffs(m, p, t, c);
  Vec excess = c.b + c.delta - Vec::Constant(m.n, c.r);

  // one decomposition serves the split and the minimal-norm solve; the
  // semantics match project_kernel + solve_min_norm_rowspace on sigma
  Eigen::JacobiSVD<Mat> svd(c.sigma,
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  double cutoff = sv.size() > 0 ? tol * sv[0] : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff && sv[i] > 0.0) ++rank;

  Vec c_u = svd.matrixU().transpose() * excess;  // coordinates in Range(sigma)
  RiskPrice out;
  out.rank = rank;
  Vec v_row = Vec::Zero(m.n);
  Vec scaled = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < rank; ++i) {
    v_row += c_u[i] * svd.matrixU().col(i);
    scaled[i] = c_u[i] / sv[i];
  }
  out.theta = svd.matrixV() * scaled;
  out.kappa = excess - v_row;
  out.kappa_norm = out.kappa.norm();
  return out;
}

Box default_box(const MarketSpec& m, double scale_lo, double scale_hi) {
  if (!(scale_lo > 0.0) || !(scale_hi >= scale_lo))
    throw InvalidInput("default_box: need 0 < scale_lo <= scale_hi");
  Box box;
  box.lo = scale_lo * m.p0;
  box.hi = scale_hi * m.p0;
  box.t_lo = 0.0;
  box.t_hi = m.T;
  return box;
}

namespace {

void check_box(const MarketSpec& m, const Box& box) {
  if (box.lo.size() != m.n + 1 || box.hi.size() != m.n + 1)
    throw InvalidInput("Box: lo/hi must have n+1 entries");
  for (Eigen::Index i = 0; i <= m.n; ++i)
    if (!(box.lo[i] > 0.0) || !(box.hi[i] >= box.lo[i]))
      throw InvalidInput("Box: need 0 < lo <= hi componentwise");
  if (!(box.t_lo <= box.t_hi))
    throw InvalidInput("Box: need t_lo <= t_hi");
}

// maps a Halton point into (p, t) inside the box
void box_sample(const Box& box, std::size_t index, Vec& p, double& t) {
  int np = static_cast<int>(box.lo.size());
  Vec u = halton_point(index, np + 1);
  p.resize(np);
  for (int i = 0; i < np; ++i)
    p[i] = box.lo[i] + u[i] * (box.hi[i] - box.lo[i]);
  t = box.t_lo + u[np] * (box.t_hi - box.t_lo);
}

}  // namespace

ArbitrageReport is_state_arbitrage_free(const MarketSpec& m, const Box& box,
                                        std::size_t samples, double tol) {
  validate_spec(m);
  check_box(m, box);
  if (samples == 0) throw InvalidInput("is_state_arbitrage_free: samples == 0");

  ArbitrageReport rep;
  rep.samples = samples;
  rep.min_rank = std::min(m.n, m.d) + 1;  // sentinel above any possible rank
  Vec p;
  double t = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    box_sample(box, s, p, t);
    RiskPrice rp = risk_price(m, p, t);
    rep.min_rank = std::min(rep.min_rank, rp.rank);
    rep.max_rank = std::max(rep.max_rank, rp.rank);
    if (rp.kappa_norm > rep.worst_kappa || s == 0) {
      rep.worst_kappa = rp.kappa_norm;
      rep.witness_p = p;
      rep.witness_t = t;
    }
  }
  rep.free = rep.worst_kappa <= tol;
  return rep;
}

CompletenessReport completeness_check(const MarketSpec& m, const Box& box,
                                      const std::vector<int>& indices,
                                      std::size_t samples, double tol) {
  validate_spec(m);
  check_box(m, box);
  if (samples == 0) throw InvalidInput("completeness_check: samples == 0");
  if (indices.empty())
    throw InvalidInput("completeness_check: empty index set");
  for (int j : indices)
    if (j < 0 || j >= m.d)
      throw InvalidInput("completeness_check: column index out of range");

  CompletenessReport rep;
  rep.k = indices.size();
  rep.samples = samples;
  rep.min_rank = static_cast<Eigen::Index>(indices.size()) + 1;  // sentinel
  Coeffs c;
  Mat sub(m.n, static_cast<Eigen::Index>(indices.size()));
  Vec p;
  double t = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    box_sample(box, s, p, t);
    eval_coeffs(m, p, t, c);
    for (std::size_t j = 0; j < indices.size(); ++j)
      sub.col(static_cast<Eigen::Index>(j)) = c.sigma.col(indices[j]);
    Eigen::JacobiSVD<Mat> svd(sub);
    const Vec& sv = svd.singularValues();
    double cutoff = sv.size() > 0 ? tol * sv[0] : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > cutoff && sv[i] > 0.0) ++rank;
    if (rank < rep.min_rank || s == 0) {
      rep.min_rank = rank;
      rep.witness_p = p;
      rep.witness_t = t;
    }
    rep.max_rank = std::max(rep.max_rank, rank);
  }
  rep.complete = rep.min_rank == static_cast<Eigen::Index>(indices.size());
  return rep;
}

LipschitzReport lipschitz_screen(const MarketSpec& m, const Box& box,
                                 std::size_t samples, double bump) {
  validate_spec(m);
  check_box(m, box);
  if (!(bump > 0.0)) throw InvalidInput("lipschitz_screen: bump must be > 0");

  LipschitzReport rep;
  rep.samples = samples;
  Coeffs base, bumped;
  Vec p;
  double t = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    box_sample(box, s, p, t);
    eval_coeffs(m, p, t, base);
    for (Eigen::Index i = 0; i <= m.n; ++i) {
      double h = bump * std::max(1.0, std::abs(p[i]));
      Vec pb = p;
      pb[i] += h;
      eval_coeffs(m, pb, t, bumped);
      double q = (bumped.b - base.b).lpNorm<Eigen::Infinity>();
      q = std::max(q, (bumped.delta - base.delta).lpNorm<Eigen::Infinity>());
      q = std::max(q, (bumped.sigma - base.sigma).lpNorm<Eigen::Infinity>());
      q = std::max(q, std::abs(bumped.r - base.r));
      rep.max_quotient = std::max(rep.max_quotient, q / h);
    }
  }
  return rep;
}

}  // namespace tameflow::market
