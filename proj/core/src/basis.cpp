#include "tameflow/basis.hpp"

#include <cmath>

#include "tameflow/errors.hpp"

namespace tameflow::basis {

namespace {

void enumerate(int vars, int degree, int var, int remaining,
               std::vector<int>& current,
               std::vector<std::vector<int>>& out) {
  if (var == vars) {
    out.push_back(current);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    current[var] = e;
    enumerate(vars, degree, var + 1, remaining - e, current, out);
  }
  current[var] = 0;
}

}  // namespace

int num_terms(int vars, int degree) {
  // C(vars + degree, degree)
  long long c = 1;
  for (int i = 1; i <= degree; ++i) c = c * (vars + i) / i;
  return static_cast<int>(c);
}

FeatureMap::FeatureMap(int n, const Vec& p_ref, const BasisSpec& spec)
    : n_(n), p_ref_(p_ref), spec_(spec) {
  if (n < 0 || p_ref.size() != n + 1) {
    throw InvalidInput("feature map: reference price has wrong size");
  }
  if ((p_ref.array() <= 0.0).any() || !p_ref.allFinite()) {
    throw InvalidInput("feature map: reference price must be positive");
  }
  if (spec.degree < 1) throw InvalidInput("feature map: degree must be >= 1");
  vars_ = n + 1 + (spec.include_wealth ? 1 : 0);
  std::vector<int> current(vars_, 0);
  enumerate(vars_, spec.degree, 0, spec.degree, current, expo_);
}

void FeatureMap::eval(const Vec& p, double x, Vec& out) const {
  if (p.size() != n_ + 1) {
    throw InvalidInput("feature map: state has wrong size");
  }
  Vec z(vars_);
  for (int k = 0; k <= n_; ++k) {
    if (!(p[k] > 0.0) || !std::isfinite(p[k])) {
      throw InvalidInput("feature map: prices must be positive and finite");
    }
    z[k] = std::log(p[k] / p_ref_[k]);
  }
  if (spec_.include_wealth) z[n_ + 1] = x;

  // powers[k][e] = z_k^e
  Mat powers(vars_, spec_.degree + 1);
  powers.col(0).setOnes();
  for (int e = 1; e <= spec_.degree; ++e) {
    powers.col(e) = powers.col(e - 1).cwiseProduct(z);
  }
  out.resize(count());
  for (int j = 0; j < count(); ++j) {
    double v = 1.0;
    for (int k = 0; k < vars_; ++k) {
      const int e = expo_[j][k];
      if (e > 0) v *= powers(k, e);
    }
    out[j] = v;
  }
}

void Regression::predict(const Vec& features, Vec& out) const {
  out = y_mean;
  for (Eigen::Index j = 0; j < x_mean.size(); ++j) {
    if (x_scale[j] <= 0.0) continue;
    const double zj = (features[j] - x_mean[j]) / x_scale[j];
    out.noalias() += zj * coef.row(j).transpose();
  }
}

double Regression::predict_one(const Vec& features, Eigen::Index target) const {
  double v = y_mean[target];
  for (Eigen::Index j = 0; j < x_mean.size(); ++j) {
    if (x_scale[j] <= 0.0) continue;
    v += (features[j] - x_mean[j]) / x_scale[j] * coef(j, target);
  }
  return v;
}

Regression fit(const Mat& X, const Mat& Y, double rank_tol) {
  if (X.rows() != Y.rows()) {
    throw InvalidInput("regression: design and target row counts differ");
  }
  if (!X.allFinite() || !Y.allFinite()) {
    throw DegenerateBasis("regression design holds non-finite entries");
  }
  if (X.rows() < X.cols()) {
    throw DegenerateBasis("regression has fewer observations than basis terms");
  }
  const Eigen::Index rows = X.rows();
  const Eigen::Index cols = X.cols();

  Regression reg;
  reg.x_mean = X.colwise().mean();
  reg.y_mean = Y.colwise().mean();
  reg.x_scale.resize(cols);

  Mat Xs = X.rowwise() - reg.x_mean.transpose();
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double sd = std::sqrt(Xs.col(j).squaredNorm() / rows);
    if (sd <= 1e-12 * std::max(1.0, std::abs(reg.x_mean[j]))) {
      reg.x_scale[j] = 0.0;  // constant column, absorbed by the intercept
      Xs.col(j).setZero();
    } else {
      reg.x_scale[j] = sd;
      Xs.col(j) /= sd;
    }
  }
  const Mat Yc = Y.rowwise() - reg.y_mean.transpose();

  // Minimum-norm least squares through a truncated SVD. Polynomial designs
  // are routinely collinear (and exactly zero at the start date, where every
  // path shares one state), so the solve must honor the rank tolerance
  // instead of dividing by noise-level pivots.
  Eigen::BDCSVD<Mat> svd(Xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(rank_tol);
  reg.coef = svd.solve(Yc);
  reg.rank = svd.rank();
  if (!reg.coef.allFinite()) {
    throw DegenerateBasis("regression solve produced non-finite coefficients");
  }
  return reg;
}

}  // namespace tameflow::basis
