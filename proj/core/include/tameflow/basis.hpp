#pragma once

// Polynomial state basis and the least-squares fits used by the valuation
// and hedging layers. Features are total-degree-bounded monomials in the
// log-relative augmented prices (stock 0 carries the deflator, so its log
// doubles as the log-deflator coordinate) and optionally the running
// wealth. Columns are centered and scaled before the solve and fits carry
// an implicit intercept, so fitted values always preserve the sample mean
// of the target.

#include <vector>

#include "tameflow/linalg.hpp"
#include "tameflow/util.hpp"

namespace tameflow::basis {

struct BasisSpec {
  int degree = 4;
  bool include_wealth = false;
};

// number of monomials of total degree <= degree in `vars` variables
int num_terms(int vars, int degree);

class FeatureMap {
 public:
  // p_ref has size n+1 and anchors the log-relative coordinates
  FeatureMap(int n, const Vec& p_ref, const BasisSpec& spec);

  int vars() const { return vars_; }
  int count() const { return static_cast<int>(expo_.size()); }
  const BasisSpec& spec() const { return spec_; }

  // fills `out` (size count()) with the monomials at state (p, x)
  void eval(const Vec& p, double x, Vec& out) const;

 private:
  int n_ = 0;
  int vars_ = 0;
  Vec p_ref_;
  BasisSpec spec_;
  std::vector<std::vector<int>> expo_;  // one exponent vector per monomial
};

struct Regression {
  Vec x_mean;
  Vec x_scale;  // zero marks a column dropped as constant
  Vec y_mean;
  Mat coef;     // features x targets, in standardized coordinates
  Eigen::Index rank = 0;

  Eigen::Index targets() const { return y_mean.size(); }
  void predict(const Vec& features, Vec& out) const;
  double predict_one(const Vec& features, Eigen::Index target = 0) const;
};

// Ordinary least squares of every column of Y on the rows of X, rank
// deficiency resolved by pivoted-QR truncation. Throws DegenerateBasis when
// the design has non-finite entries or fewer rows than columns.
Regression fit(const Mat& X, const Mat& Y,
               double rank_tol = linalg::kDefaultRankTol);

}  // namespace tameflow::basis
