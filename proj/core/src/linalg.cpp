#include "tameflow/linalg.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "tameflow/errors.hpp"

namespace tameflow::linalg {

namespace {

void require_finite(const Mat& A, const char* who) {
  if (!A.allFinite())
    throw InvalidInput(std::string(who) + ": non-finite matrix entry");
}

void require_finite(const Vec& v, const char* who) {
  if (!v.allFinite())
    throw InvalidInput(std::string(who) + ": non-finite vector entry");
}

Eigen::Index numerical_rank(const Vec& sv, double tol) {
  if (sv.size() == 0) return 0;
  double cutoff = tol * sv[0];  // singular values are sorted descending
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff && sv[i] > 0.0) ++r;
  return r;
}

// Flip a unit vector to a canonical sign: the entry of largest magnitude
// (lowest index on ties) is made positive. Keeps the selector well defined
// across the sign ambiguity of the SVD.
Vec sign_normalize(const Vec& v) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double a = std::abs(v[i]);
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  return v[arg] < 0.0 ? Vec(-v) : v;
}

}  // namespace

ProjectionReport rank_with_tolerance(const Mat& A, double tol) {
  require_finite(A, "rank_with_tolerance");
  if (A.rows() == 0 || A.cols() == 0)
    throw InvalidInput("rank_with_tolerance: empty matrix");
  if (!(tol >= 0.0)) throw InvalidInput("rank_with_tolerance: bad tolerance");

  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  ProjectionReport rep;
  rep.tol = tol;
  rep.singular_values = svd.singularValues();
  rep.rank = numerical_rank(rep.singular_values, tol);
  const Mat& V = svd.matrixV();  // cols x cols, orthonormal
  rep.rowspace_basis = V.leftCols(rep.rank);
  rep.kernel_basis = V.rightCols(A.cols() - rep.rank);
  return rep;
}

KernelSplit project_kernel(const Mat& A, const Vec& v, double tol) {
  require_finite(A, "project_kernel");
  require_finite(v, "project_kernel");
  if (v.size() != A.rows())
    throw InvalidInput("project_kernel: v must live in the codomain of A");

  // Range(A) and Ker(A') are the row space and kernel of A', so reuse the
  // domain-side report on the transpose.
  ProjectionReport rep = rank_with_tolerance(A.transpose(), tol);
  KernelSplit out;
  out.v_row = rep.rowspace_basis * (rep.rowspace_basis.transpose() * v);
  out.v_ker = v - out.v_row;
  return out;
}

Vec solve_min_norm_rowspace(const Mat& sigma, const Vec& rhs, double tol) {
  require_finite(sigma, "solve_min_norm_rowspace");
  require_finite(rhs, "solve_min_norm_rowspace");
  if (rhs.size() != sigma.rows())
    throw InvalidInput("solve_min_norm_rowspace: rhs/sigma shape mismatch");
  if (!(tol >= 0.0)) throw InvalidInput("solve_min_norm_rowspace: bad tolerance");

  Eigen::JacobiSVD<Mat> svd(sigma, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  Eigen::Index r = numerical_rank(sv, tol);

  // pseudo-inverse restricted to the leading r singular directions gives the
  // least-squares solution of minimal norm
  Vec c = svd.matrixU().transpose() * rhs;
  Vec scaled = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < r; ++i) scaled[i] = c[i] / sv[i];
  Vec theta = svd.matrixV() * scaled;

  double residual = (sigma * theta - rhs).norm();
  if (residual > tol * std::max(1.0, rhs.norm()))
    throw NoSolution("solve_min_norm_rowspace: rhs outside Range(sigma), residual=" +
                         format_double(residual),
                     residual);
  return theta;
}

Vec rowspace_selector(const Mat& sigma, double tol) {
  ProjectionReport rep = rank_with_tolerance(sigma, tol);
  Vec out = Vec::Zero(sigma.cols());
  for (Eigen::Index i = 0; i < rep.rank; ++i)
    out += rep.singular_values[i] * sign_normalize(rep.rowspace_basis.col(i));
  return out;
}

}  // namespace tameflow::linalg
