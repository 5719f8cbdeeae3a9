#pragma once

// Rank-revealing decompositions and the subspace operations the rest of the
// engine is built on: numerical rank with a relative tolerance, orthogonal
// splits against a matrix's fundamental subspaces, minimal-norm solves
// restricted to the row space, and a deterministic nonvanishing selector of
// a row-space vector.

#include "tameflow/util.hpp"

namespace tameflow::linalg {

inline constexpr double kDefaultRankTol = 1e-10;

// Subspace summary of a matrix A (rows x cols), all bases orthonormal and
// expressed in the domain of A, i.e. R^cols:
//   rank + kernel_basis.cols() == cols
//   rowspace_basis spans Range(A') and kernel_basis spans Ker(A).
struct ProjectionReport {
  Eigen::Index rank = 0;
  double tol = kDefaultRankTol;  // relative threshold that produced `rank`
  Vec singular_values;
  Mat rowspace_basis;  // cols x rank
  Mat kernel_basis;    // cols x (cols - rank)
};

// Numerical rank: singular values above tol * largest. A zero matrix has
// rank 0 and a full kernel.
ProjectionReport rank_with_tolerance(const Mat& A, double tol = kDefaultRankTol);

// Orthogonal split of v (in R^rows, the codomain of A) into
//   v = v_ker + v_row,  v_ker in Ker(A'),  v_row in Range(A).
struct KernelSplit {
  Vec v_ker;
  Vec v_row;
};
KernelSplit project_kernel(const Mat& A, const Vec& v,
                           double tol = kDefaultRankTol);

// Minimal-norm theta with sigma * theta = rhs. The solution is orthogonal to
// Ker(sigma) by construction. Throws NoSolution (with the attained residual)
// when rhs has a component outside Range(sigma) larger than
// tol * max(1, |rhs|).
Vec solve_min_norm_rowspace(const Mat& sigma, const Vec& rhs,
                            double tol = kDefaultRankTol);

// Deterministic map sigma -> v in Range(sigma') with v != 0 exactly when
// sigma != 0. Built as the singular-value-weighted sum of sign-normalized
// right singular vectors, so it is piecewise smooth: perturbations that keep
// the singular values separated and the sign pattern stable move the output
// by O(perturbation).
Vec rowspace_selector(const Mat& sigma, double tol = kDefaultRankTol);

}  // namespace tameflow::linalg
