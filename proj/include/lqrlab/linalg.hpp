#pragma once

#include <Eigen/Dense>

namespace lqrlab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Small dense helpers shared by every module. Inputs are not validated beyond
// Eigen's own debug asserts.

/// Largest singular value.
double op_norm(const Mat& M);

inline double fro_norm(const Mat& M) { return M.norm(); }

/// (M + M^T) / 2.
Mat symmetrize(const Mat& M);

double min_eig_sym(const Mat& M);
double max_eig_sym(const Mat& M);

/// Operator norm of a symmetric matrix (max |eigenvalue|).
double op_norm_sym(const Mat& M);

/// True when min eig of the symmetrized matrix is at least -tol.
bool is_psd(const Mat& M, double tol = 0.0);

bool all_finite(const Mat& M);

/// Symmetric-eigenvector basis sorted by decreasing eigenvalue, with each
/// vector sign-normalized so that its largest-magnitude entry is positive.
/// Inside a cluster of repeated eigenvalues the basis is replaced by
/// canonical_basis() of the cluster's span, so the result does not depend on
/// the eigensolver's arbitrary choice; `degenerate` reports that this happened.
struct SymEigen {
  Vec values;
  Mat vectors;
  bool degenerate = false;
};
SymEigen sorted_sym_eigen(const Mat& M);

/// Deterministic orthonormal basis of range(Q) for Q with orthonormal columns:
/// pivoted Gram-Schmidt on the projections of the canonical axes onto the
/// subspace (largest remaining component first, lowest index on ties).
Mat canonical_basis(const Mat& Q);

/// Flip the sign of v so that its largest-magnitude entry is positive.
/// Ties on magnitude are broken by the first index. Returns +1 or -1, the
/// factor that was applied.
double sign_normalize(Eigen::Ref<Vec> v);

}  // namespace lqrlab
