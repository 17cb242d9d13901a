#pragma once

#include "lqrlab/linalg.hpp"

namespace lqrlab {

/// Eigenvalues below this fraction of lambda_max count as zero, both in the
/// OLS pseudo-inverse and in the confidence radius.
inline constexpr double kPinvCutoff = 1e-12;

struct OlsEstimate {
  Mat A_hat;
  Mat B_hat;
  Mat Lambda;  ///< sum_t z_t z_t', z_t = (x_t, u_t)
  long n_samples = 0;
  bool rank_deficient = false;
  double normal_residual = 0.0;  ///< ||[A_hat B_hat] Lambda - sum_t x_{t+1} z_t'||_op
};

/// Least squares fit of x_{t+1} ~ [A B] z_t. `states` holds x_t .. x_{t'} as
/// columns (one more column than `inputs`, which holds u_t .. u_{t'-1}).
OlsEstimate ols_fit(const Mat& states, const Mat& inputs);

/// Same fit from accumulated sums: Lambda = sum z z', cross = sum x_{t+1} z'.
OlsEstimate ols_from_sums(const Mat& Lambda, const Mat& cross, Eigen::Index dx, long n_samples);

/// Eigen-decomposition pseudo-inverse with cutoff kPinvCutoff * lambda_max.
Mat psd_pinv(const Mat& Lambda, bool* rank_deficient = nullptr);

/// 6 lambda_min(Lambda)^{-1} (d log 5 + log(4 k^2 det(3 Lambda) / delta)), with
/// log det evaluated as a sum of logs. +infinity when Lambda is numerically
/// singular (lambda_min <= kPinvCutoff * lambda_max).
double confidence_radius(const Mat& Lambda, long k, double delta);

/// Splits (x, u) space into span{(x, K x)} (basis_perp, d_x columns) and its
/// orthogonal complement (basis_par, d_u columns). P_mat projects onto the
/// complement, i.e. it annihilates every (x, K x).
struct ExplorationProjector {
  Mat P_mat;
  Mat basis_par;
  Mat basis_perp;
};

ExplorationProjector exploration_projector(const Mat& K_hat);

struct TwoScaleDiagnostics {
  double min_par, min_perp, max_par, max_perp;
  double cross;  ///< ||P Lambda (I - P)||_op
};

/// Extreme values of v' Lambda v over unit v in range(P) and in its complement,
/// computed from the eigenvalues of the compressed matrices.
TwoScaleDiagnostics two_scale_diagnostics(const Mat& Lambda, const ExplorationProjector& proj);

/// Checks X^2 >= (lambda1^2/4) P + (lambda1^2 lambda2^2 / (16 nu^2)) (I - P) up to
/// -1e-9 ||X||^2 on the minimum eigenvalue. Requires X >= lambda1 P + lambda2 (I - P),
/// ||P X (I - P)|| <= nu, lambda1 <= nu <= lambda2 and nu <= sqrt(lambda1 lambda2)/2;
/// a violated requirement throws PreconditionError naming it.
bool squared_lowner_check(const Mat& X, const ExplorationProjector& proj, double lambda1,
                          double lambda2, double nu);

}  // namespace lqrlab
