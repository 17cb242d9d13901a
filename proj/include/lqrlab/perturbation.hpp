#pragma once

#include <vector>

#include "lqrlab/control_core.hpp"

namespace lqrlab {

struct CertificateConstants {
  double c_safe;  ///< 54 ||P||^5
  double c_est;   ///< 142 ||P||^8
};

/// Safe-radius and estimation constants for a normalized value matrix P >= I.
/// Throws ValidationError when ||P||_op < 1.
CertificateConstants certificate_constants(const Mat& P);

struct RiccatiDerivative {
  Mat P_prime;
  Mat K_prime;
};

/// Directional derivative of (P_inf, K_inf) at `inst` along (dA, dB).
RiccatiDerivative riccati_derivative(const LqrInstance& inst, const Mat& dA, const Mat& dB);
/// Same, reusing an already computed solution of `inst`.
RiccatiDerivative riccati_derivative(const LqrInstance& inst, const RiccatiSolution& star,
                                     const Mat& dA, const Mat& dB);

/// Derivative of K_inf along (A - t Delta K, B + t Delta), where P' vanishes:
/// -(R_u + B'PB)^{-1} Delta' P A_cl.
Mat special_perturbation_derivative(const LqrInstance& inst, const Mat& Delta);
Mat special_perturbation_derivative(const LqrInstance& inst, const RiccatiSolution& star,
                                    const Mat& Delta);

/// max(||A_hat - A||, ||B_hat - B||) in operator and Frobenius norm.
double deviation_op(const LqrInstance& inst, const Mat& A_hat, const Mat& B_hat);
double deviation_fro(const LqrInstance& inst, const Mat& A_hat, const Mat& B_hat);

struct CurveTrace {
  std::vector<double> t_grid;
  std::vector<Mat> P_samples;
  std::vector<Mat> K_samples;
  std::vector<double> p_norms;        ///< ||P(t)||_op
  std::vector<double> p_prime_norms;  ///< ||P'(t)||_op along (A_hat - A, B_hat - B)
  double eps_op = 0.0;
  double alpha = 0.0;         ///< 8 ||P(0)||^2 eps_op
  double p_norm_bound = 0.0;  ///< (1 - alpha)^{-1/2} ||P(0)||
  double max_p_norm = 0.0;
  int self_bound_violations = 0;  ///< samples with ||P'|| > 4 ||P||^3 eps_op
  int norm_bound_violations = 0;  ///< samples with ||P|| > p_norm_bound
};

/// Solves the DARE along (A + t dA, B + t dB), t in [0, 1] on n_steps + 1
/// uniform points, warm-starting each solve from the previous one, and checks
/// the derivative self-bound and the endpoint norm bound at every sample.
///
/// Throws OutsideGuaranteeError when alpha >= 1 and NotStabilizableError
/// (message carries t) when a DARE solve on the curve fails.
CurveTrace trace_riccati_curve(const LqrInstance& inst, const Mat& A_hat, const Mat& B_hat,
                               int n_steps = 32);

/// Safe test: 1/conf >= threshold_scale * 9 * C_safe(P0)^2, boundary inclusive.
/// An infinite conf is never safe. threshold_scale = 1 is the verbatim test.
bool certify_safe_neighborhood(const RiccatiSolution& sol0, double conf,
                               double threshold_scale = 1.0);

struct TaylorError {
  Mat first_order_K;     ///< K_star + K'
  double remainder_fro;  ///< ||K_inf(A_hat, B_hat) - first_order_K||_F
};

/// First-order expansion of K_inf around `inst` evaluated at (A_hat, B_hat).
/// Throws OutsideGuaranteeError when eps_op > 1 / C_safe.
TaylorError taylor_error(const LqrInstance& inst, const Mat& A_hat, const Mat& B_hat);

/// Whether A_hat_cl' D A_hat_cl <= (1 - 1/(2||D||)) D with D = dlyap(A_cl_star, I)
/// and A_hat_cl = A + B K_hat, up to an eigenvalue tolerance of 1e-9 ||D||.
bool lyapunov_contraction_check(const LqrInstance& inst, const RiccatiSolution& star,
                                const Mat& K_hat);

struct PerturbationReport {
  double eps_op = 0.0;
  double eps_fro = 0.0;
  double alpha = 0.0;
  bool safe = false;  ///< eps_op <= 1 / c_safe
  double c_safe = 0.0;
  double c_est = 0.0;

  bool hat_stabilizable = false;  ///< DARE on (A_hat, B_hat) succeeded
  bool k_hat_stabilizing = false;  ///< rho(A + B K_hat) < 1 on the true system
  Mat K_hat;
  double p_hat_norm = 0.0;       ///< ||P_inf(A_hat, B_hat)||_op
  double p_star_norm = 0.0;
  double j_gap = 0.0;            ///< J(K_hat) - J_star, +inf when not stabilizing
  double j_gap_bound = 0.0;      ///< c_est eps_fro^2
  double p_gap_op = 0.0;         ///< ||P_{K_hat} - P_star||_op
  double p_gap_bound = 0.0;      ///< c_est eps_op^2
  double lowner_margin = 0.0;    ///< min eig of (21/20) P_star - P_{K_hat}
  bool lyapunov_contraction = false;
  double hinf_hat = 0.0;         ///< Hinf(A + B K_hat), 0 when not stabilizing
  double hinf_star = 0.0;
};

/// Every quantity the perturbation certificates speak about, for one estimate.
PerturbationReport perturbation_report(const LqrInstance& inst, const RiccatiSolution& star,
                                       const Mat& A_hat, const Mat& B_hat);

}  // namespace lqrlab
