#pragma once

#include <optional>

#include "lqrlab/errors.hpp"
#include "lqrlab/linalg.hpp"

namespace lqrlab {

/// Margin on Schur-stability checks: rho(A) must be below 1 - kStabilityMargin.
inline constexpr double kStabilityMargin = 1e-9;

enum class CostNormalization {
  /// R_x >= I and R_u = I, the normalization all certificates assume.
  standard,
  /// Any symmetric PSD R_x and symmetric PD R_u.
  general,
};

/// Dynamics x_{t+1} = A x_t + B u_t + w_t with stage cost x'R_x x + u'R_u u.
class LqrInstance {
 public:
  LqrInstance(Mat A, Mat B, Mat Rx, Mat Ru,
              CostNormalization normalization = CostNormalization::standard);

  /// R_x = I, R_u = I.
  static LqrInstance identity_costs(Mat A, Mat B);

  /// Same costs and normalization, different dynamics.
  LqrInstance with_dynamics(Mat A, Mat B) const;

  const Mat& A() const noexcept { return A_; }
  const Mat& B() const noexcept { return B_; }
  const Mat& Rx() const noexcept { return Rx_; }
  const Mat& Ru() const noexcept { return Ru_; }
  Eigen::Index dx() const noexcept { return A_.rows(); }
  Eigen::Index du() const noexcept { return B_.cols(); }
  CostNormalization normalization() const noexcept { return normalization_; }

 private:
  Mat A_, B_, Rx_, Ru_;
  CostNormalization normalization_;
};

struct RiccatiSolution {
  Mat P;  ///< value-function quadratic form
  Mat K;  ///< optimal gain, u = K x
  double residual = 0.0;  ///< operator norm of the DARE defect at P
  int iterations = 0;
};

struct DareOptions {
  double tol = 1e-12;
  int max_iter = 100000;
  /// Warm start; defaults to R_x.
  std::optional<Mat> initial;
};

/// max |lambda| over the complex spectrum.
double spectral_radius(const Mat& M);

/// Solution P of P = A' P A + Y for Schur-stable A, i.e. sum_k (A')^k Y A^k.
/// Kronecker-form linear solve up to dimension 64, doubling iteration above.
Mat solve_dlyap(const Mat& A, const Mat& Y);

/// solve_dlyap(A, I).
Mat dlyap_identity(const Mat& A);

/// One step of the Riccati recursion P -> R_x + A'PA - A'PB (R_u + B'PB)^{-1} B'PA.
Mat riccati_step(const LqrInstance& inst, const Mat& P);

/// -(R_u + B'PB)^{-1} B'PA.
Mat riccati_gain(const LqrInstance& inst, const Mat& P);

/// Operator norm of riccati_step(P) - P.
double dare_residual(const LqrInstance& inst, const Mat& P);

/// Stabilizing DARE solution by value iteration from R_x (or the warm start),
/// stopping once ||P_{t+1} - P_t|| <= tol * max(1, ||P_t||).
///
/// Throws NotStabilizableError when the iterates diverge or stall, and
/// NumericalError when they are still contracting at max_iter.
RiccatiSolution solve_dare(const LqrInstance& inst, const DareOptions& options = {});

struct ControllerValue {
  Mat P;     ///< dlyap(A + BK, R_x + K'R_u K)
  double J;  ///< trace(P), the average cost of u = Kx under unit noise
};

/// Cost-to-go of the fixed gain K. Throws UnstableInputError if A + BK is not stable.
ControllerValue controller_value(const LqrInstance& inst, const Mat& K);

/// sup over |z| = 1 of ||(zI - A)^{-1}||, evaluated on a uniform grid plus a
/// golden-section refinement around the best grid point. This is a lower
/// bound on the true supremum.
double hinf_norm(const Mat& A, int grid_points = 720);

}  // namespace lqrlab
