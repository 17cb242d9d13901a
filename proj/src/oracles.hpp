#pragma once

// Reference computations used by the acceptance suite and the unit tests.
// They deliberately avoid the production solvers: dlyap is summed as a
// series, the DARE is refined by policy iteration, and derivatives are
// central finite differences.

#include <cmath>
#include <stdexcept>

#include "lqrlab/control_core.hpp"

namespace lqrlab::oracle {

/// sum_k (A')^k Y A^k, stopping once a term is below 1e-18 of the sum.
inline Mat series_dlyap(const Mat& A, const Mat& Y, int max_terms = 200000) {
  Mat sum = Y;
  Mat term = Y;
  for (int k = 1; k < max_terms; ++k) {
    term = A.transpose() * term * A;
    sum += term;
    if (term.norm() <= 1e-18 * std::max(1.0, sum.norm())) return 0.5 * (sum + sum.transpose());
  }
  throw std::runtime_error("series_dlyap: series did not converge");
}

/// Policy iteration P <- dlyap(A + BK, R_x + K'R_u K), K <- gain(P), started
/// from the value-iteration solution and run to a fixed point in floating point.
inline RiccatiSolution policy_iteration_dare(const LqrInstance& inst) {
  RiccatiSolution sol = solve_dare(inst);
  Mat P = sol.P;
  for (int it = 0; it < 50; ++it) {
    const Mat S = inst.Ru() + inst.B().transpose() * P * inst.B();
    const Mat K = -S.ldlt().solve(inst.B().transpose() * P * inst.A());
    const Mat Acl = inst.A() + inst.B() * K;
    const Mat next = series_dlyap(Acl, inst.Rx() + K.transpose() * inst.Ru() * K);
    const double step = (next - P).norm();
    P = next;
    if (step <= 1e-15 * P.norm()) break;
  }
  const Mat S = inst.Ru() + inst.B().transpose() * P * inst.B();
  sol.P = P;
  sol.K = -S.ldlt().solve(inst.B().transpose() * P * inst.A());
  return sol;
}

struct FdDerivative {
  Mat P_prime;
  Mat K_prime;
};

/// Central differences of (P_inf, K_inf) along (dA, dB) with step h.
inline FdDerivative fd_riccati_derivative(const LqrInstance& inst, const Mat& dA, const Mat& dB,
                                          double h) {
  const RiccatiSolution plus = policy_iteration_dare(inst.with_dynamics(inst.A() + h * dA, inst.B() + h * dB));
  const RiccatiSolution minus = policy_iteration_dare(inst.with_dynamics(inst.A() - h * dA, inst.B() - h * dB));
  return {(plus.P - minus.P) / (2.0 * h), (plus.K - minus.K) / (2.0 * h)};
}

/// Positive root of the scalar DARE p = q + a^2 p - a^2 b^2 p^2 / (r + b^2 p).
inline double scalar_dare(double a, double b, double q, double r) {
  // Multiply through by (r + b^2 p): b^2 p^2 + (r - q b^2 - a^2 r) p - q r = 0.
  const double qa = b * b;
  const double qb = r - q * b * b - a * a * r;
  const double qc = -q * r;
  return (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
}

/// Explicit normal-equation solve for [A B] from z_t = (x_t, u_t), targets x_{t+1}.
inline Mat normal_equations(const Mat& states, const Mat& inputs) {
  const Eigen::Index n = inputs.cols();
  const Eigen::Index dx = states.rows();
  Mat Z(dx + inputs.rows(), n);
  Z << states.leftCols(n), inputs;
  const Mat G = Z * Z.transpose();
  const Mat rhs = Z * states.rightCols(n).transpose();
  return G.fullPivLu().solve(rhs).transpose();
}

}  // namespace lqrlab::oracle
