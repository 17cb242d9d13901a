#include "lqrlab/perturbation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace lqrlab {

namespace {

void check_shapes(const LqrInstance& inst, const Mat& dA, const Mat& dB, const char* who) {
  if (dA.rows() != inst.dx() || dA.cols() != inst.dx() || dB.rows() != inst.dx() ||
      dB.cols() != inst.du()) {
    throw ValidationError(std::string(who) + ": perturbation shape does not match the instance");
  }
}

Eigen::LLT<Mat> s_factor(const LqrInstance& inst, const Mat& P) {
  Eigen::LLT<Mat> llt(inst.Ru() + inst.B().transpose() * P * inst.B());
  if (llt.info() != Eigen::Success) throw NumericalError("R_u + B'PB not positive definite");
  return llt;
}

}  // namespace

CertificateConstants certificate_constants(const Mat& P) {
  const double p = op_norm_sym(P);
  if (!(p >= 1.0 - 1e-12)) {
    std::ostringstream os;
    os << "certificate_constants: ||P|| = " << p << " < 1 violates the R_x >= I normalization";
    throw ValidationError(os.str());
  }
  return {54.0 * std::pow(p, 5), 142.0 * std::pow(p, 8)};
}

RiccatiDerivative riccati_derivative(const LqrInstance& inst, const Mat& dA, const Mat& dB) {
  check_shapes(inst, dA, dB, "riccati_derivative");
  return riccati_derivative(inst, solve_dare(inst), dA, dB);
}

RiccatiDerivative riccati_derivative(const LqrInstance& inst, const RiccatiSolution& star,
                                     const Mat& dA, const Mat& dB) {
  check_shapes(inst, dA, dB, "riccati_derivative");
  const Mat& P = star.P;
  const Mat& K = star.K;
  const Mat& B = inst.B();
  const Mat Acl = inst.A() + B * K;
  const Mat dAcl = dA + dB * K;
  const Mat PdAcl = P * dAcl;

  RiccatiDerivative d;
  d.P_prime = solve_dlyap(Acl, Acl.transpose() * PdAcl + PdAcl.transpose() * Acl);
  const Mat rhs = dB.transpose() * P * Acl + B.transpose() * PdAcl + B.transpose() * d.P_prime * Acl;
  d.K_prime = -s_factor(inst, P).solve(rhs);
  return d;
}

Mat special_perturbation_derivative(const LqrInstance& inst, const Mat& Delta) {
  return special_perturbation_derivative(inst, solve_dare(inst), Delta);
}

Mat special_perturbation_derivative(const LqrInstance& inst, const RiccatiSolution& star,
                                    const Mat& Delta) {
  if (Delta.rows() != inst.dx() || Delta.cols() != inst.du()) {
    throw ValidationError("special_perturbation_derivative: Delta must be d_x x d_u");
  }
  const Mat Acl = inst.A() + inst.B() * star.K;
  return -s_factor(inst, star.P).solve(Delta.transpose() * star.P * Acl);
}

double deviation_op(const LqrInstance& inst, const Mat& A_hat, const Mat& B_hat) {
  check_shapes(inst, A_hat, B_hat, "deviation_op");
  return std::max(op_norm(A_hat - inst.A()), op_norm(B_hat - inst.B()));
}

double deviation_fro(const LqrInstance& inst, const Mat& A_hat, const Mat& B_hat) {
  check_shapes(inst, A_hat, B_hat, "deviation_fro");
  return std::max((A_hat - inst.A()).norm(), (B_hat - inst.B()).norm());
}

CurveTrace trace_riccati_curve(const LqrInstance& inst, const Mat& A_hat, const Mat& B_hat,
                               int n_steps) {
  if (n_steps < 1) throw ValidationError("trace_riccati_curve: n_steps must be >= 1");
  CurveTrace tr;
  tr.eps_op = deviation_op(inst, A_hat, B_hat);
  const Mat dA = A_hat - inst.A();
  const Mat dB = B_hat - inst.B();

  RiccatiSolution sol = solve_dare(inst);
  const double p0 = op_norm_sym(sol.P);
  tr.alpha = 8.0 * p0 * p0 * tr.eps_op;
  if (!(tr.alpha < 1.0)) {
    std::ostringstream os;
    os << "trace_riccati_curve: alpha = " << tr.alpha << " >= 1, outside the certified regime";
    throw OutsideGuaranteeError(os.str());
  }
  tr.p_norm_bound = p0 / std::sqrt(1.0 - tr.alpha);

  for (int i = 0; i <= n_steps; ++i) {
    const double t = static_cast<double>(i) / n_steps;
    const LqrInstance at = inst.with_dynamics(inst.A() + t * dA, inst.B() + t * dB);
    if (i > 0) {
      DareOptions opts;
      opts.initial = sol.P;
      try {
        sol = solve_dare(at, opts);
      } catch (const NotStabilizableError& e) {
        std::ostringstream os;
        os << "trace_riccati_curve: not stabilizable on the curve at t = " << t << " (" << e.what()
           << ")";
        throw NotStabilizableError(os.str());
      }
    }
    const double pn = op_norm_sym(sol.P);
    const double ppn = op_norm_sym(riccati_derivative(at, sol, dA, dB).P_prime);
    tr.t_grid.push_back(t);
    tr.P_samples.push_back(sol.P);
    tr.K_samples.push_back(sol.K);
    tr.p_norms.push_back(pn);
    tr.p_prime_norms.push_back(ppn);
    tr.max_p_norm = std::max(tr.max_p_norm, pn);
    // Relative slack of 1e-9 absorbs solver tolerance.
    if (ppn > 4.0 * pn * pn * pn * tr.eps_op * (1.0 + 1e-9) + 1e-12) ++tr.self_bound_violations;
    if (pn > tr.p_norm_bound * (1.0 + 1e-9)) ++tr.norm_bound_violations;
  }
  return tr;
}

bool certify_safe_neighborhood(const RiccatiSolution& sol0, double conf, double threshold_scale) {
  if (std::isnan(conf) || !(conf > 0.0)) {
    throw ValidationError("certify_safe_neighborhood: conf must be positive");
  }
  if (!(threshold_scale > 0.0)) {
    throw ValidationError("certify_safe_neighborhood: threshold_scale must be positive");
  }
  if (std::isinf(conf)) return false;
  const double c_safe = certificate_constants(sol0.P).c_safe;
  const double threshold = threshold_scale * 9.0 * c_safe * c_safe;
  return 1.0 / conf >= threshold * (1.0 - 8.0 * std::numeric_limits<double>::epsilon());
}

TaylorError taylor_error(const LqrInstance& inst, const Mat& A_hat, const Mat& B_hat) {
  const RiccatiSolution star = solve_dare(inst);
  const double eps = deviation_op(inst, A_hat, B_hat);
  const double c_safe = certificate_constants(star.P).c_safe;
  if (eps > 1.0 / c_safe) {
    std::ostringstream os;
    os << "taylor_error: eps_op = " << eps << " exceeds the safe radius 1/C_safe = " << 1.0 / c_safe;
    throw OutsideGuaranteeError(os.str());
  }
  const RiccatiDerivative d = riccati_derivative(inst, star, A_hat - inst.A(), B_hat - inst.B());
  DareOptions opts;
  opts.initial = star.P;
  const RiccatiSolution hat = solve_dare(inst.with_dynamics(A_hat, B_hat), opts);
  TaylorError out;
  out.first_order_K = star.K + d.K_prime;
  out.remainder_fro = (hat.K - out.first_order_K).norm();
  return out;
}

bool lyapunov_contraction_check(const LqrInstance& inst, const RiccatiSolution& star,
                                const Mat& K_hat) {
  if (K_hat.rows() != inst.du() || K_hat.cols() != inst.dx()) {
    throw ValidationError("lyapunov_contraction_check: K_hat must be d_u x d_x");
  }
  const Mat D = dlyap_identity(inst.A() + inst.B() * star.K);
  const double d_norm = op_norm_sym(D);
  const Mat Ahat = inst.A() + inst.B() * K_hat;
  if (!Ahat.allFinite()) return false;
  const Mat gap = (1.0 - 0.5 / d_norm) * D - Ahat.transpose() * D * Ahat;
  return min_eig_sym(gap) >= -1e-9 * d_norm;
}

PerturbationReport perturbation_report(const LqrInstance& inst, const RiccatiSolution& star,
                                       const Mat& A_hat, const Mat& B_hat) {
  PerturbationReport r;
  r.eps_op = deviation_op(inst, A_hat, B_hat);
  r.eps_fro = deviation_fro(inst, A_hat, B_hat);
  r.p_star_norm = op_norm_sym(star.P);
  r.alpha = 8.0 * r.p_star_norm * r.p_star_norm * r.eps_op;
  const CertificateConstants cc = certificate_constants(star.P);
  r.c_safe = cc.c_safe;
  r.c_est = cc.c_est;
  r.safe = r.eps_op <= 1.0 / r.c_safe;
  r.j_gap_bound = r.c_est * r.eps_fro * r.eps_fro;
  r.p_gap_bound = r.c_est * r.eps_op * r.eps_op;
  r.hinf_star = hinf_norm(inst.A() + inst.B() * star.K);

  const double inf = std::numeric_limits<double>::infinity();
  r.j_gap = inf;
  r.p_gap_op = inf;
  r.lowner_margin = -inf;
  try {
    DareOptions opts;
    opts.initial = star.P;
    const RiccatiSolution hat = solve_dare(inst.with_dynamics(A_hat, B_hat), opts);
    r.hat_stabilizable = true;
    r.K_hat = hat.K;
    r.p_hat_norm = op_norm_sym(hat.P);
  } catch (const NumericalError&) {
    return r;
  }

  const Mat Acl_hat = inst.A() + inst.B() * r.K_hat;
  r.k_hat_stabilizing = spectral_radius(Acl_hat) < 1.0 - kStabilityMargin;
  r.lyapunov_contraction = lyapunov_contraction_check(inst, star, r.K_hat);
  if (!r.k_hat_stabilizing) return r;

  const ControllerValue v = controller_value(inst, r.K_hat);
  r.j_gap = v.J - star.P.trace();
  r.p_gap_op = op_norm_sym(v.P - star.P);
  r.lowner_margin = min_eig_sym(1.05 * star.P - v.P);
  r.hinf_hat = hinf_norm(Acl_hat);
  return r;
}

}  // namespace lqrlab
