#include "lqrlab/estimation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lqrlab/errors.hpp"

namespace lqrlab {

Mat psd_pinv(const Mat& Lambda, bool* rank_deficient) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(Lambda));
  const Vec& ev = es.eigenvalues();
  const double cutoff = kPinvCutoff * std::max(0.0, ev.maxCoeff());
  Vec inv(ev.size());
  bool deficient = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cutoff && ev(i) > 0.0) {
      inv(i) = 1.0 / ev(i);
    } else {
      inv(i) = 0.0;
      deficient = true;
    }
  }
  if (rank_deficient) *rank_deficient = deficient;
  return symmetrize(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
}

OlsEstimate ols_from_sums(const Mat& Lambda, const Mat& cross, Eigen::Index dx, long n_samples) {
  const Eigen::Index d = Lambda.rows();
  if (Lambda.cols() != d || cross.rows() != dx || cross.cols() != d || dx <= 0 || dx >= d) {
    throw ValidationError("ols_from_sums: inconsistent dimensions");
  }
  if (n_samples < 1) throw ValidationError("ols_fit: window must contain at least one sample");
  OlsEstimate est;
  est.Lambda = symmetrize(Lambda);
  est.n_samples = n_samples;
  const Mat theta = cross * psd_pinv(est.Lambda, &est.rank_deficient);
  est.A_hat = theta.leftCols(dx);
  est.B_hat = theta.rightCols(d - dx);
  est.normal_residual = op_norm(theta * est.Lambda - cross);
  return est;
}

OlsEstimate ols_fit(const Mat& states, const Mat& inputs) {
  const Eigen::Index n = inputs.cols();
  if (states.cols() != n + 1) {
    throw ValidationError("ols_fit: states must have exactly one more column than inputs");
  }
  const Eigen::Index dx = states.rows();
  const Eigen::Index d = dx + inputs.rows();
  Mat Z(d, n);
  Z.topRows(dx) = states.leftCols(n);
  Z.bottomRows(d - dx) = inputs;
  const Mat Lambda = Z * Z.transpose();
  const Mat cross = states.rightCols(n) * Z.transpose();
  return ols_from_sums(Lambda, cross, dx, static_cast<long>(n));
}

double confidence_radius(const Mat& Lambda, long k, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("confidence_radius: delta must lie in (0, 1)");
  if (k < 1) throw ValidationError("confidence_radius: epoch index must be >= 1");
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(Lambda), Eigen::EigenvaluesOnly);
  const Vec& ev = es.eigenvalues();
  const double lmin = ev.minCoeff();
  const double lmax = ev.maxCoeff();
  if (!(lmax > 0.0) || !(lmin > kPinvCutoff * lmax)) return std::numeric_limits<double>::infinity();
  const double d = static_cast<double>(ev.size());
  double logdet3 = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) logdet3 += std::log(3.0 * ev(i));
  const double kd = static_cast<double>(k);
  return 6.0 / lmin * (d * std::log(5.0) + std::log(4.0 * kd * kd) + logdet3 - std::log(delta));
}

ExplorationProjector exploration_projector(const Mat& K_hat) {
  const Eigen::Index du = K_hat.rows();
  const Eigen::Index dx = K_hat.cols();
  const Eigen::Index d = dx + du;
  Mat M(d, dx);
  M.topRows(dx).setIdentity();
  M.bottomRows(du) = K_hat;
  Eigen::HouseholderQR<Mat> qr(M);
  const Mat Q = qr.householderQ() * Mat::Identity(d, d);

  ExplorationProjector proj;
  proj.basis_perp = Q.leftCols(dx);
  proj.basis_par = Q.rightCols(du);
  for (Mat* basis : {&proj.basis_perp, &proj.basis_par}) {
    for (Eigen::Index j = 0; j < basis->cols(); ++j) {
      Vec c = basis->col(j);
      sign_normalize(c);
      basis->col(j) = c;
    }
  }
  proj.P_mat = symmetrize(proj.basis_par * proj.basis_par.transpose());
  return proj;
}

TwoScaleDiagnostics two_scale_diagnostics(const Mat& Lambda, const ExplorationProjector& proj) {
  const Eigen::Index d = proj.P_mat.rows();
  if (Lambda.rows() != d || Lambda.cols() != d) {
    throw ValidationError("two_scale_diagnostics: Lambda and projector dimensions differ");
  }
  const Mat par = proj.basis_par.transpose() * Lambda * proj.basis_par;
  const Mat perp = proj.basis_perp.transpose() * Lambda * proj.basis_perp;
  TwoScaleDiagnostics out{};
  if (par.size() > 0) {
    out.min_par = min_eig_sym(par);
    out.max_par = max_eig_sym(par);
  }
  if (perp.size() > 0) {
    out.min_perp = min_eig_sym(perp);
    out.max_perp = max_eig_sym(perp);
  }
  const Mat I = Mat::Identity(d, d);
  out.cross = op_norm(proj.P_mat * Lambda * (I - proj.P_mat));
  return out;
}

bool squared_lowner_check(const Mat& X, const ExplorationProjector& proj, double lambda1,
                          double lambda2, double nu) {
  const Eigen::Index d = proj.P_mat.rows();
  if (X.rows() != d || X.cols() != d) {
    throw ValidationError("squared_lowner_check: X and projector dimensions differ");
  }
  auto fail = [](const std::string& what) {
    throw PreconditionError("squared_lowner_check: precondition violated: " + what);
  };
  if (!(lambda1 > 0.0 && lambda2 > 0.0 && nu > 0.0)) fail("lambda1, lambda2, nu > 0");
  if (!(lambda1 <= nu)) fail("lambda1 <= nu");
  if (!(nu <= lambda2)) fail("nu <= lambda2");
  if (!(nu <= 0.5 * std::sqrt(lambda1 * lambda2))) fail("nu <= sqrt(lambda1 lambda2)/2");

  const Mat& P = proj.P_mat;
  const Mat I = Mat::Identity(d, d);
  const Mat Xs = symmetrize(X);
  const double scale = std::max(1.0, op_norm_sym(Xs));
  if (min_eig_sym(Xs - lambda1 * P - lambda2 * (I - P)) < -1e-9 * scale) {
    fail("X >= lambda1 P + lambda2 (I - P)");
  }
  const double cross = op_norm(P * Xs * (I - P));
  if (cross > nu * (1.0 + 1e-12)) fail("||P X (I - P)|| <= nu");

  const Mat target = 0.25 * lambda1 * lambda1 * P +
                     (lambda1 * lambda1 * lambda2 * lambda2 / (16.0 * nu * nu)) * (I - P);
  return min_eig_sym(Xs * Xs - target) >= -1e-9 * scale * scale;
}

}  // namespace lqrlab
