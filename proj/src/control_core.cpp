#include "lqrlab/control_core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

namespace lqrlab {

namespace {

constexpr Eigen::Index kKroneckerMaxDim = 64;

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

bool symmetric(const Mat& M, double tol) {
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, M.cwiseAbs().maxCoeff());
}

void require_stable(const Mat& A, const char* context) {
  const double rho = spectral_radius(A);
  if (!(rho < 1.0 - kStabilityMargin)) {
    std::ostringstream os;
    os << context << ": matrix is not Schur stable (spectral radius " << rho << ")";
    throw UnstableInputError(os.str());
  }
}

Mat dlyap_kronecker(const Mat& A, const Mat& Y) {
  const Eigen::Index n = A.rows();
  const Eigen::Index N = n * n;
  // Column-major vec: vec(A' P A) = (A' (x) A') vec(P).
  Mat M = Mat::Identity(N, N);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double aji = A(j, i);
      if (aji == 0.0) continue;
      M.block(i * n, j * n, n, n) -= aji * A.transpose();
    }
  }
  Eigen::PartialPivLU<Mat> lu(M);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("dlyap: singular Stein system");
  Vec p = lu.solve(Eigen::Map<const Vec>(Y.data(), N));
  return Eigen::Map<const Mat>(p.data(), n, n);
}

Mat dlyap_doubling(const Mat& A, const Mat& Y) {
  Mat P = Y;
  Mat Ak = A;
  for (int it = 0; it < 200; ++it) {
    Mat incr = Ak.transpose() * P * Ak;
    P += incr;
    Ak = (Ak * Ak).eval();
    if (incr.norm() <= 1e-17 * std::max(1.0, P.norm())) return P;
  }
  throw NumericalError("dlyap: doubling iteration did not converge");
}

}  // namespace

LqrInstance::LqrInstance(Mat A, Mat B, Mat Rx, Mat Ru, CostNormalization normalization)
    : A_(std::move(A)), B_(std::move(B)), Rx_(std::move(Rx)), Ru_(std::move(Ru)),
      normalization_(normalization) {
  require(A_.rows() == A_.cols() && A_.rows() > 0, "LqrInstance: A must be square and non-empty");
  require(B_.rows() == A_.rows(), "LqrInstance: rows(B) must equal dim(A)");
  require(B_.cols() > 0, "LqrInstance: B must have at least one column");
  require(Rx_.rows() == A_.rows() && Rx_.cols() == A_.rows(), "LqrInstance: R_x must be d_x x d_x");
  require(Ru_.rows() == B_.cols() && Ru_.cols() == B_.cols(), "LqrInstance: R_u must be d_u x d_u");
  require(A_.allFinite() && B_.allFinite() && Rx_.allFinite() && Ru_.allFinite(),
          "LqrInstance: non-finite entries");
  require(symmetric(Rx_, 1e-12), "LqrInstance: R_x must be symmetric");
  require(symmetric(Ru_, 1e-12), "LqrInstance: R_u must be symmetric");
  Rx_ = symmetrize(Rx_);
  Ru_ = symmetrize(Ru_);

  if (normalization_ == CostNormalization::standard) {
    require(min_eig_sym(Rx_) >= 1.0 - 1e-12, "LqrInstance: standard normalization needs R_x >= I");
    require((Ru_ - Mat::Identity(Ru_.rows(), Ru_.cols())).cwiseAbs().maxCoeff() <= 1e-12,
            "LqrInstance: standard normalization needs R_u = I");
  } else {
    require(min_eig_sym(Rx_) >= -1e-12, "LqrInstance: R_x must be PSD");
    require(min_eig_sym(Ru_) > 0.0, "LqrInstance: R_u must be PD");
  }
}

LqrInstance LqrInstance::identity_costs(Mat A, Mat B) {
  const Eigen::Index dx = A.rows();
  const Eigen::Index du = B.cols();
  return LqrInstance(std::move(A), std::move(B), Mat::Identity(dx, dx), Mat::Identity(du, du));
}

LqrInstance LqrInstance::with_dynamics(Mat A, Mat B) const {
  return LqrInstance(std::move(A), std::move(B), Rx_, Ru_, normalization_);
}

double spectral_radius(const Mat& M) {
  if (M.rows() != M.cols()) throw ValidationError("spectral_radius: matrix must be square");
  if (!M.allFinite()) throw ValidationError("spectral_radius: non-finite entries");
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_radius: eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Mat solve_dlyap(const Mat& A, const Mat& Y) {
  if (A.rows() != A.cols() || Y.rows() != A.rows() || Y.cols() != A.cols()) {
    throw ValidationError("solve_dlyap: dimension mismatch");
  }
  require_stable(A, "solve_dlyap");
  const Mat Ys = symmetrize(Y);
  Mat P = A.rows() <= kKroneckerMaxDim ? dlyap_kronecker(A, Ys) : dlyap_doubling(A, Ys);
  if (!P.allFinite()) throw NumericalError("solve_dlyap: non-finite solution");
  return symmetrize(P);
}

Mat dlyap_identity(const Mat& A) { return solve_dlyap(A, Mat::Identity(A.rows(), A.cols())); }

Mat riccati_step(const LqrInstance& inst, const Mat& P) {
  const Mat& A = inst.A();
  const Mat& B = inst.B();
  const Mat PA = P * A;
  const Mat S = inst.Ru() + B.transpose() * P * B;
  const Mat G = B.transpose() * PA;
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success) throw NumericalError("riccati_step: R_u + B'PB not positive definite");
  Mat next = inst.Rx() + A.transpose() * PA - G.transpose() * llt.solve(G);
  return symmetrize(next);
}

Mat riccati_gain(const LqrInstance& inst, const Mat& P) {
  const Mat& B = inst.B();
  const Mat S = inst.Ru() + B.transpose() * P * B;
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success) throw NumericalError("riccati_gain: R_u + B'PB not positive definite");
  return -llt.solve(B.transpose() * P * inst.A());
}

double dare_residual(const LqrInstance& inst, const Mat& P) {
  return op_norm_sym(riccati_step(inst, P) - P);
}

RiccatiSolution solve_dare(const LqrInstance& inst, const DareOptions& options) {
  if (!(options.tol > 0.0) || options.max_iter < 1) {
    throw ValidationError("solve_dare: tol must be positive and max_iter >= 1");
  }
  Mat P = options.initial ? symmetrize(*options.initial) : inst.Rx();
  if (P.rows() != inst.dx() || P.cols() != inst.dx()) {
    throw ValidationError("solve_dare: warm start has the wrong shape");
  }

  const double n_sqrt = std::sqrt(static_cast<double>(inst.dx()));
  const double divergence_guard = 1e14 * std::max(1.0, op_norm_sym(inst.Rx()));
  std::vector<double> steps;
  steps.reserve(1024);

  int it = 0;
  bool converged = false;
  while (it < options.max_iter) {
    ++it;
    Mat next = riccati_step(inst, P);
    if (!next.allFinite()) throw NotStabilizableError("solve_dare: value iteration produced non-finite values");
    const Mat diff = next - P;
    const double step_fro = diff.norm();
    const double p_fro = P.norm();
    steps.push_back(step_fro);
    // Cheap Frobenius screen before the exact operator-norm test.
    if (step_fro <= n_sqrt * options.tol * std::max(1.0, p_fro)) {
      double step_op = op_norm_sym(diff);
      if (step_op <= options.tol * std::max(1.0, op_norm_sym(P))) {
        P = std::move(next);
        converged = true;
        // With ||P|| > 1 the relative test leaves an absolute residual up to
        // tol ||P||. Keep iterating while the step still shrinks so the
        // absolute residual also reaches tol when roundoff allows it.
        for (int extra = 0; extra < 1000 && it < options.max_iter && step_op > options.tol; ++extra) {
          Mat polished = riccati_step(inst, P);
          const double s = op_norm_sym(polished - P);
          if (!(s < step_op)) break;
          ++it;
          P = std::move(polished);
          step_op = s;
        }
        break;
      }
    }
    P = std::move(next);
    if (p_fro > divergence_guard) {
      throw NotStabilizableError("solve_dare: value iteration diverged (||P|| exceeded guard)");
    }
  }

  if (!converged) {
    // Stabilizable instances contract geometrically; a stalled or growing
    // step sequence means there is no stabilizing solution.
    const size_t n = steps.size();
    const size_t lag = std::min<size_t>(n - 1, 100);
    const bool contracting = lag > 0 && steps[n - 1] < 0.999 * steps[n - 1 - lag];
    std::ostringstream os;
    os << "solve_dare: no convergence after " << options.max_iter << " iterations (last step "
       << steps.back() << ")";
    if (contracting) throw NumericalError(os.str());
    throw NotStabilizableError(os.str());
  }

  RiccatiSolution sol;
  sol.P = P;
  sol.K = riccati_gain(inst, P);
  sol.residual = dare_residual(inst, P);
  sol.iterations = it;
  const double rho = spectral_radius(inst.A() + inst.B() * sol.K);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "solve_dare: fixed point is not stabilizing (closed-loop spectral radius " << rho << ")";
    throw NotStabilizableError(os.str());
  }
  return sol;
}

ControllerValue controller_value(const LqrInstance& inst, const Mat& K) {
  if (K.rows() != inst.du() || K.cols() != inst.dx()) {
    throw ValidationError("controller_value: K must be d_u x d_x");
  }
  const Mat Acl = inst.A() + inst.B() * K;
  require_stable(Acl, "controller_value");
  ControllerValue v;
  v.P = solve_dlyap(Acl, inst.Rx() + K.transpose() * inst.Ru() * K);
  v.J = v.P.trace();
  return v;
}

double hinf_norm(const Mat& A, int grid_points) {
  if (A.rows() != A.cols()) throw ValidationError("hinf_norm: matrix must be square");
  if (grid_points < 3) throw ValidationError("hinf_norm: need at least 3 grid points");
  require_stable(A, "hinf_norm");

  using Cd = std::complex<double>;
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXcd Ac = A.cast<Cd>();
  auto resolvent_norm = [&](double theta) {
    Eigen::MatrixXcd Z = -Ac;
    Z.diagonal().array() += std::polar(1.0, theta);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Z);
    return 1.0 / svd.singularValues()(n - 1);
  };

  const double h = 2.0 * std::numbers::pi / grid_points;
  int best = 0;
  double best_val = -1.0;
  for (int j = 0; j < grid_points; ++j) {
    const double v = resolvent_norm(j * h);
    if (v > best_val) {
      best_val = v;
      best = j;
    }
  }

  // Golden-section search on [theta_{j-1}, theta_{j+1}].
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = (best - 1) * h;
  double hi = (best + 1) * h;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = resolvent_norm(x1);
  double f2 = resolvent_norm(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = resolvent_norm(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = resolvent_norm(x1);
    }
  }
  return std::max({best_val, f1, f2});
}

}  // namespace lqrlab
