#include "lqrlab/adaptive_ce.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "lqrlab/perturbation.hpp"

namespace lqrlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_power_of_two(long t) { return t > 0 && (t & (t - 1)) == 0; }

long floor_log2(long t) {
  long k = 0;
  while ((2L << k) <= t) ++k;
  return k;
}

Mat clip_op(const Mat& D, double radius) {
  Eigen::JacobiSVD<Mat> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec s = svd.singularValues().cwiseMin(radius);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double gap_or_inf(const LqrInstance& inst, const Mat& K, double j_star) {
  if (spectral_radius(inst.A() + inst.B() * K) >= 1.0 - kStabilityMargin) return kInf;
  return controller_value(inst, K).J - j_star;
}

// Algorithm 1 as a Policy: accumulates the OLS sums of the running epoch and
// re-plans whenever t hits tau_k = 2^k, k >= 2.
class CePolicy final : public Policy {
 public:
  CePolicy(const LqrInstance& inst, const Mat& K0, double delta, double threshold_scale)
      : inst_(inst),
        K0_(K0),
        delta_(delta),
        threshold_scale_(threshold_scale),
        star_(solve_dare(inst)),
        j_star_(star_.P.trace()),
        star_proj_(exploration_projector(star_.K)),
        K_(K0),
        Lambda_(Mat::Zero(inst.dx() + inst.du(), inst.dx() + inst.du())),
        cross_(Mat::Zero(inst.dx(), inst.dx() + inst.du())),
        z_(inst.dx() + inst.du()) {}

  Vec act(long t, const Vec& x, GaussianRng& explore) override {
    if (t == 1) return explore.normal_vec(inst_.du());
    if (t >= 4 && is_power_of_two(t)) start_epoch(t);
    Vec u = K_ * x;
    u += sigma_ * explore.normal_vec(inst_.du());
    return u;
  }

  void observe(long t, const Vec& x, const Vec& u, const Vec& x_next) override {
    if (t < 2) return;
    z_.head(inst_.dx()) = x;
    z_.tail(inst_.du()) = u;
    Lambda_.selfadjointView<Eigen::Lower>().rankUpdate(z_);
    cross_.noalias() += x_next * z_.transpose();
    ++n_window_;
  }

  long current_epoch() const noexcept { return epochs_.empty() ? 1 : epochs_.back().k; }
  const std::vector<EpochRecord>& epochs() const noexcept { return epochs_; }
  std::vector<EpochRecord>& epochs() noexcept { return epochs_; }
  const std::optional<SafeBall>& ball() const noexcept { return ball_; }
  long k_safe() const noexcept { return k_safe_; }
  double j_star() const noexcept { return j_star_; }

 private:
  void start_epoch(long tau) {
    EpochRecord rec;
    rec.k = floor_log2(tau);
    rec.tau_k = tau;
    const Mat Lambda = Lambda_.selfadjointView<Eigen::Lower>();
    rec.estimate = ols_from_sums(Lambda, cross_, inst_.dx(), n_window_);
    Lambda_.setZero();
    cross_.setZero();
    n_window_ = 0;
    rec.conf = confidence_radius(rec.estimate.Lambda, rec.k, delta_);

    if (!ball_) {
      rec.mode = EpochMode::warmup;
      rec.K_used = K0_;
      rec.sigma_sq = 1.0;
      if (safe_test(rec)) {
        rec.safe_test_passed = true;
        k_safe_ = rec.k;
        ball_ = safe_round_init(inst_, rec.estimate.A_hat, rec.estimate.B_hat, rec.conf, delta_);
      }
    } else {
      rec.mode = EpochMode::safe;
      const Projected pr = project_to_ball(rec.estimate.A_hat, rec.estimate.B_hat, *ball_);
      rec.projected = pr.moved;
      try {
        rec.K_used = solve_dare(inst_.with_dynamics(pr.A, pr.B)).K;
      } catch (const NumericalError&) {
        rec.K_used = K0_;
        rec.dare_fallback = true;
      }
      rec.sigma_sq = std::min(1.0, ball_->sigma_in_sq / std::sqrt(static_cast<double>(tau)));
    }

    const Mat dA = rec.estimate.A_hat - inst_.A();
    const Mat dB = rec.estimate.B_hat - inst_.B();
    Mat E(inst_.dx(), inst_.dx() + inst_.du());
    E << dA, dB;
    rec.est_err_fro_sq = E.squaredNorm();
    rec.est_err_par_sq = (E * star_proj_.basis_par).squaredNorm();
    rec.est_err_perp_sq = (E * star_proj_.basis_perp).squaredNorm();
    rec.j_gap_true = gap_or_inf(inst_, rec.K_used, j_star_);

    K_ = rec.K_used;
    sigma_ = std::sqrt(rec.sigma_sq);
    epochs_.push_back(std::move(rec));
  }

  bool safe_test(const EpochRecord& rec) const {
    if (std::isinf(rec.conf) || min_eig_sym(rec.estimate.Lambda) < 1.0) return false;
    // C_safe >= 54 because ||P|| >= 1, so this screen never rejects a passing estimate.
    if (1.0 / rec.conf < threshold_scale_ * 9.0 * 54.0 * 54.0 * 0.999) return false;
    try {
      const RiccatiSolution hat =
          solve_dare(inst_.with_dynamics(rec.estimate.A_hat, rec.estimate.B_hat));
      return certify_safe_neighborhood(hat, rec.conf, threshold_scale_);
    } catch (const Error&) {
      return false;
    }
  }

  const LqrInstance& inst_;
  Mat K0_;
  double delta_;
  double threshold_scale_;
  RiccatiSolution star_;
  double j_star_;
  ExplorationProjector star_proj_;

  Mat K_;
  double sigma_ = 1.0;
  Mat Lambda_;
  Mat cross_;
  Vec z_;
  long n_window_ = 0;
  std::vector<EpochRecord> epochs_;
  std::optional<SafeBall> ball_;
  long k_safe_ = -1;
};

}  // namespace

const char* to_string(EpochMode mode) { return mode == EpochMode::safe ? "safe" : "warmup"; }

double sigma_in_sq_formula(Eigen::Index dx, double p_norm, double b_norm, double delta,
                           bool* log_clamped) {
  double lg = std::log(p_norm / delta);
  const bool clamp = !(lg >= std::log(2.0));
  if (clamp) lg = std::log(2.0);
  if (log_clamped) *log_clamped = clamp;
  return std::sqrt(static_cast<double>(dx)) * std::pow(p_norm, 4.5) * std::max(1.0, b_norm) *
         std::sqrt(lg);
}

SafeBall safe_round_init(const LqrInstance& costs, const Mat& A_hat, const Mat& B_hat, double conf,
                         double delta) {
  if (!(conf > 0.0) || std::isinf(conf)) {
    throw ValidationError("safe_round_init: conf must be finite and positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("safe_round_init: delta must lie in (0, 1)");
  const LqrInstance hat = costs.with_dynamics(A_hat, B_hat);
  const RiccatiSolution sol = solve_dare(hat);
  SafeBall ball;
  ball.center_A = A_hat;
  ball.center_B = B_hat;
  ball.radius = conf;
  ball.sigma_in_sq =
      sigma_in_sq_formula(hat.dx(), op_norm_sym(sol.P), op_norm(B_hat), delta, &ball.log_clamped);
  return ball;
}

SafeBall safe_round_init(const Mat& A_hat, const Mat& B_hat, double conf, double delta) {
  return safe_round_init(LqrInstance::identity_costs(A_hat, B_hat), A_hat, B_hat, conf, delta);
}

Projected project_to_ball(const Mat& A_hat, const Mat& B_hat, const SafeBall& ball) {
  if (A_hat.rows() != ball.center_A.rows() || A_hat.cols() != ball.center_A.cols() ||
      B_hat.rows() != ball.center_B.rows() || B_hat.cols() != ball.center_B.cols()) {
    throw ValidationError("project_to_ball: estimate and ball dimensions differ");
  }
  Projected out{A_hat, B_hat, false};
  const Mat dA = A_hat - ball.center_A;
  if (op_norm(dA) > ball.radius) {
    out.A = ball.center_A + clip_op(dA, ball.radius);
    out.moved = true;
  }
  const Mat dB = B_hat - ball.center_B;
  if (op_norm(dB) > ball.radius) {
    out.B = ball.center_B + clip_op(dB, ball.radius);
    out.moved = true;
  }
  return out;
}

CeResult run_ce(const LqrInstance& inst, const Mat& K0, long T, std::uint64_t seed,
                const CeOptions& options) {
  if (T < 1) throw ValidationError("run_ce: T must be >= 1");
  if (K0.rows() != inst.du() || K0.cols() != inst.dx()) throw ValidationError("run_ce: K0 must be d_u x d_x");
  if (!(options.safe_threshold_scale > 0.0)) throw ValidationError("run_ce: safe_threshold_scale must be > 0");
  const double delta = options.delta == 0.0 ? 1.0 / static_cast<double>(T) : options.delta;
  if (!(delta > 0.0 && delta < 1.0 && delta <= 1.0 / static_cast<double>(T) * (1.0 + 1e-12))) {
    throw ValidationError("run_ce: delta must lie in (0, 1/T]");
  }
  const double rho0 = spectral_radius(inst.A() + inst.B() * K0);
  if (!(rho0 < 1.0 - kStabilityMargin)) {
    std::ostringstream os;
    os << "run_ce: K0 does not stabilize the system (spectral radius " << rho0 << ")";
    throw UnstableInputError(os.str());
  }

  CePolicy policy(inst, K0, delta, options.safe_threshold_scale);
  RolloutOptions ro;
  ro.process_noise_scale = options.process_noise_scale;
  CeResult res;
  try {
    res.trajectory = rollout(inst, policy, T, seed, ro);
  } catch (const BlowupError& e) {
    std::ostringstream os;
    os << e.what() << " during epoch k = " << policy.current_epoch();
    throw BlowupError(e.time(), os.str());
  }
  res.epochs = std::move(policy.epochs());
  res.ball = policy.ball();
  res.k_safe = policy.k_safe();
  res.never_safe = res.k_safe < 0;
  res.delta = delta;
  res.j_star = policy.j_star();
  res.regret = regret(res.trajectory, res.j_star);
  return res;
}

void write_epoch_ledger_csv(const std::vector<EpochRecord>& epochs, std::ostream& out) {
  out << "k,tau_k,mode,conf,sigma_sq,est_err_fro_sq,est_err_par_sq,est_err_perp_sq,j_gap_true\n";
  char buf[512];
  for (const EpochRecord& r : epochs) {
    std::snprintf(buf, sizeof buf, "%ld,%ld,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.k, r.tau_k,
                  to_string(r.mode), r.conf, r.sigma_sq, r.est_err_fro_sq, r.est_err_par_sq,
                  r.est_err_perp_sq, r.j_gap_true);
    out << buf;
  }
}

void write_epoch_ledger_csv(const std::vector<EpochRecord>& epochs, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  write_epoch_ledger_csv(epochs, f);
}

}  // namespace lqrlab
