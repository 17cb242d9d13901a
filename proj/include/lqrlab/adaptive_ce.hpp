#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lqrlab/control_core.hpp"
#include "lqrlab/estimation.hpp"
#include "lqrlab/simulator.hpp"

namespace lqrlab {

enum class EpochMode { warmup, safe };

const char* to_string(EpochMode mode);

/// State of the adaptive controller over one epoch t = tau_k .. 2 tau_k - 1.
struct EpochRecord {
  long k = 0;
  long tau_k = 0;
  OlsEstimate estimate;  ///< fit on t = tau_{k-1} .. tau_k - 1
  double conf = 0.0;     ///< confidence radius of `estimate`, possibly +inf
  EpochMode mode = EpochMode::warmup;
  Mat K_used;
  double sigma_sq = 1.0;
  bool projected = false;        ///< estimate was pulled onto the safe ball
  bool safe_test_passed = false;  ///< the safe test passed at this epoch (k = k_safe)
  bool dare_fallback = false;    ///< DARE failed on the projected estimate; K0 was played

  // Oracle diagnostics computed from the true system; never fed back.
  double j_gap_true = 0.0;       ///< J(K_used) - J_star, +inf when K_used destabilizes
  double est_err_fro_sq = 0.0;   ///< ||A_hat - A||_F^2 + ||B_hat - B||_F^2
  double est_err_par_sq = 0.0;   ///< part of the error along the exploration directions of K_star
  double est_err_perp_sq = 0.0;  ///< part along span{(x, K_star x)}
};

/// Operator-norm ball around the estimate that passed the safe test.
struct SafeBall {
  Mat center_A;
  Mat center_B;
  double radius = 0.0;
  double sigma_in_sq = 0.0;
  bool log_clamped = false;  ///< log(||P|| / delta) was below log 2 and was floored there
};

/// sqrt(d_x) p^{9/2} max{1, b} sqrt(log(p / delta)) with the log floored at log 2.
double sigma_in_sq_formula(Eigen::Index dx, double p_norm, double b_norm, double delta,
                           bool* log_clamped = nullptr);

/// Ball of radius conf around (A_hat, B_hat) and the exploration scale
/// computed from P_inf(A_hat, B_hat) under the costs of `costs`.
SafeBall safe_round_init(const LqrInstance& costs, const Mat& A_hat, const Mat& B_hat, double conf,
                         double delta);
/// Identity costs.
SafeBall safe_round_init(const Mat& A_hat, const Mat& B_hat, double conf, double delta);

struct Projected {
  Mat A;
  Mat B;
  bool moved = false;
};

/// Clips the singular values of A_hat - center_A (and separately B_hat - center_B)
/// at the ball radius. Points already inside are returned unchanged.
Projected project_to_ball(const Mat& A_hat, const Mat& B_hat, const SafeBall& ball);

/// Safe-test scale used by the desk-scale regret and estimation experiments.
/// With the verbatim threshold (scale 1) the test needs lambda_min(Lambda) in
/// the tens of millions on the a = 0.5 reference instance, far beyond the
/// horizons a laptop sweep covers; 1e-6 reaches safety around k = 8 there.
inline constexpr double kDeskScaleSafeThreshold = 1e-6;

struct CeOptions {
  /// Confidence parameter; 0 selects 1/T.
  double delta = 0.0;
  /// Multiplies the 9 C_safe^2 threshold of the safe test. 1 is the verbatim test.
  double safe_threshold_scale = 1.0;
  /// Multiplies the process noise (test hook; 1 is the model).
  double process_noise_scale = 1.0;
};

struct CeResult {
  Trajectory trajectory;
  std::vector<EpochRecord> epochs;
  std::optional<SafeBall> ball;
  long k_safe = -1;  ///< -1 when the safe test never passed
  bool never_safe = true;
  double delta = 0.0;
  double j_star = 0.0;
  double regret = 0.0;
};

/// Certainty-equivalent control with continual exploration on `inst` for T steps.
///
/// t = 1 plays pure unit noise; t = 2, 3 and every epoch up to and including
/// the one where the safe test passes play K0 x + g. Later epochs project the
/// previous epoch's OLS estimate onto the safe ball, play its DARE gain, and
/// explore with variance min{1, sigma_in^2 tau_k^{-1/2}}.
///
/// Throws UnstableInputError when K0 does not stabilize the true system and
/// BlowupError (with the epoch in the message) when the state overflows.
CeResult run_ce(const LqrInstance& inst, const Mat& K0, long T, std::uint64_t seed,
                const CeOptions& options = {});

/// CSV: k,tau_k,mode,conf,sigma_sq,est_err_fro_sq,est_err_par_sq,est_err_perp_sq,j_gap_true.
void write_epoch_ledger_csv(const std::vector<EpochRecord>& epochs, std::ostream& out);
void write_epoch_ledger_csv(const std::vector<EpochRecord>& epochs, const std::string& path);

}  // namespace lqrlab
