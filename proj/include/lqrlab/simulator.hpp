#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "lqrlab/control_core.hpp"
#include "lqrlab/rng.hpp"

namespace lqrlab {

/// Overflow guard: a rollout stops with BlowupError once ||x_t|| exceeds this.
inline constexpr double kBlowupNorm = 1e100;

/// One rollout. Column t-1 of `states`/`inputs` holds x_t/u_t for t = 1..T.
struct Trajectory {
  Mat states;        ///< d_x x T
  Mat inputs;        ///< d_u x T
  Vec step_costs;    ///< x_t' R_x x_t + u_t' R_u u_t
  Vec final_state;   ///< x_{T+1}
  std::uint64_t seed = 0;

  long horizon() const noexcept { return static_cast<long>(step_costs.size()); }
};

/// A (possibly stateful) control law. rollout() calls act() for t = 1..T and
/// then observe() with the realized transition.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Vec act(long t, const Vec& x, GaussianRng& explore) = 0;
  virtual void observe(long /*t*/, const Vec& /*x*/, const Vec& /*u*/, const Vec& /*x_next*/) {}
};

/// u_t = K x_t + sigma_u g_t.
class LinearFeedback final : public Policy {
 public:
  LinearFeedback(Mat K, double sigma_u);
  Vec act(long t, const Vec& x, GaussianRng& explore) override;

  const Mat& K() const noexcept { return K_; }
  double sigma_u() const noexcept { return sigma_u_; }

 private:
  Mat K_;
  double sigma_u_;
};

struct RolloutOptions {
  /// Multiplies w_t. 1 is the model; 0 gives noiseless dynamics for tests.
  double process_noise_scale = 1.0;
};

/// Simulates x_{t+1} = A x_t + B u_t + w_t from x_1 = 0 with w_t drawn from the
/// process-noise stream of `seed` and exploration drawn from its exploration
/// stream. Throws BlowupError carrying the offending time index.
Trajectory rollout(const LqrInstance& inst, Policy& policy, long T, std::uint64_t seed,
                   const RolloutOptions& options = {});

/// sum_t step_costs[t] - T j_star.
double regret(const Trajectory& traj, double j_star);

/// t J_K + 2 sigma_u^2 t d_u (||R_u|| + ||B||^2 ||P_K||) + x1' P_K x1.
double expected_cost_bound(const LqrInstance& inst, const Mat& K, double sigma_u, const Vec& x1,
                           long t);

/// CSV with header t,x_0..,u_0..,cost and one row per step, %.17g numbers.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace lqrlab
