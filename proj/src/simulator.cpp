#include "lqrlab/simulator.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace lqrlab {

LinearFeedback::LinearFeedback(Mat K, double sigma_u) : K_(std::move(K)), sigma_u_(sigma_u) {
  if (!(sigma_u_ >= 0.0)) throw ValidationError("LinearFeedback: sigma_u must be >= 0");
}

Vec LinearFeedback::act(long /*t*/, const Vec& x, GaussianRng& explore) {
  Vec u = K_ * x;
  if (sigma_u_ > 0.0) u += sigma_u_ * explore.normal_vec(K_.rows());
  return u;
}

Trajectory rollout(const LqrInstance& inst, Policy& policy, long T, std::uint64_t seed,
                   const RolloutOptions& options) {
  if (T < 0) throw ValidationError("rollout: T must be >= 0");
  const Eigen::Index dx = inst.dx();
  const Eigen::Index du = inst.du();
  GaussianRng noise(seed, Stream::process_noise);
  GaussianRng explore(seed, Stream::exploration);

  Trajectory traj;
  traj.seed = seed;
  traj.states.resize(dx, T);
  traj.inputs.resize(du, T);
  traj.step_costs.resize(T);

  Vec x = Vec::Zero(dx);
  Vec x_next(dx);
  for (long t = 1; t <= T; ++t) {
    const Vec u = policy.act(t, x, explore);
    if (u.size() != du) throw ValidationError("rollout: policy returned an input of the wrong size");
    traj.states.col(t - 1) = x;
    traj.inputs.col(t - 1) = u;
    traj.step_costs(t - 1) = x.dot(inst.Rx() * x) + u.dot(inst.Ru() * u);

    x_next.noalias() = inst.A() * x;
    x_next.noalias() += inst.B() * u;
    x_next += options.process_noise_scale * noise.normal_vec(dx);
    const double nrm = x_next.norm();
    if (!(nrm <= kBlowupNorm)) {
      std::ostringstream os;
      os << "rollout: state norm exceeded " << kBlowupNorm << " at t = " << t + 1;
      throw BlowupError(t + 1, os.str());
    }
    policy.observe(t, x, u, x_next);
    x.swap(x_next);
  }
  traj.final_state = x;
  return traj;
}

double regret(const Trajectory& traj, double j_star) {
  return traj.step_costs.sum() - static_cast<double>(traj.horizon()) * j_star;
}

double expected_cost_bound(const LqrInstance& inst, const Mat& K, double sigma_u, const Vec& x1,
                           long t) {
  if (x1.size() != inst.dx()) throw ValidationError("expected_cost_bound: x1 has the wrong size");
  if (t < 0) throw ValidationError("expected_cost_bound: t must be >= 0");
  const ControllerValue v = controller_value(inst, K);
  const double bn = op_norm(inst.B());
  const double td = static_cast<double>(t);
  return td * v.J +
         2.0 * sigma_u * sigma_u * td * static_cast<double>(inst.du()) *
             (op_norm_sym(inst.Ru()) + bn * bn * op_norm_sym(v.P)) +
         x1.dot(v.P * x1);
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const Eigen::Index dx = traj.states.rows();
  const Eigen::Index du = traj.inputs.rows();
  out << "t";
  for (Eigen::Index i = 0; i < dx; ++i) out << ",x_" << i;
  for (Eigen::Index i = 0; i < du; ++i) out << ",u_" << i;
  out << ",cost\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ',' << buf;
  };
  for (long t = 1; t <= traj.horizon(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < dx; ++i) put(traj.states(i, t - 1));
    for (Eigen::Index i = 0; i < du; ++i) put(traj.inputs(i, t - 1));
    put(traj.step_costs(t - 1));
    out << '\n';
  }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  write_trajectory_csv(traj, f);
}

}  // namespace lqrlab
