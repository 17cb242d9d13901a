// lqrlab command-line front end.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 anything
// else (I/O errors, failed acceptance criteria).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "lqrlab/acceptance.hpp"
#include "lqrlab/adaptive_ce.hpp"
#include "lqrlab/config.hpp"
#include "lqrlab/errors.hpp"
#include "lqrlab/experiment.hpp"
#include "lqrlab/lower_bound_lab.hpp"
#include "lqrlab/simulator.hpp"

namespace fs = std::filesystem;
using namespace lqrlab;

namespace {

constexpr int kExitValidation = 2;

struct Args {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  double tol = 1e-12;
  long T = 0;
  int m = 1;
  double eps = 1e-3;
  std::string signs;
  bool quick = false;
  std::vector<int> only;
  int threads = -1;
};

void print_matrix(std::ostream& os, const char* name, const Mat& M) {
  os << name << " =\n";
  char buf[64];
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    os << " ";
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof buf, " % .12e", M(i, j));
      os << buf;
    }
    os << '\n';
  }
}

std::string out_dir(const Args& a, const ExperimentConfig& cfg) {
  std::string d = !a.out.empty() ? a.out : cfg.output_dir;
  if (d.empty()) d = ".";
  fs::create_directories(d);
  return d;
}

long horizon(const Args& a, const ExperimentConfig& cfg) {
  if (a.T > 0) return a.T;
  long T = 0;
  for (long t : cfg.T_values) T = std::max(T, t);
  return T;
}

int cmd_dare(const Args& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const LqrInstance inst = build_instance(cfg.instance);
  DareOptions opts;
  opts.tol = a.tol;
  const RiccatiSolution s = solve_dare(inst, opts);
  print_matrix(std::cout, "P", s.P);
  print_matrix(std::cout, "K", s.K);
  std::printf("residual = %.3e\niterations = %d\nJ = %.12e\n", s.residual, s.iterations, s.P.trace());
  return 0;
}

int cmd_simulate(const Args& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const LqrInstance inst = build_instance(cfg.instance);
  const Mat K = resolve_gain(cfg.gain, inst);
  const long T = horizon(a, cfg);
  if (T < 1) throw ValidationError("simulate: horizon must be >= 1");
  LinearFeedback policy(K, cfg.sigma_u);
  RolloutOptions ro;
  ro.process_noise_scale = cfg.process_noise_scale;
  const Trajectory tr = rollout(inst, policy, T, a.seed, ro);
  const std::string path =
      (fs::path(out_dir(a, cfg)) / ("trajectory-T" + std::to_string(T) + "-seed" + std::to_string(a.seed) + ".csv"))
          .string();
  write_trajectory_csv(tr, path);
  const double j_star = solve_dare(inst).P.trace();
  std::printf("T = %ld\ncost = %.12e\nregret = %.12e\nwrote %s\n", T, tr.step_costs.sum(), regret(tr, j_star),
              path.c_str());
  return 0;
}

int cmd_run_ce(const Args& a) {
  const ExperimentConfig cfg = load_config(a.config);
  validate_config(cfg);
  const LqrInstance inst = build_instance(cfg.instance);
  const Mat K0 = resolve_gain(cfg.gain, inst);
  const long T = horizon(a, cfg);
  CeOptions opts;
  opts.delta = cfg.delta;
  opts.safe_threshold_scale = cfg.safe_threshold_scale;
  opts.process_noise_scale = cfg.process_noise_scale;
  const CeResult r = run_ce(inst, K0, T, a.seed, opts);
  const fs::path dir = out_dir(a, cfg);
  const std::string stem = "T" + std::to_string(T) + "-seed" + std::to_string(a.seed);
  write_epoch_ledger_csv(r.epochs, (dir / ("ledger-" + stem + ".csv")).string());
  write_trajectory_csv(r.trajectory, (dir / ("trajectory-" + stem + ".csv")).string());
  std::printf("T = %ld\ndelta = %.6e\nk_safe = %ld%s\nJ_star = %.12e\nregret = %.12e\nwrote %s\n", T, r.delta,
              r.k_safe, r.never_safe ? " (never safe)" : "", r.j_star, r.regret, dir.string().c_str());
  return 0;
}

SignMatrix parse_signs(const std::string& text, long rows, long cols, std::uint64_t seed) {
  SignMatrix e(rows, cols);
  if (text.empty()) {
    GaussianRng rng(seed, Stream::instance);
    for (long i = 0; i < e.size(); ++i) e.data()[i] = rng.uniform() < 0.5 ? -1 : 1;
    return e;
  }
  std::vector<int> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(std::stoi(tok));
  if (static_cast<long>(v.size()) != rows * cols) {
    throw ValidationError("packing: --signs needs d_u * m = " + std::to_string(rows * cols) + " entries");
  }
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) e(i, j) = v[static_cast<size_t>(i * cols + j)];
  return e;
}

int cmd_packing(const Args& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const LqrInstance inst = build_instance(cfg.instance);
  const RiccatiSolution star = solve_dare(inst);
  const SignMatrix e = parse_signs(a.signs, inst.du(), a.m, a.seed);
  const PackingInstance pk = build_packing(inst, star, a.m, a.eps, e);
  const std::string path = (fs::path(out_dir(a, cfg)) / "packing.json").string();
  write_packing_json(pk, path);
  const Mat K_alt = solve_dare(inst.with_dynamics(pk.A_e, pk.B_e)).K;
  std::printf("hamming distance of decoded signs = %d\npacking guard exceeded = %s\nwrote %s\n",
              hamming_distance(hamming_decode(K_alt, star, pk), e), pk.outside_guard ? "yes" : "no", path.c_str());
  return 0;
}

int cmd_sweep(const Args& a) {
  ExperimentConfig cfg = load_config(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (cfg.output_dir.empty()) cfg.output_dir = ".";
  if (a.threads >= 0) cfg.threads = a.threads;
  const SweepResult r = run_sweep(cfg);
  long ok = 0;
  for (const SweepRow& row : r.rows) ok += row.status == "ok";
  std::printf("config hash = %s\nruns = %zu (ok %ld)\nwrote %s\n", r.config_hash.c_str(), r.rows.size(), ok,
              r.summary_path.c_str());
  try {
    const ScalingFit fit = fit_scaling(r, "T", "regret");
    std::printf("log median regret vs log T: slope %.4f, intercept %.4f, r2 %.4f\n", fit.slope, fit.intercept,
                fit.r2);
  } catch (const ValidationError& e) {
    std::printf("no scaling fit: %s\n", e.what());
  }
  return 0;
}

int cmd_acceptance(const Args& a) {
  AcceptanceOptions opts;
  opts.quick = a.quick;
  opts.only = a.only;
  const auto results = run_acceptance(opts);
  print_acceptance(results, std::cout);
  for (const auto& r : results)
    if (!r.passed) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certainty-equivalent LQR experiments"};
  app.require_subcommand(1);
  Args a;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", a.config, "Experiment config (TOML, or JSON by extension)")
        ->required()
        ->check(CLI::ExistingFile);
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", a.seed, "Random seed"); };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", a.out, "Output directory"); };
  auto add_T = [&](CLI::App* sub) {
    sub->add_option("--T", a.T, "Horizon (defaults to the largest T in the config)")->check(CLI::PositiveNumber);
  };

  CLI::App* dare = app.add_subcommand("dare", "Solve the Riccati equation of the configured instance");
  add_config(dare);
  dare->add_option("--tol", a.tol, "Relative step tolerance of the value iteration")->check(CLI::PositiveNumber);

  CLI::App* sim = app.add_subcommand("simulate", "One rollout of the configured gain to CSV");
  add_config(sim);
  add_seed(sim);
  add_out(sim);
  add_T(sim);

  CLI::App* ce = app.add_subcommand("run-ce", "One certainty-equivalent run with its epoch ledger");
  add_config(ce);
  add_seed(ce);
  add_out(ce);
  add_T(ce);

  CLI::App* pack = app.add_subcommand("packing", "Build a packing instance and write it as JSON");
  add_config(pack);
  add_seed(pack);
  add_out(pack);
  pack->add_option("--m", a.m, "Number of singular directions")->check(CLI::PositiveNumber);
  pack->add_option("--eps", a.eps, "Packing scale eps_pack")->check(CLI::NonNegativeNumber);
  pack->add_option("--signs", a.signs, "Row-major comma list of +-1 (d_u x m); random from --seed if omitted");

  CLI::App* sweep = app.add_subcommand("sweep", "Run the full (T, seed) grid of a config");
  add_config(sweep);
  add_out(sweep);
  sweep->add_option("--threads", a.threads, "Worker threads (0 = hardware concurrency)");

  CLI::App* acc = app.add_subcommand("acceptance", "Run the acceptance suite");
  acc->add_flag("--quick", a.quick, "Reduced sample counts (smoke run, not the criteria)");
  acc->add_option("--only", a.only, "Criterion ids to run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*dare) return cmd_dare(a);
    if (*sim) return cmd_simulate(a);
    if (*ce) return cmd_run_ce(a);
    if (*pack) return cmd_packing(a);
    if (*sweep) return cmd_sweep(a);
    if (*acc) return cmd_acceptance(a);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
