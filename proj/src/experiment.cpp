#include "lqrlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include "lqrlab/adaptive_ce.hpp"
#include "lqrlab/simulator.hpp"

namespace lqrlab {

namespace fs = std::filesystem;

namespace {

struct Job {
  long T;
  std::uint64_t seed;
};

SweepRow run_one(const ExperimentConfig& cfg, const LqrInstance& inst, const Mat& gain,
                 double j_star, const Job& job, const std::string& ledger_dir) {
  SweepRow row;
  row.T = job.T;
  row.seed = job.seed;
  try {
    if (cfg.algorithm == Algorithm::ce) {
      CeOptions opts;
      opts.delta = cfg.delta;
      opts.safe_threshold_scale = cfg.safe_threshold_scale;
      opts.process_noise_scale = cfg.process_noise_scale;
      const CeResult res = run_ce(inst, gain, job.T, job.seed, opts);
      row.regret = res.regret;
      row.k_safe = res.k_safe;
      row.status = res.never_safe ? "never_safe" : "ok";
      if (!ledger_dir.empty()) {
        row.ledger_path = (fs::path(ledger_dir) / ("ledger-T" + std::to_string(job.T) + "-seed" +
                                                   std::to_string(job.seed) + ".csv"))
                              .string();
        write_epoch_ledger_csv(res.epochs, row.ledger_path);
      }
    } else {
      const double sigma = cfg.algorithm == Algorithm::fixed_k ? cfg.sigma_u : 1.0;
      LinearFeedback policy(gain, sigma);
      RolloutOptions ro;
      ro.process_noise_scale = cfg.process_noise_scale;
      const Trajectory traj = rollout(inst, policy, job.T, job.seed, ro);
      row.regret = regret(traj, j_star);
      row.status = "ok";
    }
  } catch (const BlowupError& e) {
    row.status = "blowup";
    row.message = e.what();
    row.regret = std::numeric_limits<double>::quiet_NaN();
  } catch (const Error& e) {
    row.status = "error";
    row.message = e.what();
    row.regret = std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty set");
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lo + hi);
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const LqrInstance inst = build_instance(cfg.instance);
  const Mat gain = resolve_gain(cfg.gain, inst);
  const double j_star = solve_dare(inst).P.trace();

  SweepResult result;
  result.config_hash = config_hash(cfg);
  std::string ledger_dir;
  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    if (cfg.algorithm == Algorithm::ce) {
      ledger_dir = (fs::path(cfg.output_dir) / result.config_hash).string();
      fs::create_directories(ledger_dir);
    }
  }

  std::vector<Job> jobs;
  for (long T : cfg.T_values)
    for (std::uint64_t s : cfg.seeds) jobs.push_back({T, s});
  result.rows.resize(jobs.size());

  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(jobs.size()));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      result.rows[i] = run_one(cfg, inst, gain, j_star, jobs[i], ledger_dir);
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (!cfg.output_dir.empty()) {
    result.summary_path = (fs::path(cfg.output_dir) / ("sweep-" + result.config_hash + ".csv")).string();
    std::ofstream f(result.summary_path);
    if (!f) throw Error("cannot open " + result.summary_path + " for writing");
    write_summary_csv(result, f);
  }
  return result;
}

void write_summary_csv(const SweepResult& result, std::ostream& out) {
  out << "T,seed,regret,k_safe,status\n";
  char buf[128];
  for (const SweepRow& r : result.rows) {
    std::snprintf(buf, sizeof buf, "%ld,%llu,%.17g,%ld,%s\n", r.T,
                  static_cast<unsigned long long>(r.seed), r.regret, r.k_safe, r.status.c_str());
    out << buf;
  }
}

ScalingFit fit_scaling(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("fit_scaling: x and y differ in length");
  std::map<double, std::vector<double>> groups;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw ValidationError("fit_scaling: x values must be positive");
    groups[x[i]].push_back(y[i]);
  }
  if (groups.size() < 3) throw ValidationError("fit_scaling: need at least 3 distinct x values");
  std::vector<double> lx, ly;
  for (auto& [xv, ys] : groups) {
    const double m = median(ys);
    if (!(m > 0.0)) throw ValidationError("fit_scaling: non-positive median at x = " + std::to_string(xv));
    lx.push_back(std::log(xv));
    ly.push_back(std::log(m));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

ScalingFit fit_scaling(const SweepResult& result, const std::string& x_col, const std::string& y_col) {
  if (x_col != "T") throw ValidationError("fit_scaling: x_col must be T");
  if (y_col != "regret" && y_col != "k_safe") throw ValidationError("fit_scaling: y_col must be regret or k_safe");
  std::vector<double> x, y;
  for (const SweepRow& r : result.rows) {
    if (r.status != "ok" && r.status != "never_safe") continue;
    x.push_back(static_cast<double>(r.T));
    y.push_back(y_col == "regret" ? r.regret : static_cast<double>(r.k_safe));
  }
  return fit_scaling(x, y);
}

}  // namespace lqrlab
