#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lqrlab/config.hpp"

namespace lqrlab {

struct SweepRow {
  long T = 0;
  std::uint64_t seed = 0;
  double regret = 0.0;
  long k_safe = -1;
  std::string status;       ///< ok, never_safe, blowup, error
  std::string message;      ///< error text for blowup / error rows
  std::string ledger_path;  ///< per-run epoch ledger, empty when not written
};

struct SweepResult {
  std::string config_hash;
  std::vector<SweepRow> rows;  ///< ordered by (T, seed) as listed in the config
  std::string summary_path;    ///< empty when no output directory was given
};

/// One run per (T, seed), spread over a worker pool. Rows do not depend on
/// the number of threads. With an output directory, writes
/// sweep-<hash>.csv (T,seed,regret,k_safe,status) and, for ce runs,
/// <hash>/ledger-T<T>-seed<seed>.csv.
SweepResult run_sweep(const ExperimentConfig& config);

void write_summary_csv(const SweepResult& result, std::ostream& out);

struct ScalingFit {
  double slope;
  double intercept;
  double r2;
};

/// Least squares line through (log x, log median{y : same x}).
/// Throws ValidationError with fewer than 3 distinct x or a non-positive median.
ScalingFit fit_scaling(const std::vector<double>& x, const std::vector<double>& y);

/// fit_scaling over the rows with status ok or never_safe. x_col is "T";
/// y_col is "regret" or "k_safe".
ScalingFit fit_scaling(const SweepResult& result, const std::string& x_col, const std::string& y_col);

double median(std::vector<double> values);

}  // namespace lqrlab
