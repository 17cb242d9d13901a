#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lqrlab/control_core.hpp"

namespace lqrlab {

enum class InstanceKind { inline_matrices, scaled_identity, random_stable };
enum class Algorithm { ce, fixed_k, warmup_only };
enum class GainKind { zero, optimal, inline_matrix };

struct InstanceSpec {
  InstanceKind kind = InstanceKind::scaled_identity;
  // inline_matrices
  Mat A, B, Rx, Ru;
  bool general_costs = false;
  // scaled_identity / random_stable
  double a = 0.5;
  long dx = 1;
  long du = 1;
  double spectral_target = 0.5;
  std::uint64_t instance_seed = 0;
};

struct GainSpec {
  GainKind kind = GainKind::zero;
  Mat K;
};

struct ExperimentConfig {
  InstanceSpec instance;
  Algorithm algorithm = Algorithm::ce;
  /// K0 for ce / warmup_only, the played gain for fixed_k.
  GainSpec gain;
  double sigma_u = 0.0;               ///< fixed_k exploration scale
  double delta = 0.0;                 ///< 0 selects 1/T per run
  double safe_threshold_scale = 1.0;  ///< see CeOptions
  double process_noise_scale = 1.0;
  std::vector<long> T_values;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
  int threads = 0;  ///< 0 selects std::thread::hardware_concurrency()
};

/// Parse a config file; TOML unless the path ends in ".json". Throws
/// ValidationError with the offending key on malformed input.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_toml(const std::string& text);
ExperimentConfig parse_config_json(const std::string& text);

/// Checks the documented invariants: T values are powers of two >= 8, seeds
/// non-empty, delta <= 1/max(T) in standard normalization, sizes consistent.
void validate_config(const ExperimentConfig& config);

/// Canonical JSON of every field that affects results (not output_dir, threads).
std::string canonical_json(const ExperimentConfig& config);

/// 16 hex digits of the FNV-1a 64 hash of canonical_json().
std::string config_hash(const ExperimentConfig& config);

/// A = random Gaussian rescaled to spectral radius `target`, B Gaussian
/// rescaled to ||B||_op = 1, both from the instance stream of `seed`.
LqrInstance random_stable(long dx, long du, double target, std::uint64_t seed);

LqrInstance build_instance(const InstanceSpec& spec);
Mat resolve_gain(const GainSpec& spec, const LqrInstance& inst);

}  // namespace lqrlab
