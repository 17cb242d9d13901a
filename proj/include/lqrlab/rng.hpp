#pragma once

#include <cstdint>
#include <random>

#include "lqrlab/linalg.hpp"

namespace lqrlab {

/// Independent random streams derived from one seed. Each stream is a
/// std::mt19937_64 seeded with splitmix64(seed ^ splitmix64(stream_id)).
enum class Stream : std::uint64_t {
  process_noise = 0,  ///< w_t
  exploration = 1,    ///< g_t
  instance = 2,       ///< random instance generators
};

std::uint64_t splitmix64(std::uint64_t x);

/// Standard Gaussian source with a pinned transform: Marsaglia's polar method
/// on uniforms u = (engine() >> 11) * 2^-53, so sequences are reproducible
/// wherever mt19937_64 is.
class GaussianRng {
 public:
  GaussianRng(std::uint64_t seed, Stream stream);
  explicit GaussianRng(std::uint64_t raw_seed);

  double uniform();  ///< in [0, 1)
  double normal();
  Vec normal_vec(Eigen::Index n);
  Mat normal_mat(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lqrlab
