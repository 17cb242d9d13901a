#include "lqrlab/rng.hpp"

#include <cmath>

namespace lqrlab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

GaussianRng::GaussianRng(std::uint64_t seed, Stream stream)
    : engine_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)))) {}

GaussianRng::GaussianRng(std::uint64_t raw_seed) : engine_(raw_seed) {}

double GaussianRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double GaussianRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Vec GaussianRng::normal_vec(Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Mat GaussianRng::normal_mat(Eigen::Index rows, Eigen::Index cols) {
  // Row-major fill so the draw order reads naturally.
  Mat M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = normal();
  return M;
}

}  // namespace lqrlab
