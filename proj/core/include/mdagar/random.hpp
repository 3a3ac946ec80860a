#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace mdagar {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; maps (base seed, stream index) to a well-separated
/// seed so parallel chains never share a stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline Eigen::VectorXd standard_normal_vector(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = dist(rng);
  return z;
}

/// Gamma(shape, rate) draw.
inline double gamma_draw(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

/// Inverse-Gamma(shape, rate) draw: the reciprocal of a Gamma(shape, rate).
inline double inverse_gamma_draw(Rng& rng, double shape, double rate) {
  return 1.0 / gamma_draw(rng, shape, rate);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace mdagar
