#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <limits>
#include <random>

#include "dpd/core.hpp"

namespace dpd {

// Project-wide generator. std::mt19937_64's output sequence is fixed by the
// standard; the distributions below are written out so that derived samples
// are identical across standard library implementations.
using Rng = std::mt19937_64;

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound), rejection sampling to avoid modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

// Standard normal via Box-Muller, one draw per pair of uniforms.
inline double standard_normal(Rng& rng) {
  double u1;
  do {
    u1 = uniform01(rng);
  } while (u1 <= 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename VecT>
void fill_normal(VecT& v, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = standard_normal(rng);
}

}  // namespace dpd
