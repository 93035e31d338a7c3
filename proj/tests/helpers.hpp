#pragma once

#include <algorithm>
#include <cmath>

#include "dpd/linops.hpp"
#include "dpd/rng.hpp"

namespace dpd::testkit {

inline Vec random_vec(Index n, Rng& rng) {
  Vec v(n);
  fill_normal(v, rng);
  return v;
}

// Largest relative violation of <Ax, y> = <x, A^T y> over `pairs` random draws.
inline double worst_adjoint_error(const LinearOperator& op, int pairs, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Vec x = random_vec(op.in_dim(), rng);
    const Vec y = random_vec(op.out_dim(), rng);
    const double lhs = op.apply(x).dot(y);
    const double rhs = x.dot(op.adjoint(y));
    const double scale = std::max({std::abs(lhs), std::abs(rhs), op.apply(x).norm() * y.norm(), 1e-300});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace dpd::testkit
