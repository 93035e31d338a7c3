#pragma once

#include <algorithm>
#include <cmath>

#include "dpd/core.hpp"
#include "dpd/linops.hpp"

namespace dpd {

// Dual vectors of TV models store mn pairs y_i = (y[i], y[mn + i]).
inline Index pair_count(const Vec& y) {
  require(y.size() % 2 == 0, "pair vector must have even length");
  return y.size() / 2;
}

// Scales each pair y_i by 1 / max(1, ||y_i||).
inline Vec project_ball2_pairs(const Vec& y) {
  const Index half = pair_count(y);
  Vec out = y;
  for (Index i = 0; i < half; ++i) {
    const double a = y[i];
    const double b = y[half + i];
    const double r = std::hypot(a, b);
    if (r > 1.0) {
      out[i] = a / r;
      out[half + i] = b / r;
    }
  }
  return out;
}

inline bool pairs_in_unit_ball(const Vec& y, double tol = 1e-12) {
  const Index half = pair_count(y);
  for (Index i = 0; i < half; ++i)
    if (!(std::hypot(y[i], y[half + i]) <= 1.0 + tol)) return false;
  return true;
}

inline Vec project_box(const Vec& u, double lo, double hi) {
  require(lo <= hi, "project_box: lo must not exceed hi");
  return u.cwiseMax(lo).cwiseMin(hi);
}

// Prox of g(y) = indicator{||y_i|| <= 1} + (mu_g/2)||y||^2.
inline Vec prox_smoothed_tv_dual(const Vec& z, double step, double mu_g) {
  require(step > 0.0 && mu_g >= 0.0, "prox_smoothed_tv_dual: need step > 0, mu_g >= 0");
  return project_ball2_pairs(z / (step * mu_g + 1.0));
}

// Prox of g(u) = indicator{|u_i| <= 1} + <c, u> + (mu_g/2)||u||^2.
inline Vec prox_linear_plus_box(const Vec& z, double step, const Vec& c, double mu_g = 0.0) {
  require(step > 0.0 && mu_g >= 0.0, "prox_linear_plus_box: need step > 0, mu_g >= 0");
  require_same_size(c, z.size(), "prox_linear_plus_box: c");
  return project_box((z - step * c) / (step * mu_g + 1.0), -1.0, 1.0);
}

// argmin_x (mu/2)||Kx - b||^2 + ||x - z||^2 / (2 step), i.e. the solution of
//   (mu step K^T K + I) x = mu step K^T b + z.
// Periodic convolutions are solved by division in the Fourier domain, anything
// else by a dense Cholesky factorization.
inline Vec prox_quadratic_primal(const Vec& z, double step, const LinearOperator& K, const Vec& b,
                                 double mu) {
  require(step > 0.0, "prox_quadratic_primal: step must be positive");
  require_same_size(z, K.in_dim(), "prox_quadratic_primal: z");
  require_same_size(b, K.out_dim(), "prox_quadratic_primal: b");
  if (mu == 0.0) return z;

  const double s = mu * step;
  const Vec rhs = s * K.adjoint(b) + z;
  Vec x;
  if (const auto& spec = K.circulant()) {
    CMat xhat = fft2(rhs, spec->rows, spec->cols);
    for (Index j = 0; j < xhat.cols(); ++j)
      for (Index i = 0; i < xhat.rows(); ++i)
        xhat(i, j) /= s * std::norm(spec->eigenvalues(i, j)) + 1.0;
    x = ifft2_real(std::move(xhat));
  } else {
    const Mat k = K.to_dense();
    Mat sys = s * (k.transpose() * k);
    sys.diagonal().array() += 1.0;
    x = sys.llt().solve(rhs);
  }
  const Vec residual = s * K.adjoint(K.apply(x)) + x - rhs;
  if (!(residual.norm() <= 1e-10 * (1.0 + rhs.norm()))) {
    throw NumericalFailure("prox_quadratic_primal: residual " + std::to_string(residual.norm()) +
                           " above tolerance");
  }
  return x;
}

}  // namespace dpd
