#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <utility>

#include "dpd/core.hpp"
#include "dpd/linops.hpp"

namespace dpd {

// Primal component f. A gradient oracle supplies grad (LDPD); an exact-prox
// oracle supplies prox (EDPD). Some models supply both.
struct PrimalOracle {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  // argmin_x f(x) + ||x - z||^2 / (2 step)
  std::function<Vec(const Vec&, double)> prox;
  double lipschitz = 0.0;  // L_f
  double mu = 0.0;         // strong-convexity modulus mu_f

  bool has_gradient() const { return static_cast<bool>(grad); }
  bool has_prox() const { return static_cast<bool>(prox); }
};

// Dual component g, possibly extended-valued. The modulus mu_g is a member so
// that continuation schemes can adjust it between iterations; prox and value
// receive it explicitly.
struct DualProxOracle {
  // argmin_y ||y - z||^2 / (2 step) + g(y), with g built for modulus mu_g
  std::function<Vec(const Vec&, double step, double mu_g)> prox_fn;
  std::function<double(const Vec&, double mu_g)> value_fn;
  // Gradient of the differentiable part of g; only meaningful where the
  // indicator part is inactive. Returns nullopt at points where g is not
  // differentiable.
  std::function<std::optional<Vec>(const Vec&, double mu_g)> smooth_grad_fn;
  double mu_g = 0.0;

  Vec prox(const Vec& z, double step) const { return prox_fn(z, step, mu_g); }
  double value(const Vec& y) const { return value_fn(y, mu_g); }
};

// min_x max_y f(x) + <Ax, y> - g(y)
struct SaddleProblem {
  PrimalOracle f;
  DualProxOracle g;
  LinearOperator A;

  Index primal_dim() const { return A.in_dim(); }
  Index dual_dim() const { return A.out_dim(); }
};

// L(x, y); -inf when y lies outside dom g.
inline double lagrangian(const SaddleProblem& p, const Vec& x, const Vec& y) {
  require_same_size(x, p.primal_dim(), "lagrangian: x");
  require_same_size(y, p.dual_dim(), "lagrangian: y");
  const double gy = p.g.value(y);
  if (gy == kInf) return -kInf;
  return p.f.value(x) + p.A.apply(x).dot(y) - gy;
}

// ||grad f(x) + A^T y|| + ||A x - grad g(y)||, the first-order optimality
// residual for smooth instances.
inline double kkt_residual(const SaddleProblem& p, const Vec& x, const Vec& y) {
  require_same_size(x, p.primal_dim(), "kkt_residual: x");
  require_same_size(y, p.dual_dim(), "kkt_residual: y");
  if (!p.f.has_gradient()) throw UnsupportedPoint("kkt_residual: f has no gradient oracle");
  if (!p.g.smooth_grad_fn) throw UnsupportedPoint("kkt_residual: g has no smooth gradient");
  const auto gg = p.g.smooth_grad_fn(y, p.g.mu_g);
  if (!gg) throw UnsupportedPoint("kkt_residual: g is not differentiable at y");
  return (p.f.grad(x) + p.A.adjoint(y)).norm() + (p.A.apply(x) - *gg).norm();
}

// ---------------------------------------------------------------------------
// Small building blocks shared by tests, the synthetic benchmark and the CLI.

inline PrimalOracle make_zero_primal() {
  PrimalOracle f;
  f.value = [](const Vec&) { return 0.0; };
  f.grad = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  f.prox = [](const Vec& z, double) { return z; };
  return f;
}

// f(x) = (mu/2) ||x - c||^2
inline PrimalOracle make_quadratic_primal(Vec center, double mu) {
  PrimalOracle f;
  auto c = std::make_shared<const Vec>(std::move(center));
  f.value = [c, mu](const Vec& x) { return 0.5 * mu * (x - *c).squaredNorm(); };
  f.grad = [c, mu](const Vec& x) { return Vec(mu * (x - *c)); };
  f.prox = [c, mu](const Vec& z, double step) { return Vec((z + step * mu * *c) / (1.0 + step * mu)); };
  f.lipschitz = mu;
  f.mu = mu;
  return f;
}

// g(y) = (mu_g/2) ||y||^2
inline DualProxOracle make_quadratic_dual(double mu_g) {
  DualProxOracle g;
  g.prox_fn = [](const Vec& z, double step, double mg) { return Vec(z / (1.0 + step * mg)); };
  g.value_fn = [](const Vec& y, double mg) { return 0.5 * mg * y.squaredNorm(); };
  g.smooth_grad_fn = [](const Vec& y, double mg) { return std::optional<Vec>(mg * y); };
  g.mu_g = mu_g;
  return g;
}

// g(y) = indicator{lo <= y_i <= hi} + (mu_g/2) ||y||^2
inline DualProxOracle make_box_dual(double lo, double hi, double mu_g, double tol = 1e-12) {
  DualProxOracle g;
  g.prox_fn = [lo, hi](const Vec& z, double step, double mg) {
    return Vec((z / (1.0 + step * mg)).cwiseMax(lo).cwiseMin(hi));
  };
  g.value_fn = [lo, hi, tol](const Vec& y, double mg) {
    for (Index i = 0; i < y.size(); ++i)
      if (!(y[i] >= lo - tol && y[i] <= hi + tol)) return kInf;
    return 0.5 * mg * y.squaredNorm();
  };
  g.smooth_grad_fn = [lo, hi](const Vec& y, double mg) -> std::optional<Vec> {
    for (Index i = 0; i < y.size(); ++i)
      if (!(y[i] > lo && y[i] < hi)) return std::nullopt;
    return Vec(mg * y);
  };
  g.mu_g = mu_g;
  return g;
}

}  // namespace dpd
