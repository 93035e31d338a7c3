#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "dpd/core.hpp"
#include "dpd/diagnostics.hpp"
#include "dpd/linops.hpp"
#include "dpd/model.hpp"
#include "dpd/rng.hpp"

namespace dpd {

// Dense saddle instances whose saddle point is known exactly, used to check
// the gap bounds:
//   f(x) = 1/2 ||Cx - d||^2 + (lambda/2)||x||^2
//   g(y) = (mu_g/2)||y||^2 + indicator of a ball or box
struct SyntheticInstance {
  std::string kind;
  SaddleProblem problem;
  GapReference saddle;
  Mat C;
  Vec d;
  Mat A;
  double lambda = 0.0;
};

// Least-squares primal with both a gradient and an exact prox oracle. The
// reported modulus is the true one, lambda_min(C^T C) + lambda.
inline PrimalOracle make_least_squares_primal(const Mat& C, const Vec& d, double lambda) {
  auto H = std::make_shared<Mat>(C.transpose() * C);
  H->diagonal().array() += lambda;
  auto rhs = std::make_shared<const Vec>(C.transpose() * d);
  auto Cs = std::make_shared<const Mat>(C);
  auto ds = std::make_shared<const Vec>(d);
  Eigen::SelfAdjointEigenSolver<Mat> eig(*H, Eigen::EigenvaluesOnly);
  PrimalOracle f;
  f.value = [Cs, ds, lambda](const Vec& x) {
    return 0.5 * (*Cs * x - *ds).squaredNorm() + 0.5 * lambda * x.squaredNorm();
  };
  f.grad = [H, rhs](const Vec& x) { return Vec(*H * x - *rhs); };
  f.prox = [H, rhs](const Vec& z, double step) {
    Mat sys = step * *H;
    sys.diagonal().array() += 1.0;
    return Vec(sys.llt().solve(z + step * *rhs));
  };
  f.lipschitz = eig.eigenvalues().maxCoeff();
  f.mu = std::max(0.0, eig.eigenvalues().minCoeff());
  return f;
}

// g(y) = (mu_g/2)||y||^2 + indicator{||y|| <= radius}
inline DualProxOracle make_ball_dual(double radius, double mu_g) {
  DualProxOracle g;
  g.prox_fn = [radius](const Vec& z, double step, double mg) {
    Vec p = z / (1.0 + step * mg);
    const double r = p.norm();
    if (r > radius) p *= radius / r;
    return p;
  };
  g.value_fn = [radius](const Vec& y, double mg) {
    return y.norm() <= radius * (1.0 + 1e-12) ? 0.5 * mg * y.squaredNorm() : kInf;
  };
  g.smooth_grad_fn = [radius](const Vec& y, double mg) -> std::optional<Vec> {
    if (!(y.norm() < radius)) return std::nullopt;
    return Vec(mg * y);
  };
  g.mu_g = mu_g;
  return g;
}

namespace detail {

inline Mat random_matrix(Index rows, Index cols, Rng& rng, double scale) {
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * standard_normal(rng);
  return m;
}

}  // namespace detail

// Smooth instance with an inactive ball constraint. The saddle point solves
//   (C^T C + lambda I + A^T A / mu_g) x* = C^T d,  y* = A x* / mu_g.
inline SyntheticInstance make_quadratic_instance(Index primal_dim, Index dual_dim, std::uint64_t seed,
                                                 double mu_g, double lambda = 0.0) {
  require(primal_dim >= 1 && dual_dim >= 1, "make_quadratic_instance: dims must be >= 1");
  require(mu_g > 0.0, "make_quadratic_instance: mu_g must be positive");
  Rng rng(seed);
  SyntheticInstance inst;
  inst.kind = "quadratic";
  inst.lambda = lambda;
  const Index crow = primal_dim + 5;
  inst.C = detail::random_matrix(crow, primal_dim, rng, 1.0 / std::sqrt(static_cast<double>(crow)));
  inst.A = detail::random_matrix(dual_dim, primal_dim, rng, 1.0 / std::sqrt(static_cast<double>(dual_dim)));
  inst.d = detail::random_matrix(crow, 1, rng, 1.0).col(0);

  Mat sys = inst.C.transpose() * inst.C + inst.A.transpose() * inst.A / mu_g;
  sys.diagonal().array() += lambda;
  inst.saddle.x = sys.ldlt().solve(inst.C.transpose() * inst.d);
  inst.saddle.y = inst.A * inst.saddle.x / mu_g;

  inst.problem.f = make_least_squares_primal(inst.C, inst.d, lambda);
  inst.problem.g = make_ball_dual(10.0 * inst.saddle.y.norm() + 1.0, mu_g);
  inst.problem.A = make_dense_operator(inst.A);
  return inst;
}

// Box-constrained instance built backwards from a chosen saddle point so that
// a large share of the box constraints is active at y*:
//   pick x*, set y*_i = clip((Ax*)_i / mu_g) (sign((Ax*)_i) when mu_g = 0),
//   then choose d with C^T d = (C^T C + lambda I) x* + A^T y*.
inline SyntheticInstance make_planted_box_instance(Index primal_dim, Index dual_dim,
                                                   std::uint64_t seed, double mu_g,
                                                   double lambda = 0.0) {
  require(primal_dim >= 1 && dual_dim >= 1, "make_planted_box_instance: dims must be >= 1");
  require(mu_g >= 0.0, "make_planted_box_instance: mu_g must be nonnegative");
  Rng rng(seed);
  SyntheticInstance inst;
  inst.kind = "planted-box";
  inst.lambda = lambda;
  const Index crow = primal_dim + 5;
  inst.C = detail::random_matrix(crow, primal_dim, rng, 1.0 / std::sqrt(static_cast<double>(crow)));
  inst.A = detail::random_matrix(dual_dim, primal_dim, rng, 1.0 / std::sqrt(static_cast<double>(dual_dim)));
  const Vec xs = detail::random_matrix(primal_dim, 1, rng, 1.0).col(0);
  const Vec ax = inst.A * xs;
  Vec ys(dual_dim);
  for (Index i = 0; i < dual_dim; ++i) {
    if (mu_g > 0.0) {
      ys[i] = std::clamp(ax[i] / mu_g, -1.0, 1.0);
    } else {
      ys[i] = ax[i] >= 0.0 ? 1.0 : -1.0;
    }
  }
  Mat H = inst.C.transpose() * inst.C;
  H.diagonal().array() += lambda;
  const Vec target = H * xs + inst.A.transpose() * ys;
  const Mat ctc = inst.C.transpose() * inst.C;
  inst.d = inst.C * ctc.ldlt().solve(target);
  inst.saddle = {xs, ys};

  inst.problem.f = make_least_squares_primal(inst.C, inst.d, lambda);
  inst.problem.g = make_box_dual(-1.0, 1.0, mu_g);
  inst.problem.A = make_dense_operator(inst.A);
  return inst;
}

}  // namespace dpd
