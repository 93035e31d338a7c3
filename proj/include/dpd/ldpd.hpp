#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "dpd/core.hpp"
#include "dpd/model.hpp"
#include "dpd/solver_common.hpp"

namespace dpd {

// Linearized DPD: the primal variable takes a (possibly multi-step) gradient
// step on f, the dual a proximal step on g, followed by dual extrapolation.
namespace ldpd {

// theta_t = 2/(t+1), tau_t = t/N. Needs the horizon N up front.
struct WeaklyConvex {
  long horizon = 1;
};
// theta_t = 2/(t+1), tau = 3/mu_g, tau_t = tau/t.
struct StronglyConvexDual {};
// theta_t = 1, tau = mu_f/(2||A||^2), tau_t = (t+1) tau.
struct StronglyConvexPrimal {};
// theta_t = alpha_t = 1 with fixed dual step.
struct SingleStep {
  double tau = 1.0;
};

}  // namespace ldpd

using LdpdRegime = std::variant<ldpd::WeaklyConvex, ldpd::StronglyConvexDual,
                                ldpd::StronglyConvexPrimal, ldpd::SingleStep>;

inline std::string regime_name(const LdpdRegime& r) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ldpd::WeaklyConvex>) return "ldpd-weak";
        else if constexpr (std::is_same_v<T, ldpd::StronglyConvexDual>) return "ldpd-scdual";
        else if constexpr (std::is_same_v<T, ldpd::StronglyConvexPrimal>) return "ldpd-scprimal";
        else return "ldpd-single";
      },
      r);
}

struct LdpdParams {
  double theta = 1.0;
  double alpha = 0.0;       // alpha_t
  double alpha_next = 0.0;  // alpha_{t+1}, used by the extrapolation in step t
  double tau = 0.0;
  double eta = 0.0;
  double weight = 1.0;  // aggregation weight of the iterate produced at step t
};

// Whether the regime aggregates through the theta-blend recursion.
inline bool is_blended(const LdpdRegime& r) {
  return std::holds_alternative<ldpd::WeaklyConvex>(r) ||
         std::holds_alternative<ldpd::StronglyConvexDual>(r);
}

// t0 = ceil(2 (L_f - mu_f) / mu_f)
inline long ldpd_primal_offset(const ProblemConstants& c) {
  return static_cast<long>(std::ceil(2.0 * (c.lipschitz_f - c.mu_f) / c.mu_f));
}

inline void validate(const LdpdRegime& regime, const ProblemConstants& c) {
  if (!(c.lipschitz_f >= 0.0 && c.mu_f >= 0.0 && c.mu_g >= 0.0 && c.norm_A >= 0.0))
    throw ConfigError("ldpd: problem constants must be nonnegative");
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ldpd::WeaklyConvex>) {
          if (v.horizon < 1) throw ConfigError("ldpd weakly convex: horizon N must be >= 1");
          if (2.0 * c.lipschitz_f + c.norm_A * c.norm_A == 0.0)
            throw ConfigError("ldpd weakly convex: L_f and ||A|| both zero");
        } else if constexpr (std::is_same_v<T, ldpd::StronglyConvexDual>) {
          if (!(c.mu_g > 0.0)) throw ConfigError("ldpd strongly convex dual: mu_g must be > 0");
          if (2.0 * c.lipschitz_f + c.norm_A * c.norm_A == 0.0)
            throw ConfigError("ldpd strongly convex dual: L_f and ||A|| both zero");
        } else if constexpr (std::is_same_v<T, ldpd::StronglyConvexPrimal>) {
          if (!(c.mu_f > 0.0)) throw ConfigError("ldpd strongly convex primal: mu_f must be > 0");
          if (!(c.lipschitz_f >= c.mu_f))
            throw ConfigError("ldpd strongly convex primal: need L_f >= mu_f");
          if (!(c.norm_A > 0.0)) throw ConfigError("ldpd strongly convex primal: ||A|| must be > 0");
        } else {
          if (!(v.tau > 0.0)) throw ConfigError("ldpd single step: tau must be > 0");
          if (c.lipschitz_f + v.tau * c.norm_A * c.norm_A == 0.0)
            throw ConfigError("ldpd single step: L_f and ||A|| both zero");
        }
      },
      regime);
}

namespace detail {

inline double ldpd_alpha(const LdpdRegime& regime, long t, const ProblemConstants& c) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        const double td = static_cast<double>(t);
        if constexpr (std::is_same_v<T, ldpd::StronglyConvexPrimal>) {
          const double t0 = static_cast<double>(ldpd_primal_offset(c));
          return (td + t0) / (td + t0 + 1.0);
        } else if constexpr (std::is_same_v<T, ldpd::SingleStep>) {
          return 1.0;
        } else {
          return (td - 1.0) / td;
        }
      },
      regime);
}

}  // namespace detail

inline LdpdParams ldpd_schedule(const LdpdRegime& regime, long t, const ProblemConstants& c) {
  require(t >= 1, "ldpd_schedule: t must be >= 1");
  validate(regime, c);
  const double td = static_cast<double>(t);
  const double a2 = c.norm_A * c.norm_A;
  LdpdParams p;
  p.alpha = detail::ldpd_alpha(regime, t, c);
  p.alpha_next = detail::ldpd_alpha(regime, t + 1, c);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ldpd::WeaklyConvex>) {
          const double n = static_cast<double>(v.horizon);
          p.theta = 2.0 / (td + 1.0);
          p.tau = td / n;
          p.eta = td / (2.0 * c.lipschitz_f + n * a2);
          p.weight = td;
        } else if constexpr (std::is_same_v<T, ldpd::StronglyConvexDual>) {
          const double tau = 3.0 / c.mu_g;
          p.theta = 2.0 / (td + 1.0);
          p.tau = tau / td;
          p.eta = td / (2.0 * c.lipschitz_f + tau * a2);
          p.weight = td;
        } else if constexpr (std::is_same_v<T, ldpd::StronglyConvexPrimal>) {
          const double tau = c.mu_f / (2.0 * a2);
          p.theta = 1.0;
          p.tau = (td + 1.0) * tau;
          p.eta = 1.0 / (c.lipschitz_f + p.tau * a2);
          p.weight = td + static_cast<double>(ldpd_primal_offset(c)) + 1.0;
        } else {
          p.theta = 1.0;
          p.tau = v.tau;
          p.eta = 1.0 / (c.lipschitz_f + v.tau * a2);
          p.weight = 1.0;
        }
      },
      regime);
  return p;
}

struct LdpdState {
  long t = 1;
  Vec x, xbar, y, yhat, ybar;
  Vec y_prev;  // y_{t-1}
  Vec agg_num_x, agg_num_y;
  double agg_den = 0.0;
  bool blended = true;

  // Point at which the rate bounds are stated: the theta-blend for blended
  // regimes, the weighted average of x_2..x_t otherwise.
  Vec x_aggregate() const {
    if (blended) return xbar;
    return agg_den > 0.0 ? Vec(agg_num_x / agg_den) : x;
  }
  Vec y_aggregate() const {
    if (blended) return ybar;
    return agg_den > 0.0 ? Vec(agg_num_y / agg_den) : y;
  }
};

// xbar_1 = x_1, yhat_1 = ybar_1 = y_1; y_0 = y_1.
inline LdpdState ldpd_init(const SaddleProblem& p, const Vec& x1, const Vec& y1, bool blended) {
  require_same_size(x1, p.primal_dim(), "ldpd_init: x1");
  require_same_size(y1, p.dual_dim(), "ldpd_init: y1");
  LdpdState s;
  s.x = s.xbar = x1;
  s.y = s.yhat = s.ybar = s.y_prev = y1;
  s.agg_num_x = Vec::Zero(x1.size());
  s.agg_num_y = Vec::Zero(y1.size());
  s.blended = blended;
  return s;
}

inline void ldpd_step(LdpdState& s, const SaddleProblem& p, const LdpdParams& q) {
  if (!p.f.has_gradient()) throw ConfigError("ldpd: f must provide a gradient oracle");
  const double th = q.theta;
  const Vec xhat = (th == 1.0) ? s.x : Vec((1.0 - th) * s.xbar + th * s.x);
  Vec x_next = s.x - q.eta * (p.f.grad(xhat) + p.A.adjoint(s.yhat));
  detail::check_finite(x_next, "x", s.t);
  if (th == 1.0) {
    s.xbar = x_next;
  } else {
    s.xbar = (1.0 - th) * s.xbar + th * x_next;
  }
  Vec y_next = p.g.prox(s.y + q.tau * p.A.apply(x_next), q.tau);
  detail::check_finite(y_next, "y", s.t);
  s.yhat = y_next + q.alpha_next * (y_next - s.y);
  if (th == 1.0) {
    s.ybar = y_next;
  } else {
    s.ybar = (1.0 - th) * s.ybar + th * y_next;
  }
  s.agg_num_x += q.weight * x_next;
  s.agg_num_y += q.weight * y_next;
  s.agg_den += q.weight;
  s.y_prev = std::move(s.y);
  s.y = std::move(y_next);
  s.x = std::move(x_next);
  ++s.t;
}

struct LdpdResult {
  Vec x;  // aggregate primal point
  Vec y;  // aggregate dual point
  LdpdState state;
  std::vector<LdpdParams> params;  // per-iteration schedule values
};

// Observer sees the state after step t (state.t == t + 1) with step t's parameters.
using LdpdObserver = std::function<void(const LdpdState&, const LdpdParams&)>;

inline LdpdResult run_ldpd(const SaddleProblem& p, const LdpdRegime& regime, const Vec& x1,
                           const Vec& y1, long iters, const LdpdObserver& observer = {}) {
  require(iters >= 1, "run_ldpd: iters must be >= 1");
  if (const auto* wc = std::get_if<ldpd::WeaklyConvex>(&regime); wc && wc->horizon != iters) {
    throw ConfigError("run_ldpd: weakly convex schedule needs iters == horizon N");
  }
  const ProblemConstants c = constants_of(p);
  validate(regime, c);
  LdpdResult r;
  r.state = ldpd_init(p, x1, y1, is_blended(regime));
  r.params.reserve(static_cast<std::size_t>(iters));
  for (long t = 1; t <= iters; ++t) {
    const LdpdParams q = ldpd_schedule(regime, t, c);
    ldpd_step(r.state, p, q);
    r.params.push_back(q);
    if (observer) observer(r.state, q);
  }
  r.x = r.state.x_aggregate();
  r.y = r.state.y_aggregate();
  return r;
}

}  // namespace dpd
