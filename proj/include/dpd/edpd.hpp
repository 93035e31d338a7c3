#pragma once

#include <functional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "dpd/core.hpp"
#include "dpd/model.hpp"
#include "dpd/solver_common.hpp"

namespace dpd {

// Exact DPD: the primal update is an exact proximal minimization, so f may be
// non-smooth.
namespace edpd {

// tau = mu_f/(2||A||^2), tau_t = (t+1) tau, eta_t = 1/(tau_t ||A||^2).
struct StronglyConvexPrimal {};
// tau = 2.5/mu_g, tau_t = tau/(t+1), eta_t = (t+1)/(tau ||A||^2).
struct StronglyConvexDual {};
// alpha = 1, fixed tau, eta = 1/(tau ||A||^2).
struct WeaklyConvex {
  double tau = 1.0;
};

}  // namespace edpd

using EdpdRegime =
    std::variant<edpd::StronglyConvexPrimal, edpd::StronglyConvexDual, edpd::WeaklyConvex>;

inline std::string regime_name(const EdpdRegime& r) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, edpd::StronglyConvexPrimal>) return "edpd-scprimal";
        else if constexpr (std::is_same_v<T, edpd::StronglyConvexDual>) return "edpd-scdual";
        else return "edpd-weak";
      },
      r);
}

struct EdpdParams {
  double alpha = 1.0;       // alpha_t
  double alpha_next = 1.0;  // alpha_{t+1}
  double tau = 0.0;
  double eta = 0.0;
  double weight = 1.0;
  double mu_g = 0.0;  // modulus in force during this step
};

inline void validate(const EdpdRegime& regime, const ProblemConstants& c) {
  if (!(c.norm_A > 0.0)) throw ConfigError("edpd: ||A|| must be > 0");
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, edpd::StronglyConvexPrimal>) {
          if (!(c.mu_f > 0.0)) throw ConfigError("edpd strongly convex primal: mu_f must be > 0");
        } else if constexpr (std::is_same_v<T, edpd::StronglyConvexDual>) {
          if (!(c.mu_g > 0.0)) throw ConfigError("edpd strongly convex dual: mu_g must be > 0");
        } else {
          if (!(v.tau > 0.0)) throw ConfigError("edpd weakly convex: tau must be > 0");
        }
      },
      regime);
}

namespace detail {

inline double edpd_alpha(const EdpdRegime& regime, long t) {
  const double td = static_cast<double>(t);
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, edpd::StronglyConvexPrimal>) return (td + 1.0) / (td + 2.0);
        else if constexpr (std::is_same_v<T, edpd::StronglyConvexDual>) return td / (td + 1.0);
        else return 1.0;
      },
      regime);
}

}  // namespace detail

inline EdpdParams edpd_schedule(const EdpdRegime& regime, long t, const ProblemConstants& c) {
  require(t >= 1, "edpd_schedule: t must be >= 1");
  validate(regime, c);
  const double td = static_cast<double>(t);
  const double a2 = c.norm_A * c.norm_A;
  EdpdParams p;
  p.alpha = detail::edpd_alpha(regime, t);
  p.alpha_next = detail::edpd_alpha(regime, t + 1);
  p.mu_g = c.mu_g;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, edpd::StronglyConvexPrimal>) {
          const double tau = c.mu_f / (2.0 * a2);
          p.tau = (td + 1.0) * tau;
          p.eta = 1.0 / (p.tau * a2);
          p.weight = td + 2.0;
        } else if constexpr (std::is_same_v<T, edpd::StronglyConvexDual>) {
          const double tau = 2.5 / c.mu_g;
          p.tau = tau / (td + 1.0);
          p.eta = (td + 1.0) / (tau * a2);
          p.weight = td + 1.0;
        } else {
          p.tau = v.tau;
          p.eta = 1.0 / (v.tau * a2);
          p.weight = 1.0;
        }
      },
      regime);
  return p;
}

struct EdpdState {
  long t = 1;
  Vec x, y, yhat;
  Vec y_prev;  // y_{t-1}; y_0 = y_1
  Vec agg_num_x, agg_num_y;
  double agg_den = 0.0;

  Vec x_aggregate() const { return agg_den > 0.0 ? Vec(agg_num_x / agg_den) : x; }
  Vec y_aggregate() const { return agg_den > 0.0 ? Vec(agg_num_y / agg_den) : y; }
};

inline EdpdState edpd_init(const SaddleProblem& p, const Vec& x1, const Vec& y1) {
  require_same_size(x1, p.primal_dim(), "edpd_init: x1");
  require_same_size(y1, p.dual_dim(), "edpd_init: y1");
  EdpdState s;
  s.x = x1;
  s.y = s.yhat = s.y_prev = y1;
  s.agg_num_x = Vec::Zero(x1.size());
  s.agg_num_y = Vec::Zero(y1.size());
  return s;
}

inline void edpd_step(EdpdState& s, const SaddleProblem& p, const EdpdParams& q) {
  if (!p.f.has_prox()) throw ConfigError("edpd: f must provide an exact prox oracle");
  // argmin f(x) + <Ax, yhat> + ||x - x_t||^2/(2 eta) is the prox of f at x_t - eta A^T yhat
  Vec x_next = p.f.prox(s.x - q.eta * p.A.adjoint(s.yhat), q.eta);
  detail::check_finite(x_next, "x", s.t);
  Vec y_next = p.g.prox(s.y + q.tau * p.A.apply(x_next), q.tau);
  detail::check_finite(y_next, "y", s.t);
  s.yhat = y_next + q.alpha_next * (y_next - s.y);
  s.agg_num_x += q.weight * x_next;
  s.agg_num_y += q.weight * y_next;
  s.agg_den += q.weight;
  s.y_prev = std::move(s.y);
  s.y = std::move(y_next);
  s.x = std::move(x_next);
  ++s.t;
}

struct EdpdResult {
  Vec x;
  Vec y;
  EdpdState state;
  std::vector<EdpdParams> params;
};

using EdpdObserver = std::function<void(const EdpdState&, const EdpdParams&)>;
// Called before step t; may modify the problem (e.g. its mu_g). Schedules are
// re-derived from the modified constants.
using ProblemUpdate = std::function<void(long t, SaddleProblem&)>;

inline EdpdResult run_edpd(SaddleProblem p, const EdpdRegime& regime, const Vec& x1, const Vec& y1,
                           long iters, const EdpdObserver& observer = {},
                           const ProblemUpdate& before_step = {}) {
  require(iters >= 1, "run_edpd: iters must be >= 1");
  EdpdResult r;
  r.state = edpd_init(p, x1, y1);
  r.params.reserve(static_cast<std::size_t>(iters));
  for (long t = 1; t <= iters; ++t) {
    if (before_step) before_step(t, p);
    const EdpdParams q = edpd_schedule(regime, t, constants_of(p));
    edpd_step(r.state, p, q);
    r.params.push_back(q);
    if (observer) observer(r.state, q);
  }
  r.x = r.state.x_aggregate();
  r.y = r.state.y_aggregate();
  return r;
}

}  // namespace dpd
