#pragma once

#include <span>
#include <string>

#include "dpd/core.hpp"
#include "dpd/model.hpp"

namespace dpd {

// Constants the parameter schedules consume verbatim.
struct ProblemConstants {
  double lipschitz_f = 0.0;  // L_f
  double mu_f = 0.0;
  double mu_g = 0.0;
  double norm_A = 0.0;  // ||A|| or a certified upper bound
};

inline ProblemConstants constants_of(const SaddleProblem& p) {
  return {p.f.lipschitz, p.f.mu, p.g.mu_g, p.A.norm_bound()};
}

// sum_i w_i v_i / sum_i w_i
inline Vec aggregate_closed_form(std::span<const Vec> iterates, std::span<const double> weights) {
  require(!iterates.empty(), "aggregate_closed_form: empty input");
  require(iterates.size() == weights.size(), "aggregate_closed_form: length mismatch");
  Vec num = Vec::Zero(iterates.front().size());
  double den = 0.0;
  for (std::size_t i = 0; i < iterates.size(); ++i) {
    require(weights[i] > 0.0, "aggregate_closed_form: weights must be positive");
    num += weights[i] * iterates[i];
    den += weights[i];
  }
  return num / den;
}

namespace detail {

inline void check_finite(const Vec& v, const char* name, long t) {
  if (!v.allFinite()) throw DivergenceError(name, t);
}

}  // namespace detail
}  // namespace dpd
