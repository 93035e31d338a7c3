#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpd/core.hpp"
#include "dpd/linops.hpp"
#include "dpd/model.hpp"

namespace dpd {

// Fixed (x, y) at which the gap function is evaluated, usually a saddle point.
struct GapReference {
  Vec x;
  Vec y;
};

// L(xbar, y_ref) - L(x_ref, ybar). Extended-valued: +inf when ybar leaves dom g.
inline double primal_dual_gap(const SaddleProblem& p, const Vec& xbar, const Vec& ybar,
                              const GapReference& ref) {
  return lagrangian(p, xbar, ref.y) - lagrangian(p, ref.x, ybar);
}

// ---------------------------------------------------------------------------
// Non-asymptotic gap bounds after k iterations, one per analysed schedule.

enum class BoundKind {
  LdpdWeaklyConvex,      // horizon form, evaluated at k = N
  LdpdStronglyConvexDual,
  LdpdStronglyConvexPrimal,
  LdpdSingleStep,
  EdpdStronglyConvexPrimal,
  EdpdStronglyConvexDual,
  EdpdWeaklyConvex,
};

inline std::string_view bound_kind_name(BoundKind k) {
  switch (k) {
    case BoundKind::LdpdWeaklyConvex: return "ldpd-weak";
    case BoundKind::LdpdStronglyConvexDual: return "ldpd-scdual";
    case BoundKind::LdpdStronglyConvexPrimal: return "ldpd-scprimal";
    case BoundKind::LdpdSingleStep: return "ldpd-single";
    case BoundKind::EdpdStronglyConvexPrimal: return "edpd-scprimal";
    case BoundKind::EdpdStronglyConvexDual: return "edpd-scdual";
    case BoundKind::EdpdWeaklyConvex: return "edpd-weak";
  }
  return "unknown";
}

inline BoundKind parse_bound_kind(std::string_view s) {
  for (auto k : {BoundKind::LdpdWeaklyConvex, BoundKind::LdpdStronglyConvexDual,
                 BoundKind::LdpdStronglyConvexPrimal, BoundKind::LdpdSingleStep,
                 BoundKind::EdpdStronglyConvexPrimal, BoundKind::EdpdStronglyConvexDual,
                 BoundKind::EdpdWeaklyConvex}) {
    if (bound_kind_name(k) == s) return k;
  }
  throw ConfigError("unknown regime tag: " + std::string(s));
}

struct BoundConstants {
  double lipschitz_f = 0.0;
  double mu_f = 0.0;
  double mu_g = 0.0;
  double norm_A = 0.0;
  double tau = 0.0;  // the regime's base dual step
  long t0 = 0;       // offset of the strongly convex primal LDPD schedule
  long horizon = 0;  // N of the weakly convex LDPD schedule
};

struct InitDistances {
  double dx2 = 0.0;  // ||x_ref - x_1||^2
  double dy2 = 0.0;  // ||y_ref - y_1||^2
};

inline double theoretical_bound(BoundKind kind, long k, const BoundConstants& c,
                                const InitDistances& d) {
  require(k >= 1, "theoretical_bound: k must be >= 1");
  const double kd = static_cast<double>(k);
  const double a2 = c.norm_A * c.norm_A;
  const double L = c.lipschitz_f;
  const double tau = c.tau;
  switch (kind) {
    case BoundKind::LdpdWeaklyConvex: {
      const double n = static_cast<double>(c.horizon > 0 ? c.horizon : k);
      return 2.0 * L / (n * (n + 1.0)) * d.dx2 + (a2 * d.dx2 + d.dy2) / (n + 1.0);
    }
    case BoundKind::LdpdStronglyConvexDual:
      return (2.0 * L + tau * a2) * d.dx2 / (kd * (kd + 1.0)) + d.dy2 / (kd * (kd + 1.0) * tau);
    case BoundKind::LdpdStronglyConvexPrimal: {
      const double t0 = static_cast<double>(c.t0);
      return (t0 + 2.0) / (kd * (kd + 3.0 + 2.0 * t0)) *
             (d.dx2 * (L - c.mu_f + 2.0 * tau * a2) + d.dy2 / (2.0 * tau));
    }
    case BoundKind::LdpdSingleStep:
      return (L + tau * a2) * d.dx2 / (2.0 * kd) + d.dy2 / (2.0 * kd * tau);
    case BoundKind::EdpdStronglyConvexPrimal:
      return (6.0 * tau * a2 * d.dx2 + 1.5 * d.dy2 / tau) / (kd * (kd + 5.0));
    case BoundKind::EdpdStronglyConvexDual:
      return 2.0 / (kd * (kd + 3.0)) * (a2 * tau * d.dx2 / 2.0 + d.dy2 * 2.0 / tau);
    case BoundKind::EdpdWeaklyConvex:
      return (d.dx2 * a2 * tau + d.dy2 / tau) / (2.0 * kd);
  }
  throw ConfigError("theoretical_bound: unknown regime");
}

struct DistanceCheck {
  bool pass = true;
  std::optional<long> first_violation;
};

struct DistanceRecord {
  long k = 0;
  double dist = 0.0;  // ||ybar_{k+1} - y*||
};

// (mu_g/2)||ybar_{k+1} - y*||^2 must stay below the strongly-convex-dual LDPD
// gap bound at every recorded k.
inline DistanceCheck dual_distance_rate_check(std::span<const DistanceRecord> history,
                                              const BoundConstants& c, const InitDistances& d,
                                              double slack = 1e-9) {
  DistanceCheck out;
  for (const auto& rec : history) {
    const double lhs = 0.5 * c.mu_g * rec.dist * rec.dist;
    if (!(lhs <= theoretical_bound(BoundKind::LdpdStronglyConvexDual, rec.k, c, d) + slack)) {
      out.pass = false;
      out.first_violation = rec.k;
      break;
    }
  }
  return out;
}

struct SeriesPoint {
  double k = 0.0;
  double value = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  std::size_t rejected = 0;  // points with k >= k_min but value <= 0 or non-finite
};

// Least-squares slope of log(value) against log(k) over points with k >= k_min.
inline SlopeFit fit_loglog_slope(std::span<const SeriesPoint> series, double k_min) {
  SlopeFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& pt : series) {
    if (pt.k < k_min) continue;
    if (!(pt.value > 0.0) || !std::isfinite(pt.value) || !(pt.k > 0.0)) {
      ++fit.rejected;
      continue;
    }
    const double lx = std::log(pt.k);
    const double ly = std::log(pt.value);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++fit.used;
  }
  if (fit.used < 10) {
    throw ContractViolation("fit_loglog_slope: need >= 10 positive points, have " +
                            std::to_string(fit.used) + " (" + std::to_string(fit.rejected) +
                            " rejected)");
  }
  const double n = static_cast<double>(fit.used);
  const double denom = n * sxx - sx * sx;
  require(denom > 0.0, "fit_loglog_slope: k values must not all coincide");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

// 20 log10(||x* - mean(x*)|| / ||x* - x_k||); +inf when x_k == x*.
inline double snr_db(const ImageGrid& xk, const ImageGrid& xstar) {
  require(xk.rows == xstar.rows && xk.cols == xstar.cols, "snr_db: dimension mismatch");
  const double err = (xstar.data - xk.data).norm();
  if (err == 0.0) return kInf;
  const double spread = (xstar.data.array() - xstar.data.mean()).matrix().norm();
  return 20.0 * std::log10(spread / err);
}

// ---------------------------------------------------------------------------
// CSV run history: t,gap,bound,snr_db,dist_dual,theta,alpha,tau,eta,wall_ms

struct HistoryRecord {
  long t = 0;
  std::optional<double> gap;
  std::optional<double> bound;
  std::optional<double> snr_db;
  std::optional<double> dist_dual;
  std::optional<double> theta;
  std::optional<double> alpha;
  std::optional<double> tau;
  std::optional<double> eta;
  std::optional<double> wall_ms;
};

inline constexpr std::string_view kHistoryHeader =
    "t,gap,bound,snr_db,dist_dual,theta,alpha,tau,eta,wall_ms";

// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string to_csv_line(const HistoryRecord& r) {
  std::string line = std::to_string(r.t);
  for (const auto* f : {&r.gap, &r.bound, &r.snr_db, &r.dist_dual, &r.theta, &r.alpha, &r.tau,
                        &r.eta, &r.wall_ms}) {
    line += ',';
    if (f->has_value()) line += format_double(**f);
  }
  return line;
}

inline void write_history_csv(std::ostream& os, std::span<const HistoryRecord> records) {
  os << kHistoryHeader << '\n';
  long prev = std::numeric_limits<long>::min();
  for (const auto& r : records) {
    require(r.t > prev, "history: t must be strictly increasing");
    prev = r.t;
    os << to_csv_line(r) << '\n';
  }
}

inline void write_history_csv(const std::string& path, std::span<const HistoryRecord> records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open history file for writing: " + path);
  write_history_csv(os, records);
  if (!os) throw IoError("failed writing history file: " + path);
}

namespace detail {

inline std::optional<double> parse_optional_double(std::string_view s, const std::string& ctx) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw IoError("history: bad number '" + std::string(s) + "' in " + ctx);
  return v;
}

}  // namespace detail

inline std::vector<HistoryRecord> read_history_csv(std::istream& is, const std::string& ctx = "csv") {
  std::string line;
  if (!std::getline(is, line) || line != kHistoryHeader)
    throw IoError("history: missing or wrong header in " + ctx);
  std::vector<HistoryRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto pos = rest.find(',');
      fields.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (fields.size() != 10) throw IoError("history: expected 10 fields in " + ctx);
    HistoryRecord r;
    const auto t = detail::parse_optional_double(fields[0], ctx);
    if (!t) throw IoError("history: empty t in " + ctx);
    r.t = static_cast<long>(*t);
    std::optional<double>* slots[] = {&r.gap, &r.bound, &r.snr_db, &r.dist_dual, &r.theta,
                                      &r.alpha, &r.tau, &r.eta, &r.wall_ms};
    for (std::size_t i = 0; i < 9; ++i) *slots[i] = detail::parse_optional_double(fields[i + 1], ctx);
    out.push_back(r);
  }
  return out;
}

inline std::vector<HistoryRecord> read_history_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open history file: " + path);
  return read_history_csv(is, path);
}

}  // namespace dpd
