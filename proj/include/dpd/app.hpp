#pragma once

// Experiment drivers behind the command-line tool. Each cmd_* function takes a
// plain config struct, writes its artifacts, and returns a process exit code.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dpd/core.hpp"
#include "dpd/diagnostics.hpp"
#include "dpd/edpd.hpp"
#include "dpd/imaging.hpp"
#include "dpd/ldpd.hpp"
#include "dpd/linops.hpp"
#include "dpd/synthetic.hpp"

namespace dpd::app {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfigError = 2,
  kIoError = 3,
  kDivergence = 4,
  kBoundViolation = 5,
  kNumericalFailure = 6,
};

// Runs body and maps library exceptions onto exit codes.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ContractViolation& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const DivergenceError& e) {
    err << e.what() << '\n';
    return kDivergence;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}

// "motion:LEN:THETA", "average:SIZE" or "identity".
inline Kernel2D parse_kernel(const std::string& spec) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : spec) {
    if (ch == ':' || ch == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  try {
    if (parts[0] == "motion" && parts.size() == 3)
      return make_motion_kernel(std::stoi(parts[1]), std::stod(parts[2]));
    if (parts[0] == "average" && parts.size() == 2) return make_average_kernel(std::stoi(parts[1]));
    if (parts[0] == "identity" && parts.size() == 1) return make_average_kernel(1);
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("bad kernel: ") + e.what());
  } catch (const std::logic_error&) {
  }
  throw ConfigError("bad kernel spec '" + spec + "' (expected motion:LEN:THETA, average:SIZE or identity)");
}

inline std::string strip_prefix(std::string s, const std::string& prefix) {
  if (s.rfind(prefix, 0) == 0) s.erase(0, prefix.size());
  return s;
}

inline LdpdRegime parse_ldpd_regime(const std::string& tag, long iters, double tau) {
  const std::string t = strip_prefix(tag, "ldpd-");
  if (t == "scdual") return ldpd::StronglyConvexDual{};
  if (t == "weak") return ldpd::WeaklyConvex{iters};
  if (t == "scprimal") return ldpd::StronglyConvexPrimal{};
  if (t == "single") return ldpd::SingleStep{tau};
  throw ConfigError("unknown LDPD regime '" + tag + "' (scdual, weak, scprimal, single)");
}

inline EdpdRegime parse_edpd_regime(const std::string& tag, double tau) {
  const std::string t = strip_prefix(tag, "edpd-");
  if (t == "scdual") return edpd::StronglyConvexDual{};
  if (t == "scprimal") return edpd::StronglyConvexPrimal{};
  if (t == "weak") return edpd::WeaklyConvex{tau};
  throw ConfigError("unknown EDPD regime '" + tag + "' (scdual, scprimal, weak)");
}

// Primal starting point of the imaging runs: "zeros" or "observed".
inline Vec initial_primal(const std::string& init, const ImageGrid& observed) {
  if (init == "zeros") return Vec::Zero(observed.size());
  if (init == "observed") return observed.data;
  throw ConfigError("unknown --init '" + init + "' (zeros, observed)");
}

inline ImageGrid load_image(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".dpdf") return read_dpdf(path);
  return read_pgm(path);
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << j.dump(2) << '\n';
  if (!os) throw IoError("failed writing: " + path);
}

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ===========================================================================
// Gaussian-noise deblurring with LDPD (or EDPD on the same model).

struct GaussConfig {
  std::string input;      // PGM or DPDF; empty selects the built-in phantom
  Index phantom_size = 64;
  bool degraded_input = false;  // input is already blurred and noisy
  std::string reference;        // clean image for SNR when degraded_input
  std::string solver = "ldpd";
  std::string regime = "scdual";
  long iters = 200;
  double mu = 3000.0;
  double mu_g = 0.01;
  double sigma = 3e-3;
  std::string kernel = "motion:30:135";
  std::uint64_t seed = 0;
  std::optional<double> tau;  // fixed dual step of the single-step / weak EDPD regimes
  std::string init = "zeros";
  std::string output;         // prefix for <output>.pgm, .dpdf, .meta.json
  std::string history;        // CSV path; defaults to <output>.history.csv
  bool timing = false;        // fill the wall_ms column (makes output run-dependent)
};

struct DeblurOutcome {
  ImageGrid clean;  // empty when no reference is available
  ImageGrid observed;
  ImageGrid recovered;
  std::vector<HistoryRecord> history;
  std::vector<double> mu_g_trace;
  std::string regime;
  bool heuristic_continuation = false;

  std::optional<double> final_snr() const {
    if (history.empty() || !history.back().snr_db) return std::nullopt;
    return history.back().snr_db;
  }
};

inline std::pair<ImageGrid, ImageGrid> prepare_images(const std::string& input, Index phantom_size,
                                                      bool degraded_input, const std::string& reference,
                                                      const std::function<ImageGrid(const ImageGrid&)>& degrade) {
  if (degraded_input) {
    if (input.empty()) throw ConfigError("--degraded-input requires --input");
    ImageGrid observed = load_image(input);
    ImageGrid clean;
    if (!reference.empty()) {
      clean = load_image(reference);
      if (clean.rows != observed.rows || clean.cols != observed.cols)
        throw ConfigError("reference image size differs from input");
    }
    return {clean, observed};
  }
  if (phantom_size < 1) throw ConfigError("phantom size must be >= 1");
  ImageGrid clean = input.empty() ? make_phantom(phantom_size, phantom_size) : load_image(input);
  return {clean, degrade(clean)};
}

inline DeblurOutcome run_gaussian_experiment(const GaussConfig& cfg) {
  if (cfg.iters < 1) throw ConfigError("--iters must be >= 1");
  const Kernel2D kernel = parse_kernel(cfg.kernel);
  auto [clean, observed] = prepare_images(cfg.input, cfg.phantom_size, cfg.degraded_input, cfg.reference,
                                          [&](const ImageGrid& img) {
                                            return add_gaussian_noise(blur(img, kernel), cfg.sigma, cfg.seed);
                                          });
  if (kernel.height() > observed.rows || kernel.width() > observed.cols)
    throw ConfigError("kernel larger than image");
  const SaddleProblem p = build_gaussian_problem({observed, kernel, cfg.mu, cfg.mu_g});
  const double tau = cfg.tau.value_or(1.0 / p.A.norm_bound());
  const Index m = observed.rows, n = observed.cols;

  DeblurOutcome out;
  out.clean = clean;
  out.observed = observed;
  const Vec x1 = initial_primal(cfg.init, observed);
  const Vec y1 = Vec::Zero(p.dual_dim());
  Stopwatch clock;
  auto record = [&](long t, const Vec& xagg, double theta, double alpha, double tau_t, double eta) {
    HistoryRecord r;
    r.t = t;
    if (clean.size() > 0) r.snr_db = snr_db({m, n, xagg}, clean);
    r.theta = theta;
    r.alpha = alpha;
    r.tau = tau_t;
    r.eta = eta;
    if (cfg.timing) r.wall_ms = clock.elapsed_ms();
    out.history.push_back(r);
    out.mu_g_trace.push_back(p.g.mu_g);
  };

  if (cfg.solver == "ldpd") {
    const LdpdRegime regime = parse_ldpd_regime(cfg.regime, cfg.iters, tau);
    out.regime = regime_name(regime);
    auto res = run_ldpd(p, regime, x1, y1, cfg.iters, [&](const LdpdState& s, const LdpdParams& q) {
      record(s.t - 1, s.x_aggregate(), q.theta, q.alpha, q.tau, q.eta);
    });
    out.recovered = {m, n, res.x};
  } else if (cfg.solver == "edpd") {
    const EdpdRegime regime = parse_edpd_regime(cfg.regime, tau);
    out.regime = regime_name(regime);
    auto res = run_edpd(p, regime, x1, y1, cfg.iters, [&](const EdpdState& s, const EdpdParams& q) {
      record(s.t - 1, s.x_aggregate(), 1.0, q.alpha, q.tau, q.eta);
    });
    out.recovered = {m, n, res.x};
  } else {
    throw ConfigError("unknown solver '" + cfg.solver + "' (ldpd, edpd)");
  }
  return out;
}

inline void write_deblur_outputs(const std::string& output, const std::string& history_path,
                                 const DeblurOutcome& out, nlohmann::json meta) {
  if (output.empty()) throw ConfigError("--output is required");
  write_pgm(output + ".pgm", out.recovered);
  write_dpdf(output + ".dpdf", out.recovered);
  write_pgm(output + ".observed.pgm", out.observed);
  write_dpdf(output + ".observed.dpdf", out.observed);
  write_history_csv(history_path.empty() ? output + ".history.csv" : history_path, out.history);
  meta["regime"] = out.regime;
  meta["label"] = out.heuristic_continuation ? "heuristic continuation" : "fixed parameters";
  meta["mu_g"] = out.mu_g_trace;
  if (auto s = out.final_snr()) meta["final_snr_db"] = *s;
  write_json(output + ".meta.json", meta);
}

inline int cmd_deblur_gauss(const GaussConfig& cfg, std::ostream& log = std::cout,
                            std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    if (cfg.output.empty()) throw ConfigError("--output is required");
    const DeblurOutcome out = run_gaussian_experiment(cfg);
    nlohmann::json meta = {{"command", "deblur-gauss"}, {"solver", cfg.solver}, {"iters", cfg.iters},
                           {"mu", cfg.mu},              {"mu_g0", cfg.mu_g},    {"sigma", cfg.sigma},
                           {"kernel", cfg.kernel},      {"seed", cfg.seed},     {"init", cfg.init}};
    write_deblur_outputs(cfg.output, cfg.history, out, meta);
    log << out.regime << ": " << cfg.iters << " iterations";
    if (auto s = out.final_snr()) log << ", SNR " << std::fixed << std::setprecision(2) << *s << " dB";
    log << '\n';
    return kOk;
  });
}

// ===========================================================================
// Salt-and-pepper deblurring with EDPD.

struct SaltPepperConfig {
  std::string input;
  Index phantom_size = 64;
  bool degraded_input = false;
  std::string reference;
  long iters = 150;
  double alpha = 4.0;
  double mu_g0 = 0.03;    // 0 selects the weakly convex regime
  long halve_every = 10;  // 0 keeps mu_g fixed
  double fraction = 0.2;
  std::string kernel = "average:5";
  std::uint64_t seed = 0;
  std::optional<double> tau;  // weakly convex dual step; default 1/||A||
  std::string init = "zeros";
  std::string output;
  std::string history;
  bool timing = false;
};

inline DeblurOutcome run_saltpepper_experiment(const SaltPepperConfig& cfg) {
  if (cfg.iters < 1) throw ConfigError("--iters must be >= 1");
  if (cfg.halve_every < 0) throw ConfigError("--halve-every must be >= 0");
  const Kernel2D kernel = parse_kernel(cfg.kernel);
  auto [clean, observed] = prepare_images(cfg.input, cfg.phantom_size, cfg.degraded_input, cfg.reference,
                                          [&](const ImageGrid& img) {
                                            return add_salt_pepper(blur(img, kernel), cfg.fraction, cfg.seed);
                                          });
  if (kernel.height() > observed.rows || kernel.width() > observed.cols)
    throw ConfigError("kernel larger than image");
  const SaddleProblem p = build_saltpepper_problem({observed, kernel, cfg.alpha, cfg.mu_g0, cfg.halve_every});
  const Index m = observed.rows, n = observed.cols;

  DeblurOutcome out;
  out.clean = clean;
  out.observed = observed;
  EdpdRegime regime = edpd::WeaklyConvex{cfg.tau.value_or(1.0 / p.A.norm_bound())};
  ProblemUpdate update;
  if (cfg.mu_g0 > 0.0) {
    regime = edpd::StronglyConvexDual{};
    if (cfg.halve_every > 0) {
      out.heuristic_continuation = true;
      update = [&cfg](long t, SaddleProblem& q) { q.g.mu_g = continuation_mu_g(t, cfg.mu_g0, cfg.halve_every); };
    }
  }
  out.regime = regime_name(regime);

  Stopwatch clock;
  const Vec x1 = initial_primal(cfg.init, observed);
  const Vec y1 = Vec::Zero(p.dual_dim());
  auto res = run_edpd(
      p, regime, x1, y1, cfg.iters,
      [&](const EdpdState& s, const EdpdParams& q) {
        HistoryRecord r;
        r.t = s.t - 1;
        if (clean.size() > 0) r.snr_db = snr_db({m, n, s.x_aggregate()}, clean);
        r.theta = 1.0;
        r.alpha = q.alpha;
        r.tau = q.tau;
        r.eta = q.eta;
        if (cfg.timing) r.wall_ms = clock.elapsed_ms();
        out.history.push_back(r);
        out.mu_g_trace.push_back(q.mu_g);
      },
      update);
  out.recovered = {m, n, res.x};
  return out;
}

inline int cmd_deblur_sp(const SaltPepperConfig& cfg, std::ostream& log = std::cout,
                         std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    if (cfg.output.empty()) throw ConfigError("--output is required");
    const DeblurOutcome out = run_saltpepper_experiment(cfg);
    nlohmann::json meta = {{"command", "deblur-sp"},  {"iters", cfg.iters},       {"alpha", cfg.alpha},
                           {"mu_g0", cfg.mu_g0},      {"halve_every", cfg.halve_every},
                           {"fraction", cfg.fraction}, {"kernel", cfg.kernel}, {"seed", cfg.seed},
                           {"init", cfg.init}};
    write_deblur_outputs(cfg.output, cfg.history, out, meta);
    log << out.regime << (out.heuristic_continuation ? " (heuristic continuation)" : "") << ": "
        << cfg.iters << " iterations";
    if (auto s = out.final_snr()) log << ", SNR " << std::fixed << std::setprecision(2) << *s << " dB";
    log << '\n';
    return kOk;
  });
}

// ===========================================================================
// Synthetic bound benchmark.

struct SynthBenchConfig {
  Index primal_dim = 20;
  Index dual_dim = 15;
  std::uint64_t seed = 42;
  long iters = 500;
  double mu_g = 0.5;    // dual modulus of the strongly convex dual instances
  double lambda = 0.5;  // ridge term of the strongly convex primal instance
  std::string output_dir;
  double slack = 1e-9;
};

struct RegimeRun {
  std::string instance;
  std::string regime;
  std::vector<HistoryRecord> history;  // gap, bound and (scdual LDPD) dual distance per k
  std::optional<long> first_violation;
  std::optional<long> dual_distance_violation;
  double worst_ratio = 0.0;  // max gap/bound over checked k

  std::string file_stem() const { return instance + "_" + regime; }
};

struct SynthBenchResult {
  std::vector<RegimeRun> runs;
  double kkt_residual = 0.0;  // of the certified saddle of the quadratic instance

  bool all_bounds_hold() const {
    for (const auto& r : runs)
      if (r.first_violation || r.dual_distance_violation) return false;
    return true;
  }
  const RegimeRun* find(const std::string& instance, const std::string& regime) const {
    for (const auto& r : runs)
      if (r.instance == instance && r.regime == regime) return &r;
    return nullptr;
  }
};

namespace detail {

inline BoundConstants bound_constants(const LdpdRegime& regime, const ProblemConstants& c, long iters) {
  BoundConstants b{c.lipschitz_f, c.mu_f, c.mu_g, c.norm_A, 0.0, 0, iters};
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ldpd::StronglyConvexDual>) b.tau = 3.0 / c.mu_g;
        else if constexpr (std::is_same_v<T, ldpd::StronglyConvexPrimal>) {
          b.tau = c.mu_f / (2.0 * c.norm_A * c.norm_A);
          b.t0 = ldpd_primal_offset(c);
        } else if constexpr (std::is_same_v<T, ldpd::SingleStep>) b.tau = v.tau;
        else b.horizon = v.horizon;
      },
      regime);
  return b;
}

inline BoundConstants bound_constants(const EdpdRegime& regime, const ProblemConstants& c, long iters) {
  BoundConstants b{c.lipschitz_f, c.mu_f, c.mu_g, c.norm_A, 0.0, 0, iters};
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, edpd::StronglyConvexDual>) b.tau = 2.5 / c.mu_g;
        else if constexpr (std::is_same_v<T, edpd::StronglyConvexPrimal>) b.tau = c.mu_f / (2.0 * c.norm_A * c.norm_A);
        else b.tau = v.tau;
      },
      regime);
  return b;
}

}  // namespace detail

// Runs one regime on a certified instance, recording gap and bound at every k.
template <typename Regime>
RegimeRun bench_regime(const SyntheticInstance& inst, const Regime& regime, long iters, double slack) {
  const SaddleProblem& p = inst.problem;
  const ProblemConstants c = constants_of(p);
  const BoundConstants bc = detail::bound_constants(regime, c, iters);
  const BoundKind kind = parse_bound_kind(regime_name(regime));
  const Vec x1 = Vec::Zero(p.primal_dim());
  const Vec y1 = Vec::Zero(p.dual_dim());
  const InitDistances d{(inst.saddle.x - x1).squaredNorm(), (inst.saddle.y - y1).squaredNorm()};
  const bool track_dual_distance = kind == BoundKind::LdpdStronglyConvexDual;

  RegimeRun run;
  run.instance = inst.kind;
  run.regime = regime_name(regime);
  std::vector<DistanceRecord> distances;
  auto record = [&](long k, const Vec& xa, const Vec& ya, double theta, double alpha, double tau, double eta) {
    HistoryRecord r;
    r.t = k;
    r.gap = primal_dual_gap(p, xa, ya, inst.saddle);
    // the weakly convex LDPD bound is a statement about k = N only
    if (kind != BoundKind::LdpdWeaklyConvex || k == iters) {
      r.bound = theoretical_bound(kind, k, bc, d);
      if (!(*r.gap <= *r.bound + slack) && !run.first_violation) run.first_violation = k;
      if (*r.bound > 0.0) run.worst_ratio = std::max(run.worst_ratio, *r.gap / *r.bound);
    }
    if (track_dual_distance) {
      r.dist_dual = (ya - inst.saddle.y).norm();
      distances.push_back({k, *r.dist_dual});
    }
    r.theta = theta;
    r.alpha = alpha;
    r.tau = tau;
    r.eta = eta;
    run.history.push_back(r);
  };
  if constexpr (std::is_same_v<Regime, LdpdRegime>) {
    run_ldpd(p, regime, x1, y1, iters, [&](const LdpdState& s, const LdpdParams& q) {
      record(s.t - 1, s.x_aggregate(), s.y_aggregate(), q.theta, q.alpha, q.tau, q.eta);
    });
  } else {
    run_edpd(p, regime, x1, y1, iters, [&](const EdpdState& s, const EdpdParams& q) {
      record(s.t - 1, s.x_aggregate(), s.y_aggregate(), 1.0, q.alpha, q.tau, q.eta);
    });
  }
  if (track_dual_distance) {
    const auto check = dual_distance_rate_check(distances, bc, d, slack);
    run.dual_distance_violation = check.first_violation;
  }
  return run;
}

// Instances:
//   quadratic         smooth, mu_g > 0, ball inactive at the saddle
//   box-scprimal      planted box, mu_g = 0, ridge lambda > 0
//   box-weak          planted box, mu_g = 0, no ridge
//   box-scdual        planted box, mu_g > 0 with active constraints
inline SynthBenchResult run_synth_bench(const SynthBenchConfig& cfg) {
  if (cfg.iters < 1) throw ConfigError("--iters must be >= 1");
  if (!(cfg.mu_g > 0.0)) throw ConfigError("--mu-g must be > 0");
  if (!(cfg.lambda > 0.0)) throw ConfigError("--lambda must be > 0");
  SynthBenchResult out;
  const long n = cfg.iters;

  const auto quad = make_quadratic_instance(cfg.primal_dim, cfg.dual_dim, cfg.seed, cfg.mu_g);
  out.kkt_residual = kkt_residual(quad.problem, quad.saddle.x, quad.saddle.y);
  out.runs.push_back(bench_regime(quad, LdpdRegime{ldpd::WeaklyConvex{n}}, n, cfg.slack));
  out.runs.push_back(bench_regime(quad, LdpdRegime{ldpd::StronglyConvexDual{}}, n, cfg.slack));

  auto primal = make_planted_box_instance(cfg.primal_dim, cfg.dual_dim, cfg.seed, 0.0, cfg.lambda);
  primal.kind = "box-scprimal";
  out.runs.push_back(bench_regime(primal, LdpdRegime{ldpd::StronglyConvexPrimal{}}, n, cfg.slack));
  out.runs.push_back(bench_regime(primal, EdpdRegime{edpd::StronglyConvexPrimal{}}, n, cfg.slack));

  auto weak = make_planted_box_instance(cfg.primal_dim, cfg.dual_dim, cfg.seed, 0.0, 0.0);
  weak.kind = "box-weak";
  const double tau = 1.0 / weak.problem.A.norm_bound();
  out.runs.push_back(bench_regime(weak, LdpdRegime{ldpd::SingleStep{tau}}, n, cfg.slack));
  out.runs.push_back(bench_regime(weak, EdpdRegime{edpd::WeaklyConvex{tau}}, n, cfg.slack));

  auto dual = make_planted_box_instance(cfg.primal_dim, cfg.dual_dim, cfg.seed, cfg.mu_g, 0.0);
  dual.kind = "box-scdual";
  out.runs.push_back(bench_regime(dual, LdpdRegime{ldpd::StronglyConvexDual{}}, n, cfg.slack));
  out.runs.push_back(bench_regime(dual, EdpdRegime{edpd::StronglyConvexDual{}}, n, cfg.slack));
  return out;
}

inline int cmd_synth_bench(const SynthBenchConfig& cfg, std::ostream& log = std::cout,
                           std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const SynthBenchResult res = run_synth_bench(cfg);
    if (!cfg.output_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(cfg.output_dir, ec);
      if (ec) throw IoError("cannot create output directory " + cfg.output_dir + ": " + ec.message());
      for (const auto& r : res.runs)
        write_history_csv((std::filesystem::path(cfg.output_dir) / (r.file_stem() + ".csv")).string(), r.history);
    }
    log << "saddle KKT residual (quadratic instance): " << std::scientific << std::setprecision(3)
        << res.kkt_residual << '\n';
    log << std::left << std::setw(14) << "instance" << std::setw(15) << "regime" << std::setw(14)
        << "final gap" << std::setw(14) << "final bound" << "max gap/bound\n";
    int rc = kOk;
    for (const auto& r : res.runs) {
      const auto& last = r.history.back();
      log << std::left << std::setw(14) << r.instance << std::setw(15) << r.regime << std::setw(14)
          << *last.gap << std::setw(14) << last.bound.value_or(NAN) << std::fixed << std::setprecision(4)
          << r.worst_ratio << std::scientific << std::setprecision(3) << '\n';
      if (r.first_violation) {
        err << "bound violated: " << r.instance << " " << r.regime << " at k=" << *r.first_violation << '\n';
        rc = kBoundViolation;
      }
      if (r.dual_distance_violation) {
        err << "dual distance bound violated: " << r.instance << " " << r.regime << " at k="
            << *r.dual_distance_violation << '\n';
        rc = kBoundViolation;
      }
    }
    return rc;
  });
}

// ===========================================================================
// Empirical rates.

struct RatesConfig {
  std::string input_dir;  // synth-bench output; empty runs the benchmark in memory
  SynthBenchConfig bench;
  double k_min = 50;
  double k_max = 500;
  double accelerated_max_slope = -1.8;  // strongly convex dual regimes
  double weak_lo = -1.3;                // weakly convex EDPD window
  double weak_hi = -0.7;
};

struct RateRow {
  std::string name;  // file stem, <instance>_<regime>
  std::string regime;
  SlopeFit fit;
  std::optional<bool> pass;  // nullopt when the regime carries no threshold
};

inline std::vector<SeriesPoint> gap_series(std::span<const HistoryRecord> history, double k_min, double k_max) {
  std::vector<SeriesPoint> s;
  for (const auto& r : history) {
    const auto k = static_cast<double>(r.t);
    if (r.gap && k >= k_min && k <= k_max) s.push_back({k, *r.gap});
  }
  return s;
}

inline RateRow rate_row(const std::string& name, std::span<const HistoryRecord> history, const RatesConfig& cfg) {
  RateRow row;
  row.name = name;
  const auto pos = name.rfind('_');
  row.regime = pos == std::string::npos ? name : name.substr(pos + 1);
  const auto series = gap_series(history, cfg.k_min, cfg.k_max);
  row.fit = fit_loglog_slope(series, cfg.k_min);
  if (row.regime == "ldpd-scdual" || row.regime == "edpd-scdual") {
    row.pass = row.fit.slope <= cfg.accelerated_max_slope;
  } else if (row.regime == "edpd-weak") {
    row.pass = row.fit.slope >= cfg.weak_lo && row.fit.slope <= cfg.weak_hi;
  }
  return row;
}

inline std::vector<RateRow> compute_rates(const RatesConfig& cfg) {
  std::vector<RateRow> rows;
  if (cfg.input_dir.empty()) {
    const auto res = run_synth_bench(cfg.bench);
    for (const auto& r : res.runs) rows.push_back(rate_row(r.file_stem(), r.history, cfg));
    return rows;
  }
  if (!std::filesystem::is_directory(cfg.input_dir)) throw IoError("not a directory: " + cfg.input_dir);
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(cfg.input_dir))
    if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no history CSV files in " + cfg.input_dir);
  for (const auto& f : files) {
    const auto history = read_history_csv(f.string());
    rows.push_back(rate_row(f.stem().string(), history, cfg));
  }
  return rows;
}

inline int cmd_rates(const RatesConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto rows = compute_rates(cfg);
    log << std::left << std::setw(28) << "history" << std::setw(10) << "slope" << std::setw(8) << "points"
        << "check\n";
    int rc = kOk;
    for (const auto& r : rows) {
      log << std::left << std::setw(28) << r.name << std::setw(10) << std::fixed << std::setprecision(2)
          << r.fit.slope << std::setw(8) << r.fit.used << (!r.pass ? "-" : (*r.pass ? "pass" : "FAIL")) << '\n';
      if (r.pass && !*r.pass) {
        err << "rate threshold failed for " << r.name << " (slope " << r.fit.slope << ")\n";
        rc = kBoundViolation;
      }
    }
    return rc;
  });
}

}  // namespace dpd::app
