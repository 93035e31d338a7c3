// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "dpd/app.hpp"
#include "dpd/dpd.hpp"

using namespace dpd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s %2d %-34s %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

Vec random_vec(Index n, Rng& rng) {
  Vec v(n);
  fill_normal(v, rng);
  return v;
}

double worst_adjoint_error(const LinearOperator& op, int pairs, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Vec x = random_vec(op.in_dim(), rng);
    const Vec y = random_vec(op.out_dim(), rng);
    const double lhs = op.apply(x).dot(y), rhs = x.dot(op.adjoint(y));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300}));
  }
  return worst;
}

// Counts competitors q violating h(p) + |p-z|^2/(2s) <= h(q) + |q-z|^2/(2s).
int prox_decrease_violations(const std::function<double(const Vec&)>& h, const Vec& z, double step, const Vec& p,
                             const std::function<Vec(Rng&)>& competitor, std::uint64_t seed) {
  Rng rng(seed);
  const double at_p = h(p) + (p - z).squaredNorm() / (2 * step);
  if (!std::isfinite(at_p)) return 100;
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    const Vec q = competitor(rng);
    const double at_q = h(q) + (q - z).squaredNorm() / (2 * step);
    if (!(at_p <= at_q + 1e-12 * (1 + std::abs(at_q)))) ++bad;
  }
  return bad;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DPD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// First iteration whose SNR reaches the run's own final SNR minus 0.5 dB.
long iterations_to_threshold(const std::vector<HistoryRecord>& h) {
  const double threshold = *h.back().snr_db - 0.5;
  for (const auto& r : h)
    if (*r.snr_db >= threshold) return r.t;
  return h.back().t;
}

}  // namespace

int main() {
  app::SynthBenchConfig bench_cfg;  // 20 x 15, seed 42, 500 iterations
  std::optional<app::SynthBenchResult> bench;
  double bench_secs = 0.0;
  auto get_bench = [&]() -> const app::SynthBenchResult& {
    if (!bench) {
      const auto t = std::chrono::steady_clock::now();
      bench = app::run_synth_bench(bench_cfg);
      bench_secs = seconds_since(t);
    }
    return *bench;
  };
  auto bound_outcome = [&](const std::string& instance, const std::string& regime) -> Outcome {
    const auto* r = get_bench().find(instance, regime);
    if (!r) return {false, "missing run " + instance + "/" + regime};
    if (r->first_violation) return {false, regime + " violated at k=" + std::to_string(*r->first_violation)};
    return {true, regime + fmt(" max gap/bound %.3f", r->worst_ratio)};
  };

  criterion(1, "weakly convex LDPD bound at k=N", [&] {
    const auto t = std::chrono::steady_clock::now();
    const auto inst = make_quadratic_instance(bench_cfg.primal_dim, bench_cfg.dual_dim, bench_cfg.seed, bench_cfg.mu_g);
    const double kkt = kkt_residual(inst.problem, inst.saddle.x, inst.saddle.y);
    const auto run = app::bench_regime(inst, LdpdRegime{ldpd::WeaklyConvex{500}}, 500, 1e-9);
    const double secs = seconds_since(t);
    const auto& last = run.history.back();
    Outcome o{!run.first_violation && kkt <= 1e-8 && secs < 5.0,
              fmt("gap %.3e", *last.gap) + fmt(" <= bound %.3e", *last.bound) + fmt(", kkt %.1e", kkt)};
    return o;
  });

  criterion(2, "strongly convex dual LDPD bound", [&] {
    const auto t = std::chrono::steady_clock::now();
    const auto inst = make_quadratic_instance(bench_cfg.primal_dim, bench_cfg.dual_dim, bench_cfg.seed, bench_cfg.mu_g);
    const auto run = app::bench_regime(inst, LdpdRegime{ldpd::StronglyConvexDual{}}, 500, 1e-9);
    const double secs = seconds_since(t);
    if (run.first_violation) return Outcome{false, "violated at k=" + std::to_string(*run.first_violation)};
    return Outcome{secs < 5.0, fmt("all k<=500, max gap/bound %.3f", run.worst_ratio)};
  });

  criterion(3, "remaining five bounds", [&] {
    const std::pair<const char*, const char*> runs[] = {{"box-scprimal", "ldpd-scprimal"},
                                                        {"box-weak", "ldpd-single"},
                                                        {"box-scprimal", "edpd-scprimal"},
                                                        {"box-scdual", "edpd-scdual"},
                                                        {"box-weak", "edpd-weak"}};
    Outcome all{true, ""};
    for (const auto& [inst, regime] : runs) {
      const Outcome o = bound_outcome(inst, regime);
      all.pass = all.pass && o.pass;
      all.detail += (all.detail.empty() ? "" : "; ") + o.detail;
    }
    return all;
  });

  criterion(4, "rate separation (log-log slopes)", [&] {
    app::RatesConfig cfg;
    std::string detail;
    bool pass = true;
    int checked = 0;
    for (const auto& r : get_bench().runs) {
      const auto row = app::rate_row(r.file_stem(), r.history, cfg);
      if (!row.pass || r.instance == "quadratic") continue;
      pass = pass && *row.pass;
      ++checked;
      detail += (detail.empty() ? "" : ", ") + row.regime + fmt(" %.2f", row.fit.slope);
    }
    return Outcome{pass && checked == 3, detail};
  });

  criterion(5, "dual distance rate", [&] {
    const auto* r = get_bench().find("quadratic", "ldpd-scdual");
    if (!r) return Outcome{false, "missing run"};
    if (r->dual_distance_violation)
      return Outcome{false, "violated at k=" + std::to_string(*r->dual_distance_violation)};
    return Outcome{true, fmt("all k<=500, final distance %.3e", *r->history.back().dist_dual)};
  });

  criterion(6, "aggregation equivalence", [&] {
    const auto inst = make_quadratic_instance(bench_cfg.primal_dim, bench_cfg.dual_dim, bench_cfg.seed, bench_cfg.mu_g);
    double worst = 0.0;
    for (const LdpdRegime& regime : {LdpdRegime{ldpd::WeaklyConvex{200}}, LdpdRegime{ldpd::StronglyConvexDual{}}}) {
      std::vector<Vec> xs, ys;
      std::vector<double> ws;
      run_ldpd(inst.problem, regime, Vec::Zero(inst.problem.primal_dim()), Vec::Zero(inst.problem.dual_dim()), 200,
               [&](const LdpdState& s, const LdpdParams& q) {
                 xs.push_back(s.x);
                 ys.push_back(s.y);
                 ws.push_back(q.weight);
                 const Vec cx = aggregate_closed_form(xs, ws), cy = aggregate_closed_form(ys, ws);
                 worst = std::max(worst, (s.xbar - cx).norm() / cx.norm());
                 worst = std::max(worst, (s.ybar - cy).norm() / cy.norm());
               });
    }
    return Outcome{worst <= 1e-10, fmt("max relative deviation %.2e", worst)};
  });

  criterion(7, "operator and prox properties", [&] {
    std::string detail;
    bool pass = true;
    // adjoints
    double adj = 0.0;
    adj = std::max(adj, worst_adjoint_error(make_difference_operator(16, 12), 100, 1));
    adj = std::max(adj, worst_adjoint_error(make_convolution_operator(make_motion_kernel(7, 135), 16, 12), 100, 2));
    adj = std::max(adj, worst_adjoint_error(make_convolution_operator(make_average_kernel(5), 16, 12), 100, 3));
    adj = std::max(adj, worst_adjoint_error(
                            make_stacked_operator({{1.0, make_difference_operator(16, 12)},
                                                   {4.0, make_convolution_operator(make_average_kernel(5), 16, 12)}}),
                            100, 4));
    pass = pass && adj <= 1e-10;
    detail += fmt("adjoint %.1e", adj);
    // prox-decrease
    Rng rng(5);
    int bad = 0;
    {
      const Vec z = 2 * random_vec(64, rng);
      const double mu_g = 0.01, step = 3.0;
      auto h = [&](const Vec& y) { return pairs_in_unit_ball(y) ? 0.5 * mu_g * y.squaredNorm() : kInf; };
      bad += prox_decrease_violations(h, z, step, prox_smoothed_tv_dual(z, step, mu_g),
                                      [](Rng& r) { return project_ball2_pairs(1.5 * random_vec(64, r)); }, 6);
    }
    {
      const Vec z = 2 * random_vec(32, rng), c = random_vec(32, rng);
      const double mu_g = 0.03, step = 1.7;
      auto h = [&](const Vec& u) {
        return u.cwiseAbs().maxCoeff() <= 1 + 1e-12 ? c.dot(u) + 0.5 * mu_g * u.squaredNorm() : kInf;
      };
      bad += prox_decrease_violations(h, z, step, prox_linear_plus_box(z, step, c, mu_g),
                                      [](Rng& r) { return project_box(random_vec(32, r), -1, 1); }, 7);
    }
    {
      const auto K = make_convolution_operator(make_motion_kernel(7, 135), 12, 12);
      const Vec z = random_vec(144, rng), b = random_vec(144, rng);
      const double mu = 3000, step = 0.01;
      const Vec p = prox_quadratic_primal(z, step, K, b, mu);
      auto h = [&](const Vec& x) { return 0.5 * mu * (K.apply(x) - b).squaredNorm(); };
      bad += prox_decrease_violations(h, z, step, p, [&](Rng& r) { return Vec(p + 0.01 * random_vec(144, r)); }, 8);
    }
    pass = pass && bad == 0;
    detail += ", prox-decrease violations " + std::to_string(bad) + "/300";
    // norm of D on 8x8
    const auto D = make_difference_operator(8, 8);
    Eigen::JacobiSVD<Mat> svd(D.to_dense());
    const double est = estimate_operator_norm(D, 1e-12, 5000, 9).value;
    const double dn = std::abs(est - svd.singularValues()(0));
    pass = pass && dn <= 1e-4;
    detail += fmt(", |D| error %.1e", dn);
    // finite-difference gradient of the Gaussian fidelity term
    const Kernel2D k = make_motion_kernel(7, 135);
    const ImageGrid b = add_gaussian_noise(blur(make_phantom(16, 16), k), 3e-3, 1);
    const SaddleProblem gp = build_gaussian_problem({b, k, 3000.0, 0.01});
    const Vec x = random_vec(256, rng);
    const Vec g = gp.f.grad(x);
    double fd_err = 0.0;
    for (int i = 0; i < 10; ++i) {
      const Vec d = random_vec(256, rng).normalized();
      const double h = 1e-5;
      const double fd = (gp.f.value(x + h * d) - gp.f.value(x - h * d)) / (2 * h);
      fd_err = std::max(fd_err, std::abs(fd - g.dot(d)) / std::abs(g.dot(d)));
    }
    pass = pass && fd_err <= 1e-6;
    detail += fmt(", gradient rel. error %.1e", fd_err);
    return Outcome{pass, detail};
  });

  criterion(8, "Gaussian deblurring SNR ordering", [&] {
    const auto t = std::chrono::steady_clock::now();
    app::GaussConfig cfg;  // 64 x 64 phantom, mu 3000, mu_g 0.01, sigma 3e-3, 200 iterations
    cfg.kernel = "motion:7:135";
    cfg.seed = 1;
    cfg.regime = "scdual";
    const double sc = *app::run_gaussian_experiment(cfg).final_snr();
    cfg.regime = "weak";
    const double weak = *app::run_gaussian_experiment(cfg).final_snr();
    cfg.regime = "single";
    const double single = *app::run_gaussian_experiment(cfg).final_snr();
    const double secs = seconds_since(t);
    const bool pass = sc >= weak && weak >= single && sc - single >= 1.0 && secs < 30.0;
    return Outcome{pass, fmt("scdual %.2f dB", sc) + fmt(", weak %.2f dB", weak) + fmt(", single %.2f dB", single)};
  });

  criterion(9, "salt-pepper continuation speed", [&] {
    const auto t = std::chrono::steady_clock::now();
    app::SaltPepperConfig cfg;  // 64 x 64 phantom, 5x5 average, 20%, alpha 4, 150 iterations
    cfg.seed = 7;
    const auto cont = app::run_saltpepper_experiment(cfg);
    cfg.mu_g0 = 0.0;
    const auto weak = app::run_saltpepper_experiment(cfg);
    const double secs = seconds_since(t);
    const long kc = iterations_to_threshold(cont.history), kw = iterations_to_threshold(weak.history);
    const bool pass = kc < kw && secs < 30.0;
    return Outcome{pass, "continuation " + std::to_string(kc) + fmt(" its (final %.2f dB)", *cont.final_snr()) +
                             ", weak " + std::to_string(kw) + fmt(" its (final %.2f dB)", *weak.final_snr())};
  });

  criterion(10, "CLI determinism", [&] {
    const fs::path dir = fs::temp_directory_path() / "dpd_acceptance_determinism";
    fs::remove_all(dir);
    for (const char* run : {"a", "b"}) {
      const fs::path out = dir / run;
      fs::create_directories(out);
      if (run_cli("deblur-gauss --kernel motion:7:135 --seed 1 --output " + (out / "gauss").string()) != 0 ||
          run_cli("deblur-sp --seed 7 --output " + (out / "sp").string()) != 0 ||
          run_cli("synth-bench --output-dir " + (out / "bench").string()) != 0)
        return Outcome{false, "CLI run failed"};
    }
    int compared = 0, differing = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
      const auto ext = e.path().extension();
      if (!e.is_regular_file() || (ext != ".csv" && ext != ".dpdf")) continue;
      ++compared;
      if (slurp(e.path()) != slurp(dir / "b" / fs::relative(e.path(), dir / "a"))) ++differing;
    }
    return Outcome{compared >= 14 && differing == 0,
                   std::to_string(compared) + " CSV/DPDF files compared, " + std::to_string(differing) + " differ"};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
