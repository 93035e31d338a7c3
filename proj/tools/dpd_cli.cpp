#include <iostream>

#include "CLI11.hpp"
#include "dpd/app.hpp"

namespace {

void add_image_flags(CLI::App* sub, std::string& input, dpd::Index& phantom, bool& degraded,
                     std::string& reference) {
  sub->add_option("--input", input, "clean image (PGM or .dpdf); omit for the built-in phantom");
  sub->add_option("--phantom", phantom, "phantom side length when no input is given")->capture_default_str();
  sub->add_flag("--degraded-input", degraded, "input is already degraded; skip blur and noise");
  sub->add_option("--reference", reference, "clean reference for SNR with --degraded-input");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linearized and exact dual-primal solvers for saddle problems"};
  app.require_subcommand(1);

  dpd::app::GaussConfig gauss;
  std::optional<double> gauss_tau;
  auto* g = app.add_subcommand("deblur-gauss", "TV deblurring under Gaussian noise");
  add_image_flags(g, gauss.input, gauss.phantom_size, gauss.degraded_input, gauss.reference);
  g->add_option("--solver", gauss.solver, "ldpd or edpd")->capture_default_str();
  g->add_option("--regime", gauss.regime, "scdual, weak, single, scprimal")->capture_default_str();
  g->add_option("--iters", gauss.iters)->capture_default_str();
  g->add_option("--mu", gauss.mu, "fidelity penalty")->capture_default_str();
  g->add_option("--mu-g", gauss.mu_g, "TV smoothing modulus")->capture_default_str();
  g->add_option("--sigma", gauss.sigma, "noise standard deviation")->capture_default_str();
  g->add_option("--kernel", gauss.kernel, "motion:LEN:THETA | average:SIZE | identity")->capture_default_str();
  g->add_option("--seed", gauss.seed)->capture_default_str();
  g->add_option("--tau", gauss_tau, "dual step of the fixed-step regimes (default 1/||A||)");
  g->add_option("--init", gauss.init, "primal starting point: zeros or observed")->capture_default_str();
  g->add_option("--output", gauss.output, "output prefix")->required();
  g->add_option("--history", gauss.history, "history CSV (default <output>.history.csv)");
  g->add_flag("--timing", gauss.timing, "record wall-clock time per iteration");

  dpd::app::SaltPepperConfig sp;
  std::optional<double> sp_tau;
  auto* s = app.add_subcommand("deblur-sp", "TV-L1 deblurring under salt-and-pepper noise (EDPD)");
  add_image_flags(s, sp.input, sp.phantom_size, sp.degraded_input, sp.reference);
  s->add_option("--iters", sp.iters)->capture_default_str();
  s->add_option("--alpha", sp.alpha, "fidelity penalty")->capture_default_str();
  s->add_option("--mu-g0", sp.mu_g0, "initial dual modulus; 0 runs the weakly convex regime")->capture_default_str();
  s->add_option("--halve-every", sp.halve_every, "halve mu_g every N iterations; 0 keeps it fixed")
      ->capture_default_str();
  s->add_option("--fraction", sp.fraction, "fraction of corrupted pixels")->capture_default_str();
  s->add_option("--kernel", sp.kernel)->capture_default_str();
  s->add_option("--seed", sp.seed)->capture_default_str();
  s->add_option("--tau", sp_tau, "dual step of the weakly convex regime (default 1/||A||)");
  s->add_option("--init", sp.init, "primal starting point: zeros or observed")->capture_default_str();
  s->add_option("--output", sp.output, "output prefix")->required();
  s->add_option("--history", sp.history);
  s->add_flag("--timing", sp.timing);

  dpd::app::SynthBenchConfig bench;
  auto* b = app.add_subcommand("synth-bench", "check gap bounds on certified synthetic instances");
  b->add_option("--primal-dim", bench.primal_dim)->capture_default_str();
  b->add_option("--dual-dim", bench.dual_dim)->capture_default_str();
  b->add_option("--seed", bench.seed)->capture_default_str();
  b->add_option("--iters", bench.iters)->capture_default_str();
  b->add_option("--mu-g", bench.mu_g)->capture_default_str();
  b->add_option("--lambda", bench.lambda, "ridge term of the strongly convex primal instance")
      ->capture_default_str();
  b->add_option("--output-dir", bench.output_dir, "write one history CSV per run");

  dpd::app::RatesConfig rates;
  auto* r = app.add_subcommand("rates", "fit log-log gap slopes");
  r->add_option("--input-dir", rates.input_dir, "synth-bench output; omit to run the benchmark inline");
  r->add_option("--k-min", rates.k_min)->capture_default_str();
  r->add_option("--k-max", rates.k_max)->capture_default_str();
  r->add_option("--seed", rates.bench.seed)->capture_default_str();
  r->add_option("--iters", rates.bench.iters)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : dpd::app::kConfigError;
  }

  if (g->parsed()) {
    gauss.tau = gauss_tau;
    return dpd::app::cmd_deblur_gauss(gauss);
  }
  if (s->parsed()) {
    sp.tau = sp_tau;
    return dpd::app::cmd_deblur_sp(sp);
  }
  if (b->parsed()) return dpd::app::cmd_synth_bench(bench);
  return dpd::app::cmd_rates(rates);
}
