#include <gtest/gtest.h>

#include "dpd/diagnostics.hpp"
#include "dpd/ldpd.hpp"
#include "dpd/synthetic.hpp"
#include "helpers.hpp"

using namespace dpd;

namespace {

ProblemConstants consts(double L, double mu_f, double mu_g, double norm_A) { return {L, mu_f, mu_g, norm_A}; }

// Straight-line transcription of one linearized step on a least-squares instance.
struct ReferenceLdpd {
  Mat H;
  Vec ctd;
  Mat A;
  Vec x, xbar, y, yhat, ybar;
  double radius;
  double mu_g;

  void step(double theta, double tau, double eta, double alpha_next) {
    Vec xhat = theta == 1.0 ? x : Vec((1.0 - theta) * xbar + theta * x);
    Vec grad = H * xhat - ctd;
    Vec xn = x - eta * (grad + A.transpose() * yhat);
    xbar = theta == 1.0 ? xn : Vec((1.0 - theta) * xbar + theta * xn);
    Vec z = (y + tau * (A * xn)) / (1.0 + tau * mu_g);
    if (z.norm() > radius) z *= radius / z.norm();
    yhat = z + alpha_next * (z - y);
    ybar = theta == 1.0 ? z : Vec((1.0 - theta) * ybar + theta * z);
    x = xn;
    y = z;
  }
};

}  // namespace

TEST(LdpdSchedule, WeaklyConvexFirstStep) {
  const auto p = ldpd_schedule(ldpd::WeaklyConvex{100}, 1, consts(1, 0, 0, 1));
  EXPECT_EQ(p.theta, 1.0);
  EXPECT_EQ(p.alpha, 0.0);
  EXPECT_DOUBLE_EQ(p.tau, 0.01);
  EXPECT_DOUBLE_EQ(p.eta, 1.0 / 102.0);
  EXPECT_DOUBLE_EQ(p.alpha_next, 0.5);
}

TEST(LdpdSchedule, StronglyConvexDualFirstStep) {
  const auto p = ldpd_schedule(ldpd::StronglyConvexDual{}, 1, consts(1, 0, 0.01, 1));
  EXPECT_DOUBLE_EQ(p.tau, 300.0);
  EXPECT_DOUBLE_EQ(p.eta, 1.0 / 302.0);
  const auto p3 = ldpd_schedule(ldpd::StronglyConvexDual{}, 3, consts(1, 0, 0.01, 1));
  EXPECT_DOUBLE_EQ(p3.theta, 0.5);
  EXPECT_DOUBLE_EQ(p3.alpha, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(p3.tau, 100.0);
  EXPECT_DOUBLE_EQ(p3.eta, 3.0 / 302.0);
}

TEST(LdpdSchedule, StronglyConvexPrimalFirstStep) {
  const auto c = consts(3, 1, 0, 1);
  EXPECT_EQ(ldpd_primal_offset(c), 4);
  const auto p = ldpd_schedule(ldpd::StronglyConvexPrimal{}, 1, c);
  EXPECT_EQ(p.theta, 1.0);
  EXPECT_DOUBLE_EQ(p.tau, 1.0);
  EXPECT_DOUBLE_EQ(p.eta, 0.25);
  EXPECT_DOUBLE_EQ(p.alpha, 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(p.weight, 6.0);
}

TEST(LdpdSchedule, SingleStepIsConstant) {
  for (long t : {1L, 7L, 300L}) {
    const auto p = ldpd_schedule(ldpd::SingleStep{0.5}, t, consts(2, 0, 0, 2));
    EXPECT_EQ(p.theta, 1.0);
    EXPECT_EQ(p.alpha, 1.0);
    EXPECT_EQ(p.tau, 0.5);
    EXPECT_DOUBLE_EQ(p.eta, 0.25);
  }
}

TEST(LdpdSchedule, RejectsIncompatibleConstants) {
  EXPECT_THROW(ldpd_schedule(ldpd::StronglyConvexDual{}, 1, consts(1, 0, 0, 1)), ConfigError);
  EXPECT_THROW(ldpd_schedule(ldpd::StronglyConvexPrimal{}, 1, consts(1, 0, 0, 1)), ConfigError);
  EXPECT_THROW(ldpd_schedule(ldpd::StronglyConvexPrimal{}, 1, consts(1, 2, 0, 1)), ConfigError);
  EXPECT_THROW(ldpd_schedule(ldpd::SingleStep{0.0}, 1, consts(1, 0, 0, 1)), ConfigError);
  EXPECT_THROW(ldpd_schedule(ldpd::WeaklyConvex{0}, 1, consts(1, 0, 0, 1)), ConfigError);
  EXPECT_THROW(ldpd_schedule(ldpd::SingleStep{1.0}, 0, consts(1, 0, 0, 1)), ContractViolation);
}

TEST(LdpdStep, DecoupledProblemContractsDual) {
  SaddleProblem p{make_zero_primal(), make_quadratic_dual(1.0), make_zero_operator(2, 3)};
  const Vec x1 = Eigen::Vector2d(1.0, -2.0);
  LdpdState s = ldpd_init(p, x1, Vec::Constant(3, 1.0), false);
  LdpdParams q;
  q.theta = 1;
  q.tau = 0.5;
  q.eta = 0.3;
  for (int t = 0; t < 40; ++t) {
    const Vec prev = s.y;
    ldpd_step(s, p, q);
    EXPECT_TRUE(s.y.isApprox(prev / 1.5));
    EXPECT_EQ(s.x, x1);
  }
  EXPECT_LT(s.y.norm(), 1e-6);
}

TEST(LdpdStep, UnitThetaCollapsesBlend) {
  const auto inst = make_quadratic_instance(6, 4, 1, 0.5);
  Rng rng(2);
  LdpdState s = ldpd_init(inst.problem, testkit::random_vec(6, rng), testkit::random_vec(4, rng), true);
  s.xbar = testkit::random_vec(6, rng);
  LdpdParams q;
  q.theta = 1;
  q.tau = 0.3;
  q.eta = 0.1;
  ldpd_step(s, inst.problem, q);
  EXPECT_EQ(s.xbar, s.x);
  EXPECT_EQ(s.ybar, s.y);
}

TEST(LdpdStep, MatchesReferenceTranscriptionBitForBit) {
  const auto inst = make_quadratic_instance(20, 15, 42, 0.5);
  const auto c = constants_of(inst.problem);
  Rng rng(3);
  const Vec x_init = testkit::random_vec(20, rng), y_init = 0.1 * testkit::random_vec(15, rng);
  ReferenceLdpd ref{inst.C.transpose() * inst.C, inst.C.transpose() * inst.d, inst.A, x_init, x_init, y_init, y_init, y_init,
                    10.0 * inst.saddle.y.norm() + 1.0, 0.5};
  LdpdState s = ldpd_init(inst.problem, x_init, y_init, true);
  for (long t = 1; t <= 5; ++t) {
    const auto q = ldpd_schedule(ldpd::StronglyConvexDual{}, t, c);
    ldpd_step(s, inst.problem, q);
    ref.step(q.theta, q.tau, q.eta, q.alpha_next);
    ASSERT_EQ(s.x, ref.x) << "t=" << t;
    ASSERT_EQ(s.xbar, ref.xbar) << "t=" << t;
    ASSERT_EQ(s.y, ref.y) << "t=" << t;
    ASSERT_EQ(s.yhat, ref.yhat) << "t=" << t;
    ASSERT_EQ(s.ybar, ref.ybar) << "t=" << t;
  }
}

TEST(LdpdRun, OneIterationAggregateIsSecondIterate) {
  const auto inst = make_quadratic_instance(8, 5, 4, 0.5);
  for (const LdpdRegime& r :
       {LdpdRegime{ldpd::WeaklyConvex{1}}, LdpdRegime{ldpd::StronglyConvexDual{}}, LdpdRegime{ldpd::SingleStep{0.3}}}) {
    const auto res = run_ldpd(inst.problem, r, Vec::Zero(8), Vec::Zero(5), 1);
    EXPECT_EQ(res.x, res.state.x) << regime_name(r);
    EXPECT_EQ(res.y, res.state.y) << regime_name(r);
  }
}

TEST(LdpdRun, BlendEqualsClosedFormAverage) {
  const auto inst = make_quadratic_instance(20, 15, 42, 0.5);
  for (const LdpdRegime& r : {LdpdRegime{ldpd::WeaklyConvex{200}}, LdpdRegime{ldpd::StronglyConvexDual{}}}) {
    std::vector<Vec> xs, ys;
    std::vector<double> ws;
    double worst = 0.0;
    run_ldpd(inst.problem, r, Vec::Zero(20), Vec::Zero(15), 200, [&](const LdpdState& s, const LdpdParams& q) {
      xs.push_back(s.x);
      ys.push_back(s.y);
      ws.push_back(q.weight);
      const Vec cx = aggregate_closed_form(xs, ws);
      const Vec cy = aggregate_closed_form(ys, ws);
      worst = std::max(worst, (s.xbar - cx).norm() / std::max(cx.norm(), 1e-300));
      worst = std::max(worst, (s.ybar - cy).norm() / std::max(cy.norm(), 1e-300));
    });
    EXPECT_LE(worst, 1e-10) << regime_name(r);
  }
}

TEST(LdpdRun, StronglyConvexDualGapBelowBound) {
  const auto inst = make_quadratic_instance(20, 15, 42, 0.5);
  const auto c = constants_of(inst.problem);
  const BoundConstants bc{c.lipschitz_f, c.mu_f, c.mu_g, c.norm_A, 3.0 / c.mu_g, 0, 0};
  const InitDistances d{inst.saddle.x.squaredNorm(), inst.saddle.y.squaredNorm()};
  const auto res = run_ldpd(inst.problem, ldpd::StronglyConvexDual{}, Vec::Zero(20), Vec::Zero(15), 500);
  EXPECT_LE(primal_dual_gap(inst.problem, res.x, res.y, inst.saddle),
            theoretical_bound(BoundKind::LdpdStronglyConvexDual, 500, bc, d) + 1e-9);
}

TEST(LdpdRun, WeaklyConvexNeedsMatchingHorizon) {
  const auto inst = make_quadratic_instance(4, 3, 1, 0.5);
  EXPECT_THROW(run_ldpd(inst.problem, ldpd::WeaklyConvex{10}, Vec::Zero(4), Vec::Zero(3), 9), ConfigError);
}

TEST(LdpdRun, RequiresGradientOracle) {
  auto inst = make_quadratic_instance(4, 3, 1, 0.5);
  inst.problem.f.grad = nullptr;
  EXPECT_THROW(run_ldpd(inst.problem, ldpd::SingleStep{1}, Vec::Zero(4), Vec::Zero(3), 3), ConfigError);
}

TEST(LdpdRun, NonFiniteIterateRaisesDivergence) {
  auto inst = make_quadratic_instance(4, 3, 1, 0.5);
  auto grad = inst.problem.f.grad;
  inst.problem.f.grad = [grad](const Vec& x) {
    Vec g = grad(x);
    if (x.norm() > 0) g[0] = std::numeric_limits<double>::quiet_NaN();
    return g;
  };
  try {
    run_ldpd(inst.problem, ldpd::SingleStep{1}, Vec::Zero(4), Vec::Zero(3), 10);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.iterate(), "x");
    EXPECT_EQ(e.t(), 2);
  }
}
