#include "slq/optimize.h"

#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.h"
#include "slq/errors.h"
#include "slq/lyapunov.h"

namespace slq {
namespace {

using testing::mat;

class BenchmarkDescentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    doc = testing::benchmark();
    k0 = Gain::verify(doc.model(), doc.k0);
    oracle = riccati_policy_iteration(doc.model(), doc.weights(), k0);
    consts = constants(doc.model(), doc.weights(), k0);
  }
  ProblemDocument doc;
  Gain k0;
  Solution oracle;
  ConvergenceConstants consts;
};

TEST_F(BenchmarkDescentTest, BarzilaiBorweinReachesRelativeErrorQuickly) {
  const auto r = gradient_descent(doc.model(), doc.weights(), k0,
                                  OptimizerConfig{}, oracle.cost_star);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.final.grad_norm, 1e-3);
  std::size_t first_below = r.trace.size();
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    if (*r.trace[i].rel_error < 1e-3) {
      first_below = i;
      break;
    }
  }
  EXPECT_LE(first_below, 15u);
  EXPECT_LT((r.final.k_star.k() - testing::benchmark_k_star()).cwiseAbs().maxCoeff(), 5e-3);
  EXPECT_LT((r.final.p_star.matrix() - testing::benchmark_p_star()).cwiseAbs().maxCoeff(), 5e-3);
  EXPECT_TRUE(check_certificates(r, consts).empty());
}

TEST_F(BenchmarkDescentTest, EveryIterateIsAStabilizerInTheSublevelSet) {
  const auto r = gradient_descent(doc.model(), doc.weights(), k0, OptimizerConfig{});
  for (const auto& rec : r.trace) {
    EXPECT_TRUE(is_stabilizer(doc.model(), rec.gain)) << rec.iter;
    EXPECT_LE(rec.cost, consts.anchor_cost);
    EXPECT_TRUE(gain_within_bound(rec.gain, consts));
  }
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_LT(r.trace[i].cost, r.trace[i - 1].cost);
  }
}

TEST_F(BenchmarkDescentTest, StartingAtTheOptimumStopsImmediately) {
  const auto r = gradient_descent(doc.model(), doc.weights(), oracle.k_star,
                                  OptimizerConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.final.iterations, 0u);
}

TEST_F(BenchmarkDescentTest, TightToleranceAgreesWithOracle) {
  OptimizerConfig cfg;
  cfg.tol = 1e-6;
  const auto r = gradient_descent(doc.model(), doc.weights(), k0, cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_LE((r.final.k_star.k() - oracle.k_star.k()).norm(), 1e-4);
}

TEST_F(BenchmarkDescentTest, FixedInverseLStepSatisfiesDescentLemma) {
  OptimizerConfig cfg;
  cfg.step_rule = step::TwoOverL{};
  cfg.max_iter = 50;
  const auto r = gradient_descent(doc.model(), doc.weights(), k0, cfg,
                                  oracle.cost_star);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.trace.size(), 51u);
  EXPECT_NEAR(r.trace.front().step, 1.0 / consts.l_smooth, 1e-20);
  EXPECT_TRUE(check_certificates(r, consts).empty());
}

TEST_F(BenchmarkDescentTest, FlowObeysExponentialBound) {
  FlowConfig cfg;
  cfg.t_end = 10 * consts.mu_pl;
  const auto r = gradient_flow(doc.model(), doc.weights(), k0, cfg, oracle.cost_star);
  EXPECT_TRUE(check_certificates(r, consts).empty());
  EXPECT_DOUBLE_EQ(r.trace.back().time, cfg.t_end);
  EXPECT_LE((r.final.k_star.k() - oracle.k_star.k()).norm(), 1e-4);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_LE(r.trace[i].cost, r.trace[i - 1].cost);
    EXPECT_GT(r.trace[i].time, r.trace[i - 1].time - 1e-300);
  }
}

TEST_F(BenchmarkDescentTest, FlowFromOptimumIsStationary) {
  const auto r = gradient_flow(doc.model(), doc.weights(), oracle.k_star, FlowConfig{});
  for (const auto& rec : r.trace) {
    EXPECT_LE((rec.gain - oracle.k_star.k()).norm(), 1e-8);
  }
}

TEST(ScalarDescentTest, FixedStepFollowsDerivedLinearRate) {
  const auto model = testing::scalar_model(-1, 1, 0, 0);
  const auto weights = testing::scalar_weights();
  const Gain k0 = Gain::verify(model, mat(1, 1, {0}));
  const auto c = constants(model, weights, k0);
  const double j_star = std::sqrt(2.0) - 1;
  const double alpha = 1.0 / c.l_smooth;
  OptimizerConfig cfg;
  cfg.step_rule = step::Fixed{alpha};
  cfg.tol = 1e-7;
  const auto r = gradient_descent(model, weights, k0, cfg, j_star);
  ASSERT_TRUE(r.converged);
  const double q = 1 - alpha * (1 - c.l_smooth * alpha / 2) / c.mu_pl;
  for (std::size_t n = 0; n < r.trace.size(); ++n) {
    EXPECT_LE(r.trace[n].cost - j_star,
              std::pow(q, double(n)) * (0.5 - j_star) + 1e-15)
        << n;
    if (n > 0) EXPECT_LE(r.trace[n].cost, r.trace[n - 1].cost);
  }
  EXPECT_NEAR(r.final.k_star.k()(0, 0), 1 - std::sqrt(2.0), 1e-6);
}

TEST(ScalarDescentTest, FlowIsMonotone) {
  const auto model = testing::scalar_model(-1, 1, 0, 0);
  const auto weights = testing::scalar_weights();
  FlowConfig cfg;
  cfg.t_end = 20;
  const auto r = gradient_flow(model, weights, Gain::verify(model, mat(1, 1, {0})), cfg,
                               std::sqrt(2.0) - 1);
  ASSERT_GT(r.trace.size(), 2u);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_LE(r.trace[i].cost, r.trace[i - 1].cost);
  }
  EXPECT_NEAR(r.final.k_star.k()(0, 0), 1 - std::sqrt(2.0), 1e-6);
  EXPECT_TRUE(check_certificates(r, constants(model, weights,
                                              Gain::verify(model, mat(1, 1, {0}))))
                  .empty());
}

TEST(ScalarDescentTest, BacktrackingBelowFloorCollapses) {
  const auto model = testing::scalar_model(-1, 1, 0, 0);
  OptimizerConfig cfg;
  cfg.step_rule = step::Fixed{1e3};
  // Halving from 1e3 rejects α ≈ 3.9 (J rises) and then drops below the floor.
  cfg.step_floor = 3.0;
  EXPECT_THROW(gradient_descent(model, testing::scalar_weights(),
                                Gain::verify(model, mat(1, 1, {0})), cfg),
               StepCollapse);
}

TEST(ScalarDescentTest, IterationCapLeavesRunUnconverged) {
  const auto model = testing::scalar_model(-1, 1, 0, 0);
  OptimizerConfig cfg;
  cfg.step_rule = step::Fixed{1e-3};
  cfg.max_iter = 3;
  const auto r = gradient_descent(model, testing::scalar_weights(),
                                  Gain::verify(model, mat(1, 1, {0})), cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.trace.size(), 4u);
}

TEST(ConfigTest, RejectsOutOfRangeFields) {
  OptimizerConfig cfg;
  cfg.gamma = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = OptimizerConfig{};
  cfg.tol = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = OptimizerConfig{};
  cfg.alpha0 = 1e4;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  FlowConfig flow;
  flow.rtol = -1;
  EXPECT_THROW(flow.validate(), InvalidInput);
}

TEST(CertificateTest, IncreasingCostIsFlaggedOnce) {
  DescentReport r;
  for (int i = 0; i < 2; ++i) {
    IterateRecord rec;
    rec.iter = i;
    rec.time = i;
    rec.gain = Matrix::Zero(1, 1);
    rec.cost = 1.0 + i;
    rec.grad_norm = 0;
    rec.step = 0;
    r.trace.push_back(rec);
  }
  ConvergenceConstants c;
  c.l_smooth = 1;
  c.mu_pl = 1;
  c.gain_bound = 10;
  c.anchor_cost = 10;
  const auto v = check_certificates(r, c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].name, "monotone_cost");
  EXPECT_EQ(v[0].index, 1u);
}

TEST(StepRuleTest, Names) {
  EXPECT_EQ(step_rule_name(step::BarzilaiBorwein{}), "bb");
  EXPECT_EQ(step_rule_name(step::Fixed{0.1}), "fixed");
  EXPECT_EQ(step_rule_name(step::TwoOverL{}), "two-over-l");
}

}  // namespace
}  // namespace slq
