#include "slq/policy_gradient.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.h"
#include "slq/errors.h"
#include "slq/lyapunov.h"
#include "slq/verification.h"

namespace slq {
namespace {

using testing::mat;
using testing::sym;

// Scalar system a = -1, b = 1, c = d = 0, q = r = σ₀ = 1 has the closed form
// J(k) = (1 + k²) / (2(1 - k)) for k < 1.
double scalar_cost(double k) { return (1 + k * k) / (2 * (1 - k)); }
double scalar_slope(double k) {
  return (1 + 2 * k - k * k) / (2 * (1 - k) * (1 - k));
}
double scalar_curvature(double k) { return 2 / std::pow(1 - k, 3); }

class ScalarTest : public ::testing::Test {
 protected:
  SystemModel model = testing::scalar_model(-1, 1, 0, 0);
  CostWeights weights = testing::scalar_weights();
  Gain gain(double k) const { return Gain::verify(model, mat(1, 1, {k})); }
};

TEST_F(ScalarTest, CostValueAndDualAtZero) {
  const auto g = gradient(model, weights, gain(0));
  EXPECT_NEAR(g.cost, 0.5, 1e-15);
  EXPECT_NEAR(g.p.matrix()(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g.y.matrix()(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g.m_core(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g.grad(0, 0), 0.5, 1e-15);
}

TEST_F(ScalarTest, MatchesClosedFormAcrossGains) {
  for (double k : {-3.0, -1.5, -0.4, 0.0, 0.3, 0.8}) {
    const auto g = gradient(model, weights, gain(k));
    EXPECT_NEAR(g.cost, scalar_cost(k), 1e-12 * scalar_cost(k)) << k;
    EXPECT_NEAR(g.grad(0, 0), scalar_slope(k), 1e-11 * (1 + std::abs(scalar_slope(k))))
        << k;
    EXPECT_NEAR(hessian_action(model, weights, gain(k), mat(1, 1, {1})),
                scalar_curvature(k), 1e-10 * scalar_curvature(k))
        << k;
  }
}

TEST_F(ScalarTest, HessianIsQuadraticInDirection) {
  EXPECT_NEAR(hessian_action(model, weights, gain(0), mat(1, 1, {1})), 2.0, 1e-14);
  EXPECT_NEAR(hessian_action(model, weights, gain(0), mat(1, 1, {3})), 18.0, 1e-12);
  EXPECT_EQ(hessian_action(model, weights, gain(0), mat(1, 1, {0})), 0.0);
}

TEST_F(ScalarTest, ConstantsFromPrintedFormulas) {
  const auto c = constants(model, weights, gain(0));
  // J₀ = 0.5 and every norm and eigenvalue is 1.
  const double j0 = 0.5;
  const double mu_tilde = 1.0;
  const double t = mu_tilde * j0;
  const double xi = j0 * (t + std::sqrt(t * t + 1.0));
  EXPECT_DOUBLE_EQ(c.anchor_cost, j0);
  EXPECT_NEAR(c.mu_tilde, mu_tilde, 1e-15);
  EXPECT_NEAR(c.xi, xi, 1e-14);
  EXPECT_NEAR(c.l_smooth, 2 * j0 * (1 + xi), 1e-14);
  EXPECT_NEAR(c.mu_pl, 4 * j0 * std::pow(1 + j0, 2), 1e-14);
  EXPECT_NEAR(c.gain_bound, 2.0, 1e-15);
}

TEST_F(ScalarTest, OracleFindsClosedFormOptimum) {
  const auto s = riccati_policy_iteration(model, weights, gain(0));
  const double k_star = 1 - std::sqrt(2.0);
  EXPECT_NEAR(s.k_star.k()(0, 0), k_star, 1e-12);
  EXPECT_NEAR(s.cost_star, std::sqrt(2.0) - 1, 1e-12);
  EXPECT_LE(s.grad_norm, 1e-8);
  for (double k = -3.0; k <= 0.9; k += 0.01) {
    EXPECT_LE(s.cost_star, scalar_cost(k) + 1e-12) << k;
  }
}

TEST(CostTest, JointlyLinearInWeights) {
  const auto doc = testing::benchmark();
  const auto model = doc.model();
  const Gain k = Gain::verify(model, doc.k0);
  const CostWeights doubled(SymmetricMatrix(2.0 * doc.q.matrix()),
                            SymmetricMatrix(2.0 * doc.r.matrix()));
  const double base = cost(model, doc.weights(), k);
  EXPECT_NEAR(cost(model, doubled, k), 2 * base, 1e-12 * base);
}

TEST(CostTest, RejectsNonStabilizingGain) {
  const auto model = testing::scalar_model(1, 1, 0, 0);
  EXPECT_THROW(value_matrix(model, testing::scalar_weights(), mat(1, 1, {0})),
               NotStabilizing);
  EXPECT_THROW(Gain::verify(model, mat(1, 1, {0})), NotStabilizing);
}

TEST(BenchmarkTest, OracleReproducesPrintedOptimum) {
  const auto doc = testing::benchmark();
  const auto model = doc.model();
  const auto s = riccati_policy_iteration(model, doc.weights(),
                                          Gain::verify(model, doc.k0));
  EXPECT_LT((s.k_star.k() - testing::benchmark_k_star()).cwiseAbs().maxCoeff(), 5e-5);
  EXPECT_LT((s.p_star.matrix() - testing::benchmark_p_star()).cwiseAbs().maxCoeff(), 5e-5);
  // Tr(P* Σ₀) with the printed P* and Σ₀ = diag(3, 1).
  EXPECT_NEAR(s.cost_star, 61.1422 * 3 + 81.6610, 5e-4);
  EXPECT_LE(s.grad_norm, 1e-8);

  // One more sweep from the optimum stays put.
  const auto again = riccati_policy_iteration(model, doc.weights(), s.k_star);
  EXPECT_LE((again.k_star.k() - s.k_star.k()).norm(), 1e-12);
}

TEST(BenchmarkTest, HessianAtOptimumIsTheCurvatureTerm) {
  const auto doc = testing::benchmark();
  const auto model = doc.model();
  const auto s = riccati_policy_iteration(model, doc.weights(),
                                          Gain::verify(model, doc.k0));
  const auto g = gradient(model, doc.weights(), s.k_star);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 10; ++i) {
    const Matrix e = mat(1, 2, {normal(rng), normal(rng)});
    const Matrix curvature =
        doc.r.matrix() + model.d.transpose() * g.p.matrix() * model.d;
    const double expected =
        2 * (curvature * e * g.y.matrix()).cwiseProduct(e).sum();
    const double h = hessian_action(model, doc.weights(), s.k_star, g, e);
    EXPECT_GT(h, 0);
    EXPECT_NEAR(h, expected, 1e-8 * expected);
  }
}

TEST(BenchmarkTest, ConstantsArePositiveAndContainK0) {
  const auto doc = testing::benchmark();
  const auto model = doc.model();
  const Gain k0 = Gain::verify(model, doc.k0);
  const auto c = constants(model, doc.weights(), k0);
  EXPECT_GT(c.l_smooth, 0);
  EXPECT_GT(c.mu_pl, 0);
  EXPECT_GT(c.xi, 0);
  EXPECT_GT(c.mu_tilde, 0);
  EXPECT_GT(c.gain_bound, 0);
  EXPECT_TRUE(gain_within_bound(k0, c));
  const Matrix far = doc.k0 * (2 * c.gain_bound / doc.k0.norm());
  EXPECT_FALSE(gain_within_bound(far, c));
}

TEST(ConstantsTest, ZeroInputMatrixIsUnsupported) {
  const auto model = testing::scalar_model(-1, 0, 0, 0);
  EXPECT_THROW(constants(model, testing::scalar_weights(),
                         Gain::verify(model, mat(1, 1, {0}))),
               UnsupportedModel);
}

TEST(SublevelTest, SamplesStayInSublevelSet) {
  const auto doc = testing::benchmark();
  const auto model = doc.model();
  const auto s = riccati_policy_iteration(model, doc.weights(),
                                          Gain::verify(model, doc.k0));
  const double j0 = cost(model, doc.weights(), Gain::verify(model, doc.k0));
  std::mt19937_64 rng(9);
  for (int i = 0; i < 30; ++i) {
    const Gain k = sample_sublevel(model, doc.weights(), s.k_star.k(), j0, 10.0, rng);
    EXPECT_TRUE(k.verified());
    EXPECT_LE(cost(model, doc.weights(), k), j0);
  }
}

TEST(DerivativePropertyTest, RandomInstancesMatchFiniteDifferences) {
  std::mt19937_64 rng(23);
  SuiteResult total;
  for (std::size_t i = 0; i < 50; ++i) {
    total.merge(check_derivatives(random_stabilizable_instance(rng), rng, i));
  }
  for (const auto& v : total.violations) {
    ADD_FAILURE() << v.name << " #" << v.index << ": " << v.lhs << " vs " << v.rhs;
  }
  EXPECT_EQ(total.checks.at("gradient_fd"), 50u);
}

TEST(ConstantsSandwichTest, BoundsHoldOnSampledGains) {
  const auto doc = testing::benchmark();
  const auto model = doc.model();
  const auto r = check_constants_sandwich(model, doc.weights(),
                                          Gain::verify(model, doc.k0), 25, 4);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.checks.at("smoothness"), 25u);
}

TEST(CoercivityTest, CostBlowsUpTowardTheBoundary) {
  const auto doc = testing::benchmark();
  const auto model = doc.model();
  const auto r = check_coercivity(model, doc.weights(), Gain::verify(model, doc.k0), 5, 2);
  EXPECT_TRUE(r.ok());
}

}  // namespace
}  // namespace slq
