#pragma once

// Randomized property suites: matrix inequalities, Lyapunov-equation
// identities, derivative checks against finite differences, and the
// constants-as-bounds sandwich on a sublevel set.

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "slq/optimize.h"
#include "slq/policy_gradient.h"

namespace slq {

struct SuiteResult {
  std::map<std::string, std::size_t> checks;  // evaluations per property
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t total_checks() const;
  void merge(const SuiteResult& other);
  void count(const std::string& property) { ++checks[property]; }
  void fail(const std::string& property, std::size_t instance, double lhs,
            double rhs) {
    violations.push_back({property, instance, lhs, rhs});
  }
};

struct RandomInstance {
  SystemModel model;
  CostWeights weights;
  Gain gain;
};

/// Random system of order n ≤ max_n with m ≤ max_m inputs and a gain that
/// passes is_stabilizer; draws are rejected until the Λ = I certificate has
/// λ_max ≤ 50, which keeps finite differences well conditioned.
RandomInstance random_stabilizable_instance(std::mt19937_64& rng,
                                            Eigen::Index max_n = 5,
                                            Eigen::Index max_m = 3);

/// Random symmetric positive-definite matrix with λ_min ≥ floor.
SymmetricMatrix random_spd(std::mt19937_64& rng, Eigen::Index order,
                           double floor = 0.1);

/// Young-type and trace inequalities on random matrices of order ≤ 6.
SuiteResult check_matrix_inequalities(std::mt19937_64& rng,
                                      std::size_t instance);

/// Duality, monotonicity, spectral lower bound, sign and linearity of the
/// closed-loop Lyapunov equations.
SuiteResult check_lyapunov_properties(const RandomInstance& inst,
                                      std::mt19937_64& rng,
                                      std::size_t instance);

/// Cost identity and gradient / Hessian-action finite-difference checks.
SuiteResult check_derivatives(const RandomInstance& inst,
                              std::mt19937_64& rng, std::size_t instance);

/// Runs all three suites on `count` random instances.
SuiteResult run_random_suite(std::size_t count, std::uint64_t seed);

/// Samples `samples` gains in the sublevel set of K₀ and directions E, and
/// checks |∇²J(K)[E,E]| ≤ L‖E‖²_F, J(K) - J* ≤ μ‖∇J(K)‖²_F and
/// ‖K‖_F ≤ gain bound. J* comes from the policy-iteration oracle.
SuiteResult check_constants_sandwich(const SystemModel& model,
                                     const CostWeights& weights,
                                     const Gain& k0, std::size_t samples,
                                     std::uint64_t seed);

/// Along a random ray from K₀, J must exceed 10·J(K₀) at the last
/// stabilizing sample before the ray leaves the stabilizing set (or at large
/// ‖K‖ if it never does).
SuiteResult check_coercivity(const SystemModel& model,
                             const CostWeights& weights, const Gain& k0,
                             std::size_t rays, std::uint64_t seed);

/// Everything that applies to one concrete problem: the Lyapunov and
/// derivative suites at K₀, the constants sandwich and coercivity.
SuiteResult verify_problem(const SystemModel& model, const CostWeights& weights,
                           const Gain& k0, std::uint64_t seed);

}  // namespace slq
