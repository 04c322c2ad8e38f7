#pragma once

// Gradient flow and gradient descent on J(K), plus the checks that an
// optimizer trace honours the smoothness / gradient-domination certificates.

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "slq/policy_gradient.h"

namespace slq {

namespace step {
struct Fixed {
  double alpha;
};
/// Constant step 1/L, the midpoint of the admissible interval (0, 2/L].
struct TwoOverL {};
struct BarzilaiBorwein {};
}  // namespace step

using StepRule = std::variant<step::Fixed, step::TwoOverL, step::BarzilaiBorwein>;

struct OptimizerConfig {
  StepRule step_rule = step::BarzilaiBorwein{};
  double gamma = 0.5;  // backtracking factor
  double tol = 1e-3;   // stop when ‖∇J(K_n)‖_F ≤ tol
  std::size_t max_iter = 1000;
  // First BB step; unset means min(1/L, 1e-2), or 1e-3 when L is unavailable.
  std::optional<double> alpha0;
  double alpha_max = 1e3;
  // Backtracking below this step raises StepCollapse.
  double step_floor = 1e-16;

  void validate() const;
};

struct FlowConfig {
  double t_end = 10.0;
  double h0 = 1e-3;
  double rtol = 1e-6;
  double record_every = 1e-2;
  // Below this gradient norm the trajectory is treated as having reached
  // its equilibrium; the remainder of the horizon is recorded at K fixed.
  double grad_floor = 1e-9;

  void validate() const;
};

struct IterateRecord {
  std::size_t iter = 0;
  double time = 0;  // flow time; equals iter for descent traces
  Matrix gain;
  double cost = 0;
  double grad_norm = 0;
  double step = 0;  // α_n applied at this iterate (0 on the last record)
  std::optional<double> rel_error;
};

enum class TraceKind { kDescent, kFlow };

struct Violation {
  std::string name;
  std::size_t index = 0;
  double lhs = 0;
  double rhs = 0;
};

struct DescentReport {
  TraceKind kind = TraceKind::kDescent;
  std::vector<IterateRecord> trace;
  Solution final;
  bool converged = false;
  std::optional<double> oracle_cost;
  std::vector<Violation> certificate_violations;
};

/// K_{n+1} = K_n - α_n ∇J(K_n) with shrink-on-increase backtracking.
/// Candidates that fail the stabilizer test are shrunk like cost increases.
/// Hitting max_iter returns the report with converged = false.
DescentReport gradient_descent(const SystemModel& model,
                               const CostWeights& weights, const Gain& k0,
                               const OptimizerConfig& cfg,
                               std::optional<double> oracle_cost = std::nullopt);

/// Integrates K̇ = -∇J(K) with an adaptive Dormand–Prince 5(4) pair; a step
/// that would raise J is rejected and retried at half size.
DescentReport gradient_flow(const SystemModel& model,
                            const CostWeights& weights, const Gain& k0,
                            const FlowConfig& cfg,
                            std::optional<double> oracle_cost = std::nullopt);

/// Checks a trace against the convergence certificates. Returns an empty
/// list iff every applicable inequality holds.
std::vector<Violation> check_certificates(const DescentReport& report,
                                          const ConvergenceConstants& consts);

std::string step_rule_name(const StepRule& rule);

}  // namespace slq
