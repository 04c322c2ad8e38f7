#include "slq/optimize.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "slq/errors.h"

namespace slq {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Round-off allowance when comparing two evaluated costs.
double cost_slack(double j) { return 64.0 * kEps * (1.0 + std::abs(j)); }

std::optional<double> relative_error(double j, double j0,
                                     std::optional<double> oracle) {
  if (!oracle) return std::nullopt;
  const double denom = j0 - *oracle;
  if (denom <= 0) return 0.0;
  return (j - *oracle) / denom;
}

// Gradient bundle at a candidate gain, or nullopt if the candidate is not a
// verified stabilizer.
std::optional<GradientBundle> try_gradient(const SystemModel& model,
                                           const CostWeights& weights,
                                           const Matrix& k) {
  try {
    return gradient(model, weights, Gain::verify(model, k));
  } catch (const NotStabilizing&) {
    return std::nullopt;
  }
}

Solution make_solution(const SystemModel& model, const Matrix& k,
                       const GradientBundle& g, std::size_t iterations) {
  Solution s{Gain::verify(model, k), g.p};
  s.cost_star = g.cost;
  s.grad_norm = g.grad.norm();
  s.iterations = iterations;
  return s;
}

std::optional<double> smoothness_constant(const SystemModel& model,
                                          const CostWeights& weights,
                                          const Gain& k0) {
  try {
    return constants(model, weights, k0).l_smooth;
  } catch (const UnsupportedModel&) {
    return std::nullopt;
  }
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(gamma > 0 && gamma < 1)) throw InvalidInput("gamma must lie in (0,1)");
  if (!(tol > 0)) throw InvalidInput("tol must be positive");
  if (alpha0 && !(*alpha0 > 0)) throw InvalidInput("alpha0 must be positive");
  if (alpha0 && alpha_max < *alpha0) {
    throw InvalidInput("alpha_max must be >= alpha0");
  }
  if (!(alpha_max > 0)) throw InvalidInput("alpha_max must be positive");
  if (const auto* f = std::get_if<step::Fixed>(&step_rule); f && !(f->alpha > 0)) {
    throw InvalidInput("fixed step must be positive");
  }
}

void FlowConfig::validate() const {
  if (!(t_end > 0 && h0 > 0 && rtol > 0 && record_every > 0)) {
    throw InvalidInput("flow settings must all be positive");
  }
  if (!(grad_floor >= 0)) throw InvalidInput("grad_floor must be >= 0");
}

std::string step_rule_name(const StepRule& rule) {
  struct Visitor {
    std::string operator()(const step::Fixed&) const { return "fixed"; }
    std::string operator()(const step::TwoOverL&) const { return "two-over-l"; }
    std::string operator()(const step::BarzilaiBorwein&) const { return "bb"; }
  };
  return std::visit(Visitor{}, rule);
}

DescentReport gradient_descent(const SystemModel& model,
                               const CostWeights& weights, const Gain& k0,
                               const OptimizerConfig& cfg,
                               std::optional<double> oracle_cost) {
  cfg.validate();
  if (!k0.verified()) (void)Gain::verify(model, k0.k());

  double first_step = 0;
  if (std::holds_alternative<step::TwoOverL>(cfg.step_rule)) {
    const auto l = smoothness_constant(model, weights, k0);
    if (!l) throw UnsupportedModel("step rule two-over-l needs L (||B|| > 0)");
    first_step = 1.0 / *l;
  } else if (const auto* f = std::get_if<step::Fixed>(&cfg.step_rule)) {
    first_step = f->alpha;
  } else if (cfg.alpha0) {
    first_step = *cfg.alpha0;
  } else {
    const auto l = smoothness_constant(model, weights, k0);
    first_step = l ? std::min(1.0 / *l, 1e-2) : 1e-3;
  }
  const bool bb = std::holds_alternative<step::BarzilaiBorwein>(cfg.step_rule);

  DescentReport report;
  report.kind = TraceKind::kDescent;
  report.oracle_cost = oracle_cost;

  Matrix k = k0.k();
  GradientBundle g = gradient(model, weights, Gain::verify(model, k));
  const double j0 = g.cost;
  Matrix k_prev;
  Matrix grad_prev;
  double alpha_prev = first_step;

  for (std::size_t n = 0;; ++n) {
    IterateRecord rec;
    rec.iter = n;
    rec.time = static_cast<double>(n);
    rec.gain = k;
    rec.cost = g.cost;
    rec.grad_norm = g.grad.norm();
    rec.rel_error = relative_error(g.cost, j0, oracle_cost);
    report.trace.push_back(rec);

    if (rec.grad_norm <= cfg.tol) {
      report.converged = true;
      break;
    }
    if (n >= cfg.max_iter) break;

    double alpha = first_step;
    if (bb && n > 0) {
      const Vector s = (k - k_prev).reshaped();
      const Vector y = (g.grad - grad_prev).reshaped();
      const double sy = s.dot(y);
      alpha = sy > 0 ? s.squaredNorm() / sy : alpha_prev;
      if (!(alpha <= cfg.alpha_max)) alpha = alpha_prev;
    }

    std::optional<GradientBundle> next;
    Matrix cand;
    for (;;) {
      cand = k - alpha * g.grad;
      next = try_gradient(model, weights, cand);
      if (next && next->cost < g.cost) break;
      alpha *= cfg.gamma;
      if (alpha < cfg.step_floor) {
        throw StepCollapse(fmt::format(
            "backtracking shrank the step below {:g} at iteration {}",
            cfg.step_floor, n));
      }
    }
    report.trace.back().step = alpha;
    alpha_prev = alpha;
    k_prev = k;
    grad_prev = g.grad;
    k = cand;
    g = std::move(*next);
  }

  report.final = make_solution(model, k, g, report.trace.size() - 1);
  return report;
}

namespace {

// Dormand–Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b̂ (fifth minus fourth order weights).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

DescentReport gradient_flow(const SystemModel& model,
                            const CostWeights& weights, const Gain& k0,
                            const FlowConfig& cfg,
                            std::optional<double> oracle_cost) {
  cfg.validate();

  DescentReport report;
  report.kind = TraceKind::kFlow;
  report.oracle_cost = oracle_cost;

  Matrix k = k0.k();
  GradientBundle g = gradient(model, weights, Gain::verify(model, k));
  const double j0 = g.cost;
  double t = 0;
  double h = std::min(cfg.h0, cfg.t_end);
  double last_recorded = 0;
  std::size_t accepted = 0;
  bool stationary = false;

  auto record = [&](double step_taken) {
    IterateRecord rec;
    rec.iter = accepted;
    rec.time = t;
    rec.gain = k;
    rec.cost = g.cost;
    rec.grad_norm = g.grad.norm();
    rec.step = step_taken;
    rec.rel_error = relative_error(g.cost, j0, oracle_cost);
    report.trace.push_back(std::move(rec));
    last_recorded = t;
  };
  record(0);

  // Velocity field -∇J at a trial point; nullopt if the point left the
  // stabilizing set.
  auto field = [&](const Matrix& x) -> std::optional<GradientBundle> {
    return try_gradient(model, weights, x);
  };

  while (t < cfg.t_end) {
    const double gnorm = g.grad.norm();
    if (gnorm <= cfg.grad_floor) {
      stationary = true;
      break;
    }
    h = std::min(h, cfg.t_end - t);
    if (h < 1e-14 * std::max(1.0, t)) {
      throw StepCollapse("flow step collapsed at t = " + std::to_string(t));
    }

    const Matrix f1 = -g.grad;
    std::optional<GradientBundle> s;
    Matrix f2, f3, f4, f5, f6;
    bool ok = false;
    do {
      if (!(s = field(k + h * a21 * f1))) break;
      f2 = -s->grad;
      if (!(s = field(k + h * (a31 * f1 + a32 * f2)))) break;
      f3 = -s->grad;
      if (!(s = field(k + h * (a41 * f1 + a42 * f2 + a43 * f3)))) break;
      f4 = -s->grad;
      if (!(s = field(k + h * (a51 * f1 + a52 * f2 + a53 * f3 + a54 * f4)))) break;
      f5 = -s->grad;
      if (!(s = field(k + h * (a61 * f1 + a62 * f2 + a63 * f3 + a64 * f4 +
                               a65 * f5)))) {
        break;
      }
      f6 = -s->grad;
      ok = true;
    } while (false);
    if (!ok) {
      h *= 0.5;
      continue;
    }

    const Matrix k_new =
        k + h * (b1 * f1 + b3 * f3 + b4 * f4 + b5 * f5 + b6 * f6);
    auto end = field(k_new);
    if (!end) {
      h *= 0.5;
      continue;
    }
    const Matrix f7 = -end->grad;
    const Matrix err =
        h * (e1 * f1 + e3 * f3 + e4 * f4 + e5 * f5 + e6 * f6 + e7 * f7);
    const Matrix scale =
        (cfg.rtol * (1.0 + k.cwiseAbs().cwiseMax(k_new.cwiseAbs()).array()))
            .matrix();
    const double err_norm = err.cwiseQuotient(scale).cwiseAbs().maxCoeff();
    if (err_norm > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      continue;
    }
    if (end->cost > g.cost) {
      // The predicted decrease is below what J can resolve: the flow sits at
      // its equilibrium to working precision.
      if (h * gnorm * gnorm <= 1e3 * kEps * std::abs(g.cost)) {
        stationary = true;
        break;
      }
      h *= 0.5;
      continue;
    }

    t += h;
    k = k_new;
    g = std::move(*end);
    ++accepted;
    if (t - last_recorded >= cfg.record_every || t >= cfg.t_end) record(h);
    const double grow =
        err_norm == 0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err_norm, -0.2)));
    h *= grow;
  }

  if (stationary) {
    if (last_recorded < t) record(0);
    // K̇ = -∇J vanishes to working precision; K stays put over the rest of
    // the horizon.
    t = cfg.t_end;
    record(0);
  } else if (last_recorded < t) {
    record(0);
  }
  report.converged = stationary;
  report.final = make_solution(model, k, g, accepted);
  return report;
}

std::vector<Violation> check_certificates(const DescentReport& report,
                                          const ConvergenceConstants& consts) {
  std::vector<Violation> out;
  const auto& tr = report.trace;
  if (tr.empty()) return out;
  auto flag = [&](const char* name, std::size_t i, double lhs, double rhs) {
    out.push_back({name, i, lhs, rhs});
  };

  const double l = consts.l_smooth;
  const double mu = consts.mu_pl;
  const double j0 = tr.front().cost;
  const auto& oracle = report.oracle_cost;

  double min_g2 = std::numeric_limits<double>::infinity();
  // Running quantities for the discrete rate bounds.
  double min_alpha = std::numeric_limits<double>::infinity();
  double max_alpha = 0;
  double rate_product = 1.0;
  bool rate_applies = true;

  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto& r = tr[i];
    const double g2 = r.grad_norm * r.grad_norm;
    min_g2 = std::min(min_g2, g2);

    if (r.cost > consts.anchor_cost + cost_slack(consts.anchor_cost)) {
      flag("sublevel", i, r.cost, consts.anchor_cost);
    }
    if (!gain_within_bound(r.gain, consts)) {
      flag("gain_bound", i, r.gain.norm(), consts.gain_bound);
    }
    if (oracle && r.cost - *oracle > mu * g2 + cost_slack(r.cost)) {
      flag("pl_inequality", i, r.cost - *oracle, mu * g2);
    }

    if (i > 0 && r.cost > tr[i - 1].cost + cost_slack(tr[i - 1].cost)) {
      flag("monotone_cost", i, r.cost, tr[i - 1].cost);
    }

    if (report.kind == TraceKind::kFlow) {
      if (oracle) {
        const double bound = (j0 - *oracle) * std::exp(-r.time / mu);
        if (r.cost - *oracle > bound + cost_slack(r.cost)) {
          flag("exponential_rate", i, r.cost - *oracle, bound);
        }
      }
      if (r.time > 0 && min_g2 > j0 / r.time) {
        flag("min_grad_rate", i, min_g2, j0 / r.time);
      }
      continue;
    }

    if (i == 0) continue;
    const auto& prev = tr[i - 1];
    const double alpha = prev.step;
    const double prev_g2 = prev.grad_norm * prev.grad_norm;
    if (alpha > 0 && alpha <= 2.0 / l) {
      const double bound =
          prev.cost - alpha * (1.0 - l * alpha / 2.0) * prev_g2;
      if (r.cost > bound + cost_slack(prev.cost)) {
        flag("descent_lemma", i, r.cost, bound);
      }
      min_alpha = std::min(min_alpha, alpha);
      max_alpha = std::max(max_alpha, alpha);
      rate_product *= 1.0 - alpha * (1.0 - l * alpha / 2.0) / mu;
    } else {
      rate_applies = false;
    }
    if (!rate_applies) continue;

    // min_{n≤k} ‖∇J(K_n)‖² ≤ J(K₀)/(C(k+1)), C = ε₁ε₂L/2, over the steps
    // taken so far (record i-1 is the last one with a gradient step).
    const double eps1 = min_alpha;
    const double eps2 = 2.0 / l - max_alpha;
    if (eps1 > 0 && eps2 > 0) {
      const double c = eps1 * eps2 * l / 2.0;
      double prefix_min = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < i; ++j) {
        prefix_min = std::min(prefix_min, tr[j].grad_norm * tr[j].grad_norm);
      }
      const double bound = j0 / (c * static_cast<double>(i));
      if (prefix_min > bound) flag("min_grad_rate", i - 1, prefix_min, bound);
    }
    // Linear rate with the derived q = 1 - α(1 - Lα/2)/μ per step.
    if (oracle) {
      const double bound = rate_product * (j0 - *oracle);
      if (r.cost - *oracle > bound + cost_slack(r.cost)) {
        flag("linear_rate_derived", i, r.cost - *oracle, bound);
      }
    }
  }
  return out;
}

}  // namespace slq
