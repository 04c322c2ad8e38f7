#include "slq/verification.h"

#include <cmath>
#include <limits>

#include "slq/errors.h"
#include "slq/lyapunov.h"

namespace slq {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kGradStep = 1e-6;
constexpr double kGradRtol = 1e-4;
constexpr double kHessStep = 1e-5;
constexpr double kHessRtol = 1e-3;

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Matrix unit_direction(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix e = gaussian(rng, rows, cols);
  return e / e.norm();
}

double scale_of(const Matrix& m) { return 1.0 + m.cwiseAbs().maxCoeff(); }

}  // namespace

std::size_t SuiteResult::total_checks() const {
  std::size_t total = 0;
  for (const auto& [name, n] : checks) total += n;
  return total;
}

void SuiteResult::merge(const SuiteResult& other) {
  for (const auto& [name, n] : other.checks) checks[name] += n;
  violations.insert(violations.end(), other.violations.begin(),
                    other.violations.end());
}

SymmetricMatrix random_spd(std::mt19937_64& rng, Eigen::Index order,
                           double floor) {
  const Matrix g = gaussian(rng, order, order, 1.0 / std::sqrt(double(order)));
  return SymmetricMatrix::symmetrize(g * g.transpose() +
                                     floor * Matrix::Identity(order, order));
}

RandomInstance random_stabilizable_instance(std::mt19937_64& rng,
                                            Eigen::Index max_n,
                                            Eigen::Index max_m) {
  std::uniform_int_distribution<Eigen::Index> pick_n(1, max_n);
  std::uniform_int_distribution<Eigen::Index> pick_m(1, max_m);
  std::uniform_real_distribution<double> shift(0.0, 1.2);
  for (;;) {
    const Eigen::Index n = pick_n(rng);
    const Eigen::Index m = pick_m(rng);
    const double s = 1.0 / std::sqrt(double(n));
    Matrix a = gaussian(rng, n, n, s);
    a.diagonal().array() -= shift(rng);
    SystemModel model(a, gaussian(rng, n, m, s), gaussian(rng, n, n, 0.4 * s),
                      gaussian(rng, n, m, 0.3 * s), random_spd(rng, n, 0.2));
    const Matrix k = gaussian(rng, m, n, 0.5 * s);
    const auto check = is_stabilizer(model, k);
    if (!check.stabilizing || max_eig(*check.certificate) > 50.0) continue;
    CostWeights weights(random_spd(rng, n, 0.2), random_spd(rng, m, 0.2));
    Gain gain = Gain::verify(model, k);
    return {std::move(model), std::move(weights), std::move(gain)};
  }
}

SuiteResult check_matrix_inequalities(std::mt19937_64& rng,
                                      std::size_t instance) {
  SuiteResult out;
  std::uniform_int_distribution<Eigen::Index> order(1, 6);

  // αXᵀX + YᵀY/α - XᵀY - YᵀX ⪰ 0.
  {
    const Eigen::Index rows = order(rng), cols = order(rng);
    const Matrix x = gaussian(rng, rows, cols);
    const Matrix y = gaussian(rng, rows, cols);
    for (double alpha : {0.5, 1.0, 2.0}) {
      const Matrix gap = alpha * x.transpose() * x +
                         y.transpose() * y / alpha - x.transpose() * y -
                         y.transpose() * x;
      const double lo = min_eig(SymmetricMatrix::symmetrize(gap));
      out.count("young_inequality");
      if (lo < -1e-10 * scale_of(gap)) out.fail("young_inequality", instance, lo, 0.0);
    }
  }

  // λ₁(X)Tr(Y) ≤ Tr(XY) ≤ λ_n(X)Tr(Y) for PSD X, Y (possibly singular).
  {
    const Eigen::Index n = order(rng);
    std::uniform_int_distribution<Eigen::Index> rank(1, n);
    const Matrix gx = gaussian(rng, n, rank(rng));
    const Matrix gy = gaussian(rng, n, rank(rng));
    const auto x = SymmetricMatrix::symmetrize(gx * gx.transpose());
    const auto y = SymmetricMatrix::symmetrize(gy * gy.transpose());
    const auto ex = eig_sym(x);
    const double tr_xy = (x.matrix() * y.matrix()).trace();
    const double tr_y = y.matrix().trace();
    const double lower = ex.values(0) * tr_y;
    const double upper = ex.values(n - 1) * tr_y;
    const double slack = 1e-10 * (1.0 + std::abs(upper));
    out.count("trace_inequality");
    if (lower > tr_xy + slack) out.fail("trace_inequality_lower", instance, lower, tr_xy);
    if (tr_xy > upper + slack) out.fail("trace_inequality_upper", instance, tr_xy, upper);
  }
  return out;
}

SuiteResult check_lyapunov_properties(const RandomInstance& inst,
                                      std::mt19937_64& rng,
                                      std::size_t instance) {
  SuiteResult out;
  const auto loop = ClosedLoop::of(inst.model, inst.gain.k());
  const Eigen::Index n = loop.order();

  // Tr(PV) = Tr(YΛ).
  {
    const auto lambda = random_spd(rng, n);
    const auto v = random_spd(rng, n);
    const auto p = solve_primal(loop, lambda);
    const auto y = solve_dual(loop, v);
    const double lhs = (p.matrix() * v.matrix()).trace();
    const double rhs = (y.matrix() * lambda.matrix()).trace();
    out.count("duality");
    if (std::abs(lhs - rhs) > 1e-8 * (1.0 + std::abs(lhs))) {
      out.fail("duality", instance, lhs, rhs);
    }
  }

  // Λ₁ ≻ Λ₂ ⇒ P₁ - P₂ ≻ 0.
  {
    const auto lambda2 = random_spd(rng, n);
    const auto lambda1 = lambda2 + random_spd(rng, n);
    const auto gap = solve_primal(loop, lambda1) - solve_primal(loop, lambda2);
    const double lo = min_eig(gap);
    out.count("monotonicity");
    if (!(lo > 0)) out.fail("monotonicity", instance, lo, 0.0);
  }

  // λ₁(P) ≥ λ₁(Λ + C_Kᵀ P C_K) / (2‖A_K‖), and Λ ≻ 0 ⇒ P ≻ 0.
  {
    const auto lambda = random_spd(rng, n);
    const auto p = solve_primal(loop, lambda);
    const double lhs = min_eig(p);
    const double rhs =
        min_eig(SymmetricMatrix::symmetrize(
            lambda.matrix() + loop.c_cl.transpose() * p.matrix() * loop.c_cl)) /
        (2.0 * spectral_norm(loop.a_cl));
    out.count("spectral_bound");
    if (lhs < rhs - 1e-10 * scale_of(p.matrix())) {
      out.fail("spectral_bound", instance, lhs, rhs);
    }
    out.count("definiteness");
    if (!is_positive_definite(p, 0.0)) out.fail("definiteness", instance, lhs, 0.0);
  }

  // P(aΛ₁ + bΛ₂) = aP(Λ₁) + bP(Λ₂).
  {
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const double ca = coef(rng), cb = coef(rng);
    const auto l1 = random_spd(rng, n);
    const auto l2 = random_spd(rng, n);
    const Matrix combined = solve_primal(loop, ca * l1 + cb * l2).matrix();
    const Matrix separate = ca * solve_primal(loop, l1).matrix() +
                            cb * solve_primal(loop, l2).matrix();
    const double err = (combined - separate).norm();
    out.count("linearity");
    if (err > 1e-9 * (1.0 + separate.norm())) out.fail("linearity", instance, err, 0.0);
  }
  return out;
}

SuiteResult check_derivatives(const RandomInstance& inst, std::mt19937_64& rng,
                              std::size_t instance) {
  SuiteResult out;
  const auto& model = inst.model;
  const auto& weights = inst.weights;
  const Matrix& k = inst.gain.k();
  const auto g = gradient(model, weights, inst.gain);

  // Tr(P_K Σ₀) = Tr(Y_K (Q + KᵀRK)).
  {
    const double dual = (g.y.matrix() * (weights.q.matrix() +
                                         k.transpose() * weights.r.matrix() * k))
                            .trace();
    out.count("cost_identity");
    if (std::abs(g.cost - dual) > 1e-8 * std::abs(g.cost)) {
      out.fail("cost_identity", instance, g.cost, dual);
    }
  }

  const auto at = [&](const Matrix& kk) {
    return Gain::verify(model, kk);
  };

  // ⟨∇J, Δ⟩ against a central difference of J. The absolute floor is the
  // round-off level of the difference quotient.
  {
    const Matrix dir = unit_direction(rng, k.rows(), k.cols());
    const double analytic = g.grad.cwiseProduct(dir).sum();
    const double fd = (cost(model, weights, at(k + kGradStep * dir)) -
                       cost(model, weights, at(k - kGradStep * dir))) /
                      (2 * kGradStep);
    const double floor = 1e3 * kEps * g.cost / kGradStep;
    out.count("gradient_fd");
    if (std::abs(fd - analytic) > kGradRtol * std::abs(analytic) + floor) {
      out.fail("gradient_fd", instance, analytic, fd);
    }
  }

  // ∇²J[E,E] against a central difference of ⟨∇J, E⟩.
  {
    const Matrix e = unit_direction(rng, k.rows(), k.cols());
    const double analytic = hessian_action(model, weights, inst.gain, g, e);
    const Matrix gp = gradient(model, weights, at(k + kHessStep * e)).grad;
    const Matrix gm = gradient(model, weights, at(k - kHessStep * e)).grad;
    const double fd = (gp - gm).cwiseProduct(e).sum() / (2 * kHessStep);
    const double floor = 1e3 * kEps * (1.0 + g.grad.norm()) / kHessStep;
    out.count("hessian_fd");
    if (std::abs(fd - analytic) > kHessRtol * std::abs(analytic) + floor) {
      out.fail("hessian_fd", instance, analytic, fd);
    }
  }
  return out;
}

SuiteResult run_random_suite(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SuiteResult out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto inst = random_stabilizable_instance(rng);
    out.merge(check_matrix_inequalities(rng, i));
    out.merge(check_lyapunov_properties(inst, rng, i));
    out.merge(check_derivatives(inst, rng, i));
  }
  return out;
}

SuiteResult check_constants_sandwich(const SystemModel& model,
                                     const CostWeights& weights,
                                     const Gain& k0, std::size_t samples,
                                     std::uint64_t seed) {
  SuiteResult out;
  const auto consts = constants(model, weights, k0);
  const auto oracle = riccati_policy_iteration(model, weights, k0);
  const Matrix& k_star = oracle.k_star.k();
  const double radius = 4.0 * std::max((k0.k() - k_star).norm(), 1e-3);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    const Gain k = sample_sublevel(model, weights, k_star, consts.anchor_cost,
                                   radius, rng);
    const auto g = gradient(model, weights, k);
    const Matrix e = gaussian(rng, k.k().rows(), k.k().cols());
    const double curvature = std::abs(hessian_action(model, weights, k, g, e));
    const double smooth_bound = consts.l_smooth * e.squaredNorm();
    out.count("smoothness");
    if (curvature > smooth_bound) out.fail("smoothness", i, curvature, smooth_bound);

    const double gap = g.cost - oracle.cost_star;
    const double pl_bound = consts.mu_pl * g.grad.squaredNorm();
    out.count("gradient_domination");
    if (gap > pl_bound + 64 * kEps * g.cost) {
      out.fail("gradient_domination", i, gap, pl_bound);
    }

    out.count("gain_bound");
    if (!gain_within_bound(k, consts)) {
      out.fail("gain_bound", i, k.k().norm(), consts.gain_bound);
    }
  }
  return out;
}

SuiteResult check_coercivity(const SystemModel& model,
                             const CostWeights& weights, const Gain& k0,
                             std::size_t rays, std::uint64_t seed) {
  SuiteResult out;
  const double j0 = cost(model, weights, k0);
  std::mt19937_64 rng(seed);
  auto value = [&](const Matrix& k) -> std::optional<double> {
    if (!is_stabilizer(model, k)) return std::nullopt;
    try {
      return cost(model, weights, Gain::verify(model, k));
    } catch (const NotStabilizing&) {
      return std::nullopt;
    }
  };
  for (std::size_t r = 0; r < rays; ++r) {
    const Matrix dir = unit_direction(rng, k0.k().rows(), k0.k().cols());
    double inside = 0;
    double inside_cost = j0;
    std::optional<double> outside;
    for (double t = 1.0; t <= 1e6; t *= 2.0) {
      const auto j = value(k0.k() + t * dir);
      if (!j) {
        outside = t;
        break;
      }
      inside = t;
      inside_cost = *j;
    }
    if (outside) {
      // Close in on the boundary of the stabilizing set.
      double hi = *outside;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (inside + hi);
        if (const auto j = value(k0.k() + mid * dir)) {
          inside = mid;
          inside_cost = *j;
        } else {
          hi = mid;
        }
      }
    }
    out.count("coercivity");
    if (!(inside_cost > 10.0 * j0)) out.fail("coercivity", r, inside_cost, 10.0 * j0);
  }
  return out;
}

SuiteResult verify_problem(const SystemModel& model, const CostWeights& weights,
                           const Gain& k0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const RandomInstance inst{model, weights, k0};
  SuiteResult out;
  for (std::size_t i = 0; i < 10; ++i) {
    out.merge(check_matrix_inequalities(rng, i));
    out.merge(check_lyapunov_properties(inst, rng, i));
    out.merge(check_derivatives(inst, rng, i));
  }
  out.merge(check_constants_sandwich(model, weights, k0, 100, seed));
  out.merge(check_coercivity(model, weights, k0, 5, seed));
  return out;
}

}  // namespace slq
