#include "slq/policy_gradient.h"

#include <cmath>
#include <string>

#include "slq/errors.h"

namespace slq {
namespace {

constexpr int kMaxSublevelHalvings = 50;

ClosedLoop loop_of(const SystemModel& model, const Gain& gain) {
  return ClosedLoop::of(model, gain.k());
}

SymmetricMatrix stage_weight(const CostWeights& weights, const Matrix& k) {
  return SymmetricMatrix::symmetrize(weights.q.matrix() +
                                     k.transpose() * weights.r.matrix() * k);
}

// Λ-solve that reports a failed or indefinite solution as NotStabilizing.
SymmetricMatrix stabilizing_solve(const ClosedLoop& loop,
                                  const SymmetricMatrix& lambda,
                                  bool dual) {
  try {
    auto x = dual ? solve_dual(loop, lambda) : solve_primal(loop, lambda);
    if (!is_positive_definite(x, kDefaultPdTol)) {
      throw NotStabilizing("Lyapunov solution is not positive definite");
    }
    return x;
  } catch (const SingularOperator& e) {
    throw NotStabilizing(std::string("Lyapunov operator singular: ") + e.what());
  }
}

}  // namespace

SymmetricMatrix value_matrix(const SystemModel& model,
                             const CostWeights& weights, const Matrix& k) {
  return stabilizing_solve(ClosedLoop::of(model, k), stage_weight(weights, k),
                           false);
}

double cost(const SystemModel& model, const CostWeights& weights,
            const Gain& gain) {
  const auto p = value_matrix(model, weights, gain.k());
  return (p.matrix() * model.sigma0.matrix()).trace();
}

GradientBundle gradient(const SystemModel& model, const CostWeights& weights,
                        const Gain& gain) {
  const auto loop = loop_of(model, gain);
  const Matrix& k = gain.k();
  GradientBundle g;
  g.p = stabilizing_solve(loop, stage_weight(weights, k), false);
  g.y = stabilizing_solve(loop, model.sigma0, true);
  g.cost = (g.p.matrix() * model.sigma0.matrix()).trace();
  const Matrix& p = g.p.matrix();
  g.m_core = weights.r.matrix() * k + model.b.transpose() * p +
             model.d.transpose() * p * loop.c_cl;
  g.grad = 2.0 * g.m_core * g.y.matrix();
  return g;
}

double hessian_action(const SystemModel& model, const CostWeights& weights,
                      const Gain& gain, const Matrix& e) {
  return hessian_action(model, weights, gain, gradient(model, weights, gain), e);
}

double hessian_action(const SystemModel& model, const CostWeights& weights,
                      const Gain& gain, const GradientBundle& at_k,
                      const Matrix& e) {
  if (e.rows() != gain.k().rows() || e.cols() != gain.k().cols()) {
    throw InvalidInput("direction E must have the shape of K");
  }
  const auto loop = loop_of(model, gain);
  const Matrix& p = at_k.p.matrix();
  const Matrix& y = at_k.y.matrix();
  const Matrix me = at_k.m_core.transpose() * e;
  SymmetricMatrix dp;
  try {
    dp = solve_primal(loop, SymmetricMatrix::symmetrize(me + me.transpose()));
  } catch (const SingularOperator& err) {
    throw NotStabilizing(std::string("Lyapunov operator singular: ") + err.what());
  }
  const Matrix& dpm = dp.matrix();
  const Matrix curvature =
      weights.r.matrix() + model.d.transpose() * p * model.d;
  const double first = (curvature * e * y).cwiseProduct(e).sum();
  const double second =
      ((model.b.transpose() * dpm + model.d.transpose() * dpm * loop.c_cl) * y)
          .cwiseProduct(e)
          .sum();
  return 2.0 * first + 4.0 * second;
}

ConvergenceConstants constants(const SystemModel& model,
                               const CostWeights& weights, const Gain& k0) {
  const double norm_a = spectral_norm(model.a);
  const double norm_b = spectral_norm(model.b);
  const double norm_c = spectral_norm(model.c);
  const double norm_d = spectral_norm(model.d);
  const double fro_c = frobenius_norm(model.c);
  const double fro_d = frobenius_norm(model.d);
  if (norm_b == 0.0) {
    throw UnsupportedModel("constants need ||B|| > 0");
  }
  const double sig1 = min_eig(model.sigma0);
  const double q1 = min_eig(weights.q);
  const double r1 = min_eig(weights.r);
  const double rn = max_eig(weights.r);
  const double n = static_cast<double>(model.states());

  ConvergenceConstants c;
  const double j0 = cost(model, weights, k0);
  c.anchor_cost = j0;

  c.mu_tilde = norm_b + norm_d * fro_c +
               2.0 * norm_b * j0 * norm_d * norm_d / (sig1 * r1) +
               norm_a * norm_d * norm_d / norm_b;

  const double t = c.mu_tilde * j0 / (sig1 * q1);
  c.xi = std::sqrt(n) * j0 / sig1 * (t + std::sqrt(t * t + rn / q1));

  const double coupling = norm_b + norm_c * norm_d +
                          2.0 * norm_b * fro_d * fro_d * j0 / (sig1 * r1) +
                          norm_a * fro_d * fro_d / norm_b;
  c.l_smooth = 2.0 * j0 / q1 *
               (rn + j0 * norm_d * norm_d / sig1 + coupling * c.xi);

  const double drift = norm_a + norm_b * norm_b * j0 / (r1 * sig1);
  c.mu_pl = 4.0 * j0 / (r1 * q1 * sig1 * sig1) * drift * drift;

  c.gain_bound = 2.0 * norm_b * j0 / (sig1 * r1) + norm_a / norm_b;
  return c;
}

bool gain_within_bound(const Matrix& k, const ConvergenceConstants& consts) {
  return k.norm() <= consts.gain_bound;
}

bool gain_within_bound(const Gain& k, const ConvergenceConstants& consts) {
  return gain_within_bound(k.k(), consts);
}

Solution riccati_policy_iteration(const SystemModel& model,
                                  const CostWeights& weights, const Gain& k0,
                                  double tol, std::size_t max_iter) {
  const Matrix& b = model.b;
  const Matrix& c = model.c;
  const Matrix& d = model.d;
  Matrix k = k0.k();
  for (std::size_t it = 0; it < max_iter; ++it) {
    SymmetricMatrix p;
    try {
      p = value_matrix(model, weights, k);
    } catch (const NotStabilizing& e) {
      throw NotStabilizing("policy iterate " + std::to_string(it) +
                           " left the stabilizing set (numerical failure): " +
                           e.what());
    }
    const Matrix& pm = p.matrix();
    const Matrix lhs = weights.r.matrix() + d.transpose() * pm * d;
    const Matrix rhs = b.transpose() * pm + d.transpose() * pm * c;
    const Matrix next = -lhs.ldlt().solve(rhs);
    const double step = (next - k).norm();
    k = next;
    if (step <= tol) {
      Solution s{Gain::verify(model, k), value_matrix(model, weights, k)};
      const auto g = gradient(model, weights, s.k_star);
      s.cost_star = g.cost;
      s.grad_norm = g.grad.norm();
      s.iterations = it + 1;
      return s;
    }
  }
  throw MaxIterExceeded("policy iteration did not reach tolerance in " +
                        std::to_string(max_iter) + " iterations");
}

Gain sample_sublevel(const SystemModel& model, const CostWeights& weights,
                     const Matrix& k_star, double anchor_cost, double radius,
                     std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix dir(k_star.rows(), k_star.cols());
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir.data()[i] = normal(rng);
  dir /= dir.norm();
  double s = radius * (1.0 - unit(rng));  // (0, radius]
  for (int attempt = 0; attempt <= kMaxSublevelHalvings; ++attempt, s *= 0.5) {
    const Matrix k = k_star + s * dir;
    if (!is_stabilizer(model, k)) continue;
    try {
      const Gain g = Gain::verify(model, k);
      if (cost(model, weights, g) <= anchor_cost) return g;
    } catch (const NotStabilizing&) {
    }
  }
  throw MaxIterExceeded("no sublevel sample found along the drawn direction");
}

}  // namespace slq
