#pragma once

// Cost, exact gradient and Hessian action of J(K) = Tr(P_K Σ₀), the
// closed-form smoothness / gradient-domination constants on a sublevel set,
// and a policy-iteration oracle for the optimal gain.

#include <cstddef>
#include <random>

#include "slq/lyapunov.h"
#include "slq/matrix_kit.h"
#include "slq/model.h"

namespace slq {

struct GradientBundle {
  double cost = 0;         // J(K)
  SymmetricMatrix p;       // P_K
  SymmetricMatrix y;       // Y_K (dual Gramian driven by Σ₀)
  Matrix m_core;           // RK + BᵀP_K + DᵀP_K(C + DK)
  Matrix grad;             // 2 · m_core · Y_K
};

struct ConvergenceConstants {
  double l_smooth = 0;    // L
  double xi = 0;          // bound on ‖P'_K‖_F / ‖E‖_F
  double mu_tilde = 0;
  double mu_pl = 0;       // μ in J(K) - J* ≤ μ‖∇J(K)‖²_F
  double gain_bound = 0;  // ‖K‖_F bound on the sublevel set
  double anchor_cost = 0; // J(K₀)
};

struct Solution {
  Gain k_star;
  SymmetricMatrix p_star;
  double cost_star = 0;
  double grad_norm = 0;
  std::size_t iterations = 0;
};

/// P_K for Λ = Q + KᵀRK. Throws NotStabilizing when the solve fails or
/// P_K is not positive definite.
SymmetricMatrix value_matrix(const SystemModel& model,
                             const CostWeights& weights, const Matrix& k);

double cost(const SystemModel& model, const CostWeights& weights,
            const Gain& gain);

GradientBundle gradient(const SystemModel& model, const CostWeights& weights,
                        const Gain& gain);

/// ∇²J(K)[E,E] via the auxiliary solve for P'_K.
double hessian_action(const SystemModel& model, const CostWeights& weights,
                      const Gain& gain, const Matrix& e);

/// Same, reusing an already computed bundle at K.
double hessian_action(const SystemModel& model, const CostWeights& weights,
                      const Gain& gain, const GradientBundle& at_k,
                      const Matrix& e);

/// Evaluates the printed constants for the sublevel set of K₀.
/// Throws UnsupportedModel when ‖B‖ = 0.
ConvergenceConstants constants(const SystemModel& model,
                               const CostWeights& weights, const Gain& k0);

bool gain_within_bound(const Gain& k, const ConvergenceConstants& consts);
bool gain_within_bound(const Matrix& k, const ConvergenceConstants& consts);

/// Policy iteration K_{j+1} = -(R + DᵀP_j D)⁻¹(BᵀP_j + DᵀP_j C).
/// Throws NotStabilizing if an iterate leaves the stabilizing set and
/// MaxIterExceeded if ‖K_{j+1} - K_j‖_F > tol after max_iter sweeps.
Solution riccati_policy_iteration(const SystemModel& model,
                                  const CostWeights& weights, const Gain& k0,
                                  double tol = 1e-12,
                                  std::size_t max_iter = 200);

/// Draws a gain K = K* + sΔ with J(K) ≤ J(K₀): Δ is a normalized Gaussian
/// direction, s starts at a uniform fraction of `radius` and is halved until
/// the gain is a stabilizer inside the sublevel set (at most 50 halvings).
/// Throws MaxIterExceeded when no admissible s is found.
Gain sample_sublevel(const SystemModel& model, const CostWeights& weights,
                     const Matrix& k_star, double anchor_cost, double radius,
                     std::mt19937_64& rng);

}  // namespace slq
