#pragma once

#include <optional>

#include "slq/matrix_kit.h"
#include "slq/model.h"

namespace slq {

/// Closed loop of a gain K: A_K = A + BK, C_K = C + DK.
struct ClosedLoop {
  Matrix a_cl;
  Matrix c_cl;

  ClosedLoop(Matrix a_cl, Matrix c_cl);
  static ClosedLoop of(const SystemModel& model, const Matrix& k);

  Eigen::Index order() const noexcept { return a_cl.rows(); }
};

/// P solving A_Kᵀ P + P A_K + C_Kᵀ P C_K + Λ = 0.
SymmetricMatrix solve_primal(const ClosedLoop& loop,
                             const SymmetricMatrix& lambda);

/// Y solving A_K Y + Y A_Kᵀ + C_K Y C_Kᵀ + V = 0.
SymmetricMatrix solve_dual(const ClosedLoop& loop, const SymmetricMatrix& v);

struct LyapunovCertificate {
  SymmetricMatrix p;
  SymmetricMatrix y;
  double primal_residual = 0;
  double dual_residual = 0;
};

/// Solves both equations and records their residuals.
LyapunovCertificate certify(const ClosedLoop& loop,
                            const SymmetricMatrix& lambda,
                            const SymmetricMatrix& v);

struct StabilizerCheck {
  bool stabilizing = false;
  // min_eig(P) fell within ±tol of zero; reported as not stabilizing.
  bool marginal = false;
  // Solution for Λ = I, present whenever the solve succeeded.
  std::optional<SymmetricMatrix> certificate;

  explicit operator bool() const noexcept { return stabilizing; }
};

/// Mean-square stabilizer test: the Λ = I primal equation must be uniquely
/// solvable with a positive-definite solution. Solver failures map to
/// `stabilizing = false`.
StabilizerCheck is_stabilizer(const SystemModel& model, const Matrix& k,
                              double tol = kDefaultPdTol);

}  // namespace slq
