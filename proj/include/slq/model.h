#pragma once

#include "slq/matrix_kit.h"

namespace slq {

/// Controlled SDE dX = (AX + Bu)dt + (CX + Du)dB with scalar Brownian
/// motion, and Σ₀ = E[X(0)X(0)ᵀ].
struct SystemModel {
  Matrix a;  // n×n
  Matrix b;  // n×m
  Matrix c;  // n×n
  Matrix d;  // n×m
  SymmetricMatrix sigma0;

  /// Checks shapes, finiteness and Σ₀ ≻ 0. Throws ValidationError naming
  /// the offending field.
  SystemModel(Matrix a, Matrix b, Matrix c, Matrix d, SymmetricMatrix sigma0);

  Eigen::Index states() const noexcept { return a.rows(); }
  Eigen::Index inputs() const noexcept { return b.cols(); }
};

/// Running cost XᵀQX + uᵀRu with Q, R ≻ 0.
struct CostWeights {
  SymmetricMatrix q;
  SymmetricMatrix r;

  CostWeights(SymmetricMatrix q, SymmetricMatrix r);
};

/// A feedback gain u = KX. `verified` means the gain passed is_stabilizer
/// against the model it was built for.
class Gain {
 public:
  /// Empty, unverified placeholder.
  Gain() = default;
  /// Runs the stabilizer test and throws NotStabilizing on failure.
  static Gain verify(const SystemModel& model, const Matrix& k,
                     double tol = 1e-9);
  static Gain unverified(const Matrix& k);

  const Matrix& k() const noexcept { return k_; }
  bool verified() const noexcept { return verified_; }

 private:
  Gain(Matrix k, bool verified) : k_(std::move(k)), verified_(verified) {}
  Matrix k_;
  bool verified_ = false;
};

/// Default relative tolerance for "P ≻ 0" decisions.
inline constexpr double kDefaultPdTol = 1e-9;

}  // namespace slq
