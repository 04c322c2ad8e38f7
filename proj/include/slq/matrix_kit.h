#pragma once

// Dense real-matrix primitives shared by the Lyapunov, cost and optimizer
// code. Everything here is a pure function of its arguments.

#include <Eigen/Dense>

namespace slq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetric matrix. Construction checks that the input is symmetric up to
/// 1e-12 * (1 + max|S_ij|) and stores the exact symmetrization (S + Sᵀ)/2.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(const Matrix& s);

  /// Symmetrizes without the tolerance check. The caller vouches that any
  /// asymmetry is round-off.
  static SymmetricMatrix symmetrize(const Matrix& s);

  static SymmetricMatrix identity(Eigen::Index order);
  static SymmetricMatrix zero(Eigen::Index order);

  const Matrix& matrix() const noexcept { return m_; }
  operator const Matrix&() const noexcept { return m_; }  // NOLINT
  Eigen::Index order() const noexcept { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  friend SymmetricMatrix operator+(const SymmetricMatrix& a,
                                   const SymmetricMatrix& b);
  friend SymmetricMatrix operator-(const SymmetricMatrix& a,
                                   const SymmetricMatrix& b);
  friend SymmetricMatrix operator*(double s, const SymmetricMatrix& a);

 private:
  struct Unchecked {};
  SymmetricMatrix(Matrix m, Unchecked) : m_(std::move(m)) {}
  Matrix m_;
};

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values(i)
};

/// Throws InvalidInput unless every entry is finite and the matrix non-empty.
void require_finite(const Matrix& m, const char* what);

SymmetricEigen eig_sym(const SymmetricMatrix& s);
double min_eig(const SymmetricMatrix& s);
double max_eig(const SymmetricMatrix& s);
double spectral_norm(const Matrix& m);
double frobenius_norm(const Matrix& m);

/// True iff min_eig(s) > tol * (1 + max|s_ij|).
bool is_positive_definite(const SymmetricMatrix& s, double tol);

/// Solves Fᵀ X + X F + Gᵀ X G + rhs = 0 for symmetric X by assembling the
/// n²×n² operator I⊗Fᵀ + Fᵀ⊗I + Gᵀ⊗Gᵀ (column-major vec) and running a
/// partial-pivot LU. Throws SingularOperator when the reciprocal condition
/// estimate drops below 1e-14 or the residual cannot be brought under
/// 1e-9 (1 + ‖rhs‖_F).
SymmetricMatrix kron_vec_solve(const Matrix& f, const Matrix& g,
                               const SymmetricMatrix& rhs);

/// Frobenius norm of Fᵀ X + X F + Gᵀ X G + rhs.
double lyapunov_residual(const Matrix& f, const Matrix& g, const Matrix& x,
                         const Matrix& rhs);

}  // namespace slq
