#include "slq/matrix_kit.h"

#include <cmath>
#include <string>

#include "slq/errors.h"

namespace slq {
namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kMinRcond = 1e-14;
constexpr double kResidualTol = 1e-9;
constexpr double kDriftTol = 1e-9;

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw InvalidInput(std::string(what) + " must be square, got " +
                       std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()));
  }
}

}  // namespace

void require_finite(const Matrix& m, const char* what) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw InvalidInput(std::string(what) + " is empty");
  }
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + " has non-finite entries");
  }
}

SymmetricMatrix::SymmetricMatrix(const Matrix& s) {
  require_finite(s, "symmetric matrix");
  require_square(s, "symmetric matrix");
  const double asym = max_abs(s - s.transpose());
  if (asym > kSymmetryTol * (1.0 + max_abs(s))) {
    throw InvalidInput("matrix is not symmetric (max |S - S^T| = " +
                       std::to_string(asym) + ")");
  }
  m_ = 0.5 * (s + s.transpose());
}

SymmetricMatrix SymmetricMatrix::symmetrize(const Matrix& s) {
  require_finite(s, "symmetric matrix");
  require_square(s, "symmetric matrix");
  return SymmetricMatrix(0.5 * (s + s.transpose()), Unchecked{});
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index order) {
  return SymmetricMatrix(Matrix::Identity(order, order), Unchecked{});
}

SymmetricMatrix SymmetricMatrix::zero(Eigen::Index order) {
  return SymmetricMatrix(Matrix::Zero(order, order), Unchecked{});
}

SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return SymmetricMatrix(a.m_ + b.m_, SymmetricMatrix::Unchecked{});
}

SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return SymmetricMatrix(a.m_ - b.m_, SymmetricMatrix::Unchecked{});
}

SymmetricMatrix operator*(double s, const SymmetricMatrix& a) {
  return SymmetricMatrix(s * a.m_, SymmetricMatrix::Unchecked{});
}

SymmetricEigen eig_sym(const SymmetricMatrix& s) {
  require_finite(s.matrix(), "eig_sym input");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix());
  if (solver.info() != Eigen::Success) {
    throw InvalidInput("symmetric eigen-decomposition did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double min_eig(const SymmetricMatrix& s) { return eig_sym(s).values(0); }

double max_eig(const SymmetricMatrix& s) {
  const auto e = eig_sym(s);
  return e.values(e.values.size() - 1);
}

double spectral_norm(const Matrix& m) {
  require_finite(m, "spectral_norm input");
  // sqrt(max_eig(MᵀM)), taken from the singular values for accuracy.
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double frobenius_norm(const Matrix& m) {
  require_finite(m, "frobenius_norm input");
  return m.norm();
}

bool is_positive_definite(const SymmetricMatrix& s, double tol) {
  if (tol < 0) throw InvalidInput("tolerance must be non-negative");
  return min_eig(s) > tol * (1.0 + max_abs(s.matrix()));
}

double lyapunov_residual(const Matrix& f, const Matrix& g, const Matrix& x,
                         const Matrix& rhs) {
  return (f.transpose() * x + x * f + g.transpose() * x * g + rhs).norm();
}

SymmetricMatrix kron_vec_solve(const Matrix& f, const Matrix& g,
                               const SymmetricMatrix& rhs) {
  require_finite(f, "F");
  require_finite(g, "G");
  require_square(f, "F");
  require_square(g, "G");
  const Eigen::Index n = f.rows();
  if (g.rows() != n || rhs.order() != n) {
    throw InvalidInput("Lyapunov operands have mismatched orders");
  }

  const Eigen::Index n2 = n * n;
  const Matrix ft = f.transpose();
  const Matrix gt = g.transpose();
  // Column-major vec: vec(FᵀX) = (I⊗Fᵀ)vec X, vec(XF) = (Fᵀ⊗I)vec X,
  // vec(GᵀXG) = (Gᵀ⊗Gᵀ)vec X.
  Matrix op = Matrix::Zero(n2, n2);
  for (Eigen::Index i = 0; i < n; ++i) {
    op.block(i * n, i * n, n, n) += ft;
    for (Eigen::Index j = 0; j < n; ++j) {
      op.block(i * n, j * n, n, n).diagonal().array() += ft(i, j);
      op.block(i * n, j * n, n, n) += gt(i, j) * gt;
    }
  }

  Eigen::PartialPivLU<Matrix> lu(op);
  const double rcond = lu.rcond();
  if (!(rcond >= kMinRcond)) {
    throw SingularOperator("Lyapunov operator is numerically singular (rcond " +
                           std::to_string(rcond) + ")");
  }

  const Vector b = -Eigen::Map<const Vector>(rhs.matrix().data(), n2);
  Vector x = lu.solve(b);
  // One step of iterative refinement tightens the residual on
  // moderately conditioned operators.
  x += lu.solve(b - op * x);

  Matrix sol = Eigen::Map<const Matrix>(x.data(), n, n);
  if (!sol.allFinite()) {
    throw SingularOperator("Lyapunov solve produced non-finite entries");
  }
  const double scale = 1.0 + max_abs(sol);
  if (max_abs(sol - sol.transpose()) > kDriftTol * scale) {
    throw SingularOperator("Lyapunov solution lost symmetry beyond round-off");
  }
  sol = 0.5 * (sol + sol.transpose());

  const double rhs_norm = rhs.matrix().norm();
  const double res = lyapunov_residual(f, g, sol, rhs.matrix());
  if (res > kResidualTol * (1.0 + rhs_norm)) {
    throw SingularOperator("Lyapunov residual " + std::to_string(res) +
                           " exceeds tolerance");
  }
  return SymmetricMatrix::symmetrize(sol);
}

}  // namespace slq
