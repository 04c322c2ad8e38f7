#include "slq/lyapunov.h"

#include "slq/errors.h"

namespace slq {

ClosedLoop::ClosedLoop(Matrix a, Matrix c) : a_cl(std::move(a)), c_cl(std::move(c)) {
  require_finite(a_cl, "A_K");
  require_finite(c_cl, "C_K");
  if (a_cl.rows() != a_cl.cols() || c_cl.rows() != c_cl.cols() ||
      a_cl.rows() != c_cl.rows()) {
    throw InvalidInput("closed-loop matrices must be square of equal order");
  }
}

ClosedLoop ClosedLoop::of(const SystemModel& model, const Matrix& k) {
  if (k.rows() != model.inputs() || k.cols() != model.states()) {
    throw InvalidInput("gain shape does not match the model");
  }
  return ClosedLoop(model.a + model.b * k, model.c + model.d * k);
}

SymmetricMatrix solve_primal(const ClosedLoop& loop,
                             const SymmetricMatrix& lambda) {
  return kron_vec_solve(loop.a_cl, loop.c_cl, lambda);
}

SymmetricMatrix solve_dual(const ClosedLoop& loop, const SymmetricMatrix& v) {
  // Transposing the closed loop turns the dual equation into the primal form.
  return kron_vec_solve(loop.a_cl.transpose(), loop.c_cl.transpose(), v);
}

LyapunovCertificate certify(const ClosedLoop& loop,
                            const SymmetricMatrix& lambda,
                            const SymmetricMatrix& v) {
  LyapunovCertificate cert{solve_primal(loop, lambda), solve_dual(loop, v)};
  cert.primal_residual =
      lyapunov_residual(loop.a_cl, loop.c_cl, cert.p.matrix(), lambda.matrix());
  cert.dual_residual = lyapunov_residual(loop.a_cl.transpose(),
                                         loop.c_cl.transpose(),
                                         cert.y.matrix(), v.matrix());
  return cert;
}

StabilizerCheck is_stabilizer(const SystemModel& model, const Matrix& k,
                              double tol) {
  StabilizerCheck out;
  try {
    const auto loop = ClosedLoop::of(model, k);
    out.certificate =
        solve_primal(loop, SymmetricMatrix::identity(model.states()));
  } catch (const SingularOperator&) {
    return out;
  }
  const auto& p = *out.certificate;
  const double scale = tol * (1.0 + p.matrix().cwiseAbs().maxCoeff());
  const double lo = min_eig(p);
  out.stabilizing = lo > scale;
  out.marginal = std::abs(lo) <= scale;
  return out;
}

}  // namespace slq
