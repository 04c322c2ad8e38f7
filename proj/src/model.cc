#include "slq/model.h"

#include <string>

#include "slq/errors.h"
#include "slq/lyapunov.h"

namespace slq {
namespace {

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                   const char* field) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ValidationError(std::string("field \"") + field + "\" has shape " +
                          std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!m.allFinite()) {
    throw ValidationError(std::string("field \"") + field +
                          "\" has non-finite entries");
  }
}

void require_pd(const SymmetricMatrix& s, const char* field) {
  if (!is_positive_definite(s, kDefaultPdTol)) {
    throw ValidationError(std::string(field) + " not positive-definite");
  }
}

}  // namespace

SystemModel::SystemModel(Matrix a_in, Matrix b_in, Matrix c_in, Matrix d_in,
                         SymmetricMatrix sigma0_in)
    : a(std::move(a_in)),
      b(std::move(b_in)),
      c(std::move(c_in)),
      d(std::move(d_in)),
      sigma0(std::move(sigma0_in)) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (n < 1 || m < 1) throw ValidationError("model dimensions must be >= 1");
  require_shape(a, n, n, "a");
  require_shape(b, n, m, "b");
  require_shape(c, n, n, "c");
  require_shape(d, n, m, "d");
  require_shape(sigma0.matrix(), n, n, "sigma0");
  require_pd(sigma0, "sigma0");
}

CostWeights::CostWeights(SymmetricMatrix q_in, SymmetricMatrix r_in)
    : q(std::move(q_in)), r(std::move(r_in)) {
  if (q.order() < 1 || r.order() < 1) {
    throw ValidationError("cost weights must be non-empty");
  }
  require_pd(q, "q");
  require_pd(r, "r");
}

Gain Gain::verify(const SystemModel& model, const Matrix& k, double tol) {
  if (k.rows() != model.inputs() || k.cols() != model.states()) {
    throw InvalidInput("gain has shape " + std::to_string(k.rows()) + "x" +
                       std::to_string(k.cols()) + ", expected " +
                       std::to_string(model.inputs()) + "x" +
                       std::to_string(model.states()));
  }
  const auto check = is_stabilizer(model, k, tol);
  if (!check.stabilizing) {
    throw NotStabilizing(check.marginal
                             ? "gain is marginally mean-square stabilizing"
                             : "gain is not mean-square stabilizing");
  }
  return Gain(k, true);
}

Gain Gain::unverified(const Matrix& k) {
  require_finite(k, "gain");
  return Gain(k, false);
}

}  // namespace slq
