#pragma once

#include <initializer_list>

#include "slq/model.h"
#include "slq/problem_io.h"

namespace slq::testing {

inline Matrix mat(Eigen::Index rows, Eigen::Index cols,
                  std::initializer_list<double> row_major) {
  Matrix m(rows, cols);
  auto it = row_major.begin();
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

inline SymmetricMatrix sym(Eigen::Index n, std::initializer_list<double> row_major) {
  return SymmetricMatrix(mat(n, n, row_major));
}

/// The two-state, one-input benchmark shipped as data/slq_sec5.json.
inline ProblemDocument benchmark() {
  return parse_problem(resolve_problem_path("slq_sec5"));
}

/// Printed optimum of the benchmark (four decimals).
inline Matrix benchmark_k_star() { return mat(1, 2, {-8.3854, 4.7642}); }
inline Matrix benchmark_p_star() {
  return mat(2, 2, {61.1422, -35.7578, -35.7578, 81.6610});
}

/// dx = (a x + b u)dt + (c x + d u)dB with scalar weights.
inline SystemModel scalar_model(double a, double b, double c, double d,
                                double sigma0 = 1.0) {
  return SystemModel(mat(1, 1, {a}), mat(1, 1, {b}), mat(1, 1, {c}),
                     mat(1, 1, {d}), sym(1, {sigma0}));
}

inline CostWeights scalar_weights(double q = 1.0, double r = 1.0) {
  return CostWeights(sym(1, {q}), sym(1, {r}));
}

/// Two-input system whose two stabilizers have an unstable midpoint.
inline SystemModel nonconvex_model() {
  return parse_problem(resolve_problem_path("nonconvex_midpoint")).model();
}
inline Matrix nonconvex_k1() { return mat(2, 2, {-1, 1, 0, 3}); }
inline Matrix nonconvex_k2() { return mat(2, 2, {-9, 4, -10, 5}); }
inline Matrix nonconvex_midpoint() { return mat(2, 2, {-5, 2.5, -5, 4}); }

}  // namespace slq::testing
