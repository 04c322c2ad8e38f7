#pragma once

// Monte Carlo simulation of dX = A_K X dt + C_K X dB (scalar Brownian motion)
// by Euler–Maruyama.
//
// Random-stream contract: the standard normal used for path p at Euler step
// i is a pure function of (seed, p, i). Steps are paired: Philox4x32-10 with
// key = seed and counter = {i/2 low, i/2 high, p low, p high} yields one
// block, Box–Muller turns it into two normals, and step i takes component
// i mod 2. The initial state of path p draws from counter
// {j/2 low, j/2 high, p low, (p high) | 0x80000000} for components j.
// Results therefore do not depend on how paths are scheduled over threads.
//
// The only distributional assumption: X(0) is zero-mean Gaussian with
// covariance Σ₀ unless a fixed initial vector is supplied. The analytic cost
// depends on X(0) only through Σ₀.

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "slq/model.h"

namespace slq {

namespace sampler {
struct GaussianSigma0 {};
struct FixedVector {
  Vector x0;
};
}  // namespace sampler

using InitialSampler = std::variant<sampler::GaussianSigma0, sampler::FixedVector>;

struct SimConfig {
  double horizon = 20.0;
  double dt = 1e-3;
  std::size_t paths = 20000;
  std::uint64_t seed = 20240501;
  InitialSampler initial_sampler = sampler::GaussianSigma0{};
  // 0 means one worker per hardware thread.
  unsigned threads = 0;

  void validate() const;
  std::size_t steps() const;
};

struct SimEstimate {
  double cost_mean = 0;
  double cost_stderr = 0;
  double terminal_second_moment = 0;  // mean of ‖X(T)‖²
  std::size_t paths_used = 0;
  // Bound on the expected cost beyond the horizon:
  // terminal_second_moment · ‖Q + KᵀRK‖ · λ_max(P_I), where P_I is the
  // Λ = I stabilizer certificate (1/λ_max(P_I) is the decay margin of
  // E[XᵀP_I X]). Infinite when K is not a verified stabilizer.
  double tail_bound = 0;
};

struct DecayCurve {
  std::vector<double> times;
  std::vector<double> second_moment;  // mean ‖X(t)‖²

  double ratio() const { return second_moment.back() / second_moment.front(); }
};

/// Throws Overflow if any path exceeds 1e12 in magnitude.
SimEstimate estimate_cost(const SystemModel& model, const CostWeights& weights,
                          const Matrix& k, const SimConfig& cfg);

/// E‖X(t)‖² sampled at `grid_points` evenly spaced times in [0, horizon]
/// (both ends included).
DecayCurve mean_square_decay(const SystemModel& model, const Matrix& k,
                             const SimConfig& cfg,
                             std::size_t grid_points = 101);

/// Deterministic pairwise (cascade) summation.
double pairwise_sum(const double* values, std::size_t count);

/// Standard normal for path `path`, Euler step `step` under `seed`.
double path_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step);

}  // namespace slq
