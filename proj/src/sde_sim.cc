#include "slq/sde_sim.h"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "slq/errors.h"
#include "slq/lyapunov.h"
#include "slq/philox.h"

namespace slq {
namespace {

constexpr double kOverflowLimit = 1e12;
constexpr std::uint32_t kInitialDomain = 0x80000000u;

Philox4x32::Counter counter(std::uint64_t pair, std::uint64_t path,
                            std::uint32_t domain) {
  return {static_cast<std::uint32_t>(pair),
          static_cast<std::uint32_t>(pair >> 32),
          static_cast<std::uint32_t>(path),
          static_cast<std::uint32_t>(path >> 32) | domain};
}

// Euler–Maruyama integrator for one closed loop; row-major flat buffers keep
// the inner loop allocation-free.
class PathKernel {
 public:
  PathKernel(const SystemModel& model, const Matrix& k, const SimConfig& cfg)
      : n_(static_cast<std::size_t>(model.states())),
        steps_(cfg.steps()),
        dt_(cfg.dt),
        rng_(cfg.seed),
        drift_(n_ * n_),
        diffusion_(n_ * n_),
        sampler_(cfg.initial_sampler) {
    const Matrix a_cl = model.a + model.b * k;
    const Matrix c_cl = model.c + model.d * k;
    const double sqrt_dt = std::sqrt(cfg.dt);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const auto ei = static_cast<Eigen::Index>(i);
        const auto ej = static_cast<Eigen::Index>(j);
        drift_[i * n_ + j] = (i == j ? 1.0 : 0.0) + a_cl(ei, ej) * cfg.dt;
        diffusion_[i * n_ + j] = c_cl(ei, ej) * sqrt_dt;
      }
    }
    if (const auto* fixed = std::get_if<sampler::FixedVector>(&sampler_)) {
      if (static_cast<std::size_t>(fixed->x0.size()) != n_) {
        throw InvalidInput("fixed initial vector has the wrong dimension");
      }
    } else {
      Eigen::LLT<Matrix> llt(model.sigma0.matrix());
      chol_ = llt.matrixL();
    }
  }

  std::size_t order() const { return n_; }
  std::size_t steps() const { return steps_; }
  double dt() const { return dt_; }

  void initial_state(std::uint64_t path, double* x) const {
    if (const auto* fixed = std::get_if<sampler::FixedVector>(&sampler_)) {
      for (std::size_t i = 0; i < n_; ++i) x[i] = fixed->x0(static_cast<Eigen::Index>(i));
      return;
    }
    std::vector<double> z(n_);
    for (std::size_t j = 0; j < n_; j += 2) {
      const auto [z0, z1] = normal_pair(rng_(counter(j / 2, path, kInitialDomain)));
      z[j] = z0;
      if (j + 1 < n_) z[j + 1] = z1;
    }
    for (std::size_t i = 0; i < n_; ++i) {
      double acc = 0;
      for (std::size_t j = 0; j <= i; ++j) {
        acc += chol_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * z[j];
      }
      x[i] = acc;
    }
  }

  // Runs one path; `visit(step_index, x)` sees the state before each step
  // and once more (with step_index == steps) at the horizon. Returns false
  // on overflow.
  template <typename Visit>
  bool run(std::uint64_t path, Visit&& visit) const {
    std::vector<double> x(n_), drift(n_), noise(n_);
    initial_state(path, x.data());
    std::pair<double, double> normals{0, 0};
    for (std::size_t i = 0; i < steps_; ++i) {
      visit(i, x.data());
      if ((i & 1) == 0) normals = normal_pair(rng_(counter(i / 2, path, 0)));
      const double xi = (i & 1) == 0 ? normals.first : normals.second;
      double peak = 0;
      for (std::size_t r = 0; r < n_; ++r) {
        double d = 0, s = 0;
        const double* drow = &drift_[r * n_];
        const double* srow = &diffusion_[r * n_];
        for (std::size_t c = 0; c < n_; ++c) {
          d += drow[c] * x[c];
          s += srow[c] * x[c];
        }
        drift[r] = d + xi * s;
        peak = std::max(peak, std::abs(drift[r]));
      }
      if (!(peak <= kOverflowLimit)) return false;
      x.swap(drift);
    }
    visit(steps_, x.data());
    return true;
  }

 private:
  std::size_t n_;
  std::size_t steps_;
  double dt_;
  Philox4x32 rng_;
  std::vector<double> drift_;
  std::vector<double> diffusion_;
  Matrix chol_;
  InitialSampler sampler_;
};

unsigned worker_count(const SimConfig& cfg) {
  unsigned t = cfg.threads != 0 ? cfg.threads : std::thread::hardware_concurrency();
  t = std::max(1u, t);
  return static_cast<unsigned>(std::min<std::size_t>(t, cfg.paths));
}

// Runs `body(path)` for every path over worker threads. body returns false
// on overflow.
template <typename Body>
void for_each_path(const SimConfig& cfg, Body&& body) {
  const unsigned workers = worker_count(cfg);
  std::atomic<bool> overflow{false};
  auto chunk = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end && !overflow.load(std::memory_order_relaxed); ++p) {
      if (!body(p)) overflow = true;
    }
  };
  if (workers == 1) {
    chunk(0, cfg.paths);
  } else {
    std::vector<std::thread> pool;
    const std::size_t per = (cfg.paths + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * per;
      const std::size_t end = std::min(cfg.paths, begin + per);
      if (begin < end) pool.emplace_back(chunk, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (overflow) {
    throw Overflow("a simulated path exceeded 1e12 in magnitude (unstable "
                   "closed loop or dt too coarse)");
  }
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0)) throw InvalidInput("dt must be positive");
  if (!(horizon >= 10 * dt)) throw InvalidInput("horizon must be >= 10 dt");
  if (paths < 1) throw InvalidInput("paths must be >= 1");
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

double pairwise_sum(const double* values, std::size_t count) {
  if (count <= 8) {
    double s = 0;
    for (std::size_t i = 0; i < count; ++i) s += values[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

double path_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step) {
  const auto [z0, z1] = normal_pair(Philox4x32(seed)(counter(step / 2, path, 0)));
  return (step & 1) == 0 ? z0 : z1;
}

SimEstimate estimate_cost(const SystemModel& model, const CostWeights& weights,
                          const Matrix& k, const SimConfig& cfg) {
  cfg.validate();
  const PathKernel kernel(model, k, cfg);
  const std::size_t n = kernel.order();
  const Matrix w = weights.q.matrix() + k.transpose() * weights.r.matrix() * k;
  std::vector<double> w_flat(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      w_flat[i * n + j] = w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }

  std::vector<double> costs(cfg.paths), terminal(cfg.paths);
  const std::size_t steps = kernel.steps();
  const double dt = kernel.dt();
  for_each_path(cfg, [&](std::size_t p) {
    double acc = 0;
    double tail = 0;
    const bool ok = kernel.run(p, [&](std::size_t i, const double* x) {
      if (i == steps) {
        double s = 0;
        for (std::size_t r = 0; r < n; ++r) s += x[r] * x[r];
        tail = s;
        return;
      }
      double q = 0;
      for (std::size_t r = 0; r < n; ++r) {
        double row = 0;
        for (std::size_t c = 0; c < n; ++c) row += w_flat[r * n + c] * x[c];
        q += x[r] * row;
      }
      acc += q * dt;
    });
    costs[p] = acc;
    terminal[p] = tail;
    return ok;
  });

  SimEstimate est;
  est.paths_used = cfg.paths;
  const double count = static_cast<double>(cfg.paths);
  est.cost_mean = pairwise_sum(costs.data(), costs.size()) / count;
  est.terminal_second_moment = pairwise_sum(terminal.data(), terminal.size()) / count;
  if (cfg.paths > 1) {
    for (double& c : costs) c = (c - est.cost_mean) * (c - est.cost_mean);
    const double var = pairwise_sum(costs.data(), costs.size()) / (count - 1.0);
    est.cost_stderr = std::sqrt(var / count);
  }
  const auto check = is_stabilizer(model, k);
  est.tail_bound = check.stabilizing
                       ? est.terminal_second_moment * spectral_norm(w) *
                             max_eig(*check.certificate)
                       : std::numeric_limits<double>::infinity();
  return est;
}

DecayCurve mean_square_decay(const SystemModel& model, const Matrix& k,
                             const SimConfig& cfg, std::size_t grid_points) {
  cfg.validate();
  if (grid_points < 2) throw InvalidInput("decay curve needs >= 2 grid points");
  const PathKernel kernel(model, k, cfg);
  const std::size_t n = kernel.order();
  const std::size_t steps = kernel.steps();
  grid_points = std::min(grid_points, steps + 1);

  // Step index of each grid time; strictly increasing because
  // grid_points <= steps + 1.
  std::vector<std::size_t> at(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) {
    at[g] = static_cast<std::size_t>(std::llround(
        static_cast<double>(g) * static_cast<double>(steps) /
        static_cast<double>(grid_points - 1)));
  }

  // Column-major: samples[g * paths + p].
  std::vector<double> samples(grid_points * cfg.paths);
  for_each_path(cfg, [&](std::size_t p) {
    std::size_t next = 0;
    return kernel.run(p, [&](std::size_t i, const double* x) {
      if (next < grid_points && at[next] == i) {
        double s = 0;
        for (std::size_t r = 0; r < n; ++r) s += x[r] * x[r];
        samples[next * cfg.paths + p] = s;
        ++next;
      }
    });
  });

  DecayCurve curve;
  curve.times.resize(grid_points);
  curve.second_moment.resize(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) {
    curve.times[g] = static_cast<double>(at[g]) * cfg.dt;
    curve.second_moment[g] =
        pairwise_sum(&samples[g * cfg.paths], cfg.paths) /
        static_cast<double>(cfg.paths);
  }
  return curve;
}

}  // namespace slq
