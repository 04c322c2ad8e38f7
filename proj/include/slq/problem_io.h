#pragma once

// JSON problem documents: system, weights, initial gain and optional
// optimizer / simulation settings.
//
// {
//   "name": "slq_sec5",                       (optional)
//   "n": 2, "m": 1,
//   "a": [[..],[..]], "b": .., "c": .., "d": ..,
//   "q": .., "r": .., "sigma0": .., "k0": [[..]],
//   "optimizer": {"step": "bb"|"fixed"|"two-over-l", "alpha": .., "gamma": ..,
//                 "tol": .., "max_iter": .., "alpha0": .., "alpha_max": ..},
//   "simulation": {"horizon": .., "dt": .., "paths": .., "seed": ..,
//                  "x0": [..]}              (x0 selects the fixed sampler)
// }

#include <filesystem>
#include <optional>
#include <string>

#include "slq/model.h"
#include "slq/optimize.h"
#include "slq/sde_sim.h"

namespace slq {

struct ProblemDocument {
  std::string name;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Matrix a, b, c, d;
  SymmetricMatrix q, r, sigma0;
  Matrix k0;
  std::optional<OptimizerConfig> optimizer;
  std::optional<SimConfig> simulation;

  SystemModel model() const;
  CostWeights weights() const;

  friend bool operator==(const ProblemDocument& x, const ProblemDocument& y);
};

/// Throws ParseError (with line and column) on malformed JSON and
/// ValidationError naming the field on schema or definiteness failures.
ProblemDocument parse_problem_text(const std::string& text);
ProblemDocument parse_problem(const std::filesystem::path& path);

std::string write_problem(const ProblemDocument& doc);

/// Resolves a --config argument: an existing path, or the name of a bundled
/// document under the data directory ("slq_sec5" -> data/slq_sec5.json).
std::filesystem::path resolve_problem_path(const std::string& name_or_path);

}  // namespace slq
