#include "slq/problem_io.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "slq/errors.h"

#ifndef SLQ_DATA_DIR
#define SLQ_DATA_DIR "data"
#endif

namespace slq {
namespace {

using nlohmann::json;

std::string quoted(const std::string& field) { return "\"" + field + "\""; }

const json& require(const json& obj, const std::string& field) {
  const auto it = obj.find(field);
  if (it == obj.end()) {
    throw ValidationError("missing field " + quoted(field));
  }
  return *it;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) {
    throw ValidationError("field " + quoted(field) + " must be a number");
  }
  return v.get<double>();
}

std::size_t count(const json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ValidationError("field " + quoted(field) +
                          " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

Matrix matrix(const json& v, Eigen::Index rows, Eigen::Index cols,
              const std::string& field) {
  auto shape_error = [&](const std::string& got) {
    return ValidationError("field " + quoted(field) + " has shape " + got +
                           ", expected " + std::to_string(rows) + "x" +
                           std::to_string(cols));
  };
  if (!v.is_array()) {
    throw ValidationError("field " + quoted(field) + " must be a nested array");
  }
  if (static_cast<Eigen::Index>(v.size()) != rows) {
    const std::string inner =
        !v.empty() && v[0].is_array() ? std::to_string(v[0].size()) : "?";
    throw shape_error(std::to_string(v.size()) + "x" + inner);
  }
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array()) {
      throw ValidationError("field " + quoted(field) + " row " +
                            std::to_string(i) + " must be an array");
    }
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw shape_error(std::to_string(rows) + "x" + std::to_string(row.size()));
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = number(row[static_cast<std::size_t>(j)], field);
    }
  }
  if (!out.allFinite()) {
    throw ValidationError("field " + quoted(field) + " has non-finite entries");
  }
  return out;
}

SymmetricMatrix symmetric(const json& v, Eigen::Index order,
                          const std::string& field, bool require_pd) {
  const Matrix m = matrix(v, order, order, field);
  SymmetricMatrix s;
  try {
    s = SymmetricMatrix(m);
  } catch (const InvalidInput&) {
    throw ValidationError("field " + quoted(field) + " is not symmetric");
  }
  if (require_pd && !is_positive_definite(s, kDefaultPdTol)) {
    throw ValidationError(field + " not positive-definite");
  }
  return s;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

OptimizerConfig parse_optimizer(const json& o) {
  if (!o.is_object()) throw ValidationError("field \"optimizer\" must be an object");
  OptimizerConfig cfg;
  const std::string step = o.value("step", std::string("bb"));
  if (step == "bb") {
    cfg.step_rule = step::BarzilaiBorwein{};
  } else if (step == "two-over-l") {
    cfg.step_rule = step::TwoOverL{};
  } else if (step == "fixed") {
    cfg.step_rule = step::Fixed{number(require(o, "alpha"), "optimizer.alpha")};
  } else {
    throw ValidationError("field \"optimizer.step\" must be bb, fixed or two-over-l");
  }
  if (o.contains("gamma")) cfg.gamma = number(o["gamma"], "optimizer.gamma");
  if (o.contains("tol")) cfg.tol = number(o["tol"], "optimizer.tol");
  if (o.contains("max_iter")) cfg.max_iter = count(o["max_iter"], "optimizer.max_iter");
  if (o.contains("alpha0")) cfg.alpha0 = number(o["alpha0"], "optimizer.alpha0");
  if (o.contains("alpha_max")) cfg.alpha_max = number(o["alpha_max"], "optimizer.alpha_max");
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw ValidationError(std::string("optimizer: ") + e.what());
  }
  return cfg;
}

json optimizer_json(const OptimizerConfig& cfg) {
  json o;
  o["step"] = step_rule_name(cfg.step_rule);
  if (const auto* f = std::get_if<step::Fixed>(&cfg.step_rule)) o["alpha"] = f->alpha;
  o["gamma"] = cfg.gamma;
  o["tol"] = cfg.tol;
  o["max_iter"] = cfg.max_iter;
  if (cfg.alpha0) o["alpha0"] = *cfg.alpha0;
  o["alpha_max"] = cfg.alpha_max;
  return o;
}

SimConfig parse_simulation(const json& s, Eigen::Index n) {
  if (!s.is_object()) throw ValidationError("field \"simulation\" must be an object");
  SimConfig cfg;
  if (s.contains("horizon")) cfg.horizon = number(s["horizon"], "simulation.horizon");
  if (s.contains("dt")) cfg.dt = number(s["dt"], "simulation.dt");
  if (s.contains("paths")) cfg.paths = count(s["paths"], "simulation.paths");
  if (s.contains("seed")) cfg.seed = count(s["seed"], "simulation.seed");
  if (s.contains("x0")) {
    const Matrix x0 = matrix(json::array({s["x0"]}), 1, n, "simulation.x0");
    cfg.initial_sampler = sampler::FixedVector{x0.row(0).transpose()};
  }
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw ValidationError(std::string("simulation: ") + e.what());
  }
  return cfg;
}

json simulation_json(const SimConfig& cfg) {
  json s;
  s["horizon"] = cfg.horizon;
  s["dt"] = cfg.dt;
  s["paths"] = cfg.paths;
  s["seed"] = cfg.seed;
  if (const auto* f = std::get_if<sampler::FixedVector>(&cfg.initial_sampler)) {
    s["x0"] = to_json(f->x0.transpose())[0];
  }
  return s;
}

bool same_optimizer(const OptimizerConfig& x, const OptimizerConfig& y) {
  const auto alpha = [](const OptimizerConfig& c) {
    const auto* f = std::get_if<step::Fixed>(&c.step_rule);
    return f ? f->alpha : 0.0;
  };
  return x.step_rule.index() == y.step_rule.index() && alpha(x) == alpha(y) &&
         x.gamma == y.gamma && x.tol == y.tol && x.max_iter == y.max_iter &&
         x.alpha0 == y.alpha0 && x.alpha_max == y.alpha_max;
}

bool same_simulation(const SimConfig& x, const SimConfig& y) {
  const auto* fx = std::get_if<sampler::FixedVector>(&x.initial_sampler);
  const auto* fy = std::get_if<sampler::FixedVector>(&y.initial_sampler);
  const bool same_sampler = (!fx && !fy) || (fx && fy && fx->x0 == fy->x0);
  return x.horizon == y.horizon && x.dt == y.dt && x.paths == y.paths &&
         x.seed == y.seed && same_sampler;
}

}  // namespace

SystemModel ProblemDocument::model() const { return SystemModel(a, b, c, d, sigma0); }

CostWeights ProblemDocument::weights() const { return CostWeights(q, r); }

bool operator==(const ProblemDocument& x, const ProblemDocument& y) {
  const bool opt =
      x.optimizer.has_value() == y.optimizer.has_value() &&
      (!x.optimizer || same_optimizer(*x.optimizer, *y.optimizer));
  const bool sim =
      x.simulation.has_value() == y.simulation.has_value() &&
      (!x.simulation || same_simulation(*x.simulation, *y.simulation));
  return x.name == y.name && x.n == y.n && x.m == y.m && x.a == y.a &&
         x.b == y.b && x.c == y.c && x.d == y.d &&
         x.q.matrix() == y.q.matrix() && x.r.matrix() == y.r.matrix() &&
         x.sigma0.matrix() == y.sigma0.matrix() && x.k0 == y.k0 && opt && sim;
}

ProblemDocument parse_problem_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a 1-based line/column.
    std::size_t line = 1, column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("malformed JSON at line " + std::to_string(line) +
                     ", column " + std::to_string(column) + ": " + e.what());
  }
  if (!root.is_object()) throw ValidationError("document root must be an object");

  ProblemDocument doc;
  doc.name = root.value("name", std::string{});
  const std::size_t n = count(require(root, "n"), "n");
  const std::size_t m = count(require(root, "m"), "m");
  if (n < 1 || m < 1) throw ValidationError("fields \"n\" and \"m\" must be >= 1");
  doc.n = static_cast<Eigen::Index>(n);
  doc.m = static_cast<Eigen::Index>(m);
  doc.a = matrix(require(root, "a"), doc.n, doc.n, "a");
  doc.b = matrix(require(root, "b"), doc.n, doc.m, "b");
  doc.c = matrix(require(root, "c"), doc.n, doc.n, "c");
  doc.d = matrix(require(root, "d"), doc.n, doc.m, "d");
  doc.q = symmetric(require(root, "q"), doc.n, "q", true);
  doc.r = symmetric(require(root, "r"), doc.m, "r", true);
  doc.sigma0 = symmetric(require(root, "sigma0"), doc.n, "sigma0", true);
  doc.k0 = matrix(require(root, "k0"), doc.m, doc.n, "k0");
  if (root.contains("optimizer")) doc.optimizer = parse_optimizer(root["optimizer"]);
  if (root.contains("simulation")) {
    doc.simulation = parse_simulation(root["simulation"], doc.n);
  }
  return doc;
}

ProblemDocument parse_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read problem file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str());
}

std::string write_problem(const ProblemDocument& doc) {
  json root;
  if (!doc.name.empty()) root["name"] = doc.name;
  root["n"] = doc.n;
  root["m"] = doc.m;
  root["a"] = to_json(doc.a);
  root["b"] = to_json(doc.b);
  root["c"] = to_json(doc.c);
  root["d"] = to_json(doc.d);
  root["q"] = to_json(doc.q.matrix());
  root["r"] = to_json(doc.r.matrix());
  root["sigma0"] = to_json(doc.sigma0.matrix());
  root["k0"] = to_json(doc.k0);
  if (doc.optimizer) root["optimizer"] = optimizer_json(*doc.optimizer);
  if (doc.simulation) root["simulation"] = simulation_json(*doc.simulation);
  return root.dump(2) + "\n";
}

std::filesystem::path resolve_problem_path(const std::string& name_or_path) {
  const std::filesystem::path direct(name_or_path);
  if (std::filesystem::exists(direct)) return direct;
  const std::filesystem::path bundled =
      std::filesystem::path(SLQ_DATA_DIR) / (name_or_path + ".json");
  if (std::filesystem::exists(bundled)) return bundled;
  throw ValidationError("no problem document at " + name_or_path +
                        " and no bundled document named " + name_or_path);
}

}  // namespace slq
