#include "slq/cli.h"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <variant>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "slq/errors.h"
#include "slq/lyapunov.h"
#include "slq/policy_gradient.h"
#include "slq/problem_io.h"
#include "slq/sde_sim.h"
#include "slq/verification.h"

namespace slq {
namespace {

std::string format_matrix(const Matrix& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s += i ? ", [" : "[";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      s += fmt::format("{}{:.10g}", j ? ", " : "", m(i, j));
    }
    s += "]";
  }
  return s + "]";
}

std::string format_violations(const std::vector<Violation>& v) {
  if (v.empty()) return "none";
  std::string s;
  for (const auto& x : v) {
    s += fmt::format("{}{}@{} ({:.6g} > {:.6g})", s.empty() ? "" : "; ", x.name,
                     x.index, x.lhs, x.rhs);
  }
  return s;
}

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::string report_path;
};

// Unset fields fall back to the document's settings, then to the defaults.
struct DescendFlags {
  std::optional<std::string> step;
  std::optional<double> alpha;
  std::optional<double> tol;
  std::optional<double> gamma;
  std::optional<std::size_t> max_iter;
  std::optional<double> alpha0;
  std::optional<double> alpha_max;
  std::optional<double> step_floor;
  std::string trace_path;
  bool no_oracle = false;
};

struct FlowFlags {
  FlowConfig cfg;
  std::string trace_path;
  bool no_oracle = false;
};

struct SimulateFlags {
  std::optional<double> horizon;
  std::optional<double> dt;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool at_optimum = false;
};

struct VerifyFlags {
  std::size_t random_instances = 100;
  std::uint64_t seed = 7;
};

// Key/value report that goes to stdout and, optionally, a file.
class Report {
 public:
  void add(const std::string& key, const std::string& value) {
    text_ += key + ": " + value + "\n";
  }
  void emit(std::ostream& out, const std::string& path) const {
    out << text_;
    if (!path.empty()) {
      std::ofstream f(path);
      if (!f) throw ValidationError("cannot write report file " + path);
      f << text_;
    }
  }

 private:
  std::string text_;
};

std::string default_trace_path(const ProblemDocument& doc, const char* cmd) {
  return fmt::format("{}_{}_trace.csv", doc.name.empty() ? "problem" : doc.name,
                     cmd);
}

void write_trace_file(const DescentReport& r, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write trace file " + path);
  write_trace_csv(r, f);
}

void summarize(Report& rep, const DescentReport& r) {
  rep.add("converged", r.converged ? "true" : "false");
  rep.add("records", std::to_string(r.trace.size()));
  rep.add("iterations", std::to_string(r.final.iterations));
  rep.add("final_k", format_matrix(r.final.k_star.k()));
  rep.add("final_p", format_matrix(r.final.p_star.matrix()));
  rep.add("final_cost", fmt::format("{:.12g}", r.final.cost_star));
  rep.add("grad_norm", fmt::format("{:.6g}", r.final.grad_norm));
  if (r.oracle_cost) {
    rep.add("oracle_cost", fmt::format("{:.12g}", *r.oracle_cost));
    if (const auto& e = r.trace.back().rel_error) {
      rep.add("rel_error", fmt::format("{:.6g}", *e));
    }
  }
  rep.add("certificate_violations", format_violations(r.certificate_violations));
}

std::optional<double> oracle_cost(const ProblemDocument& doc, const Gain& k0,
                                  bool skip) {
  if (skip) return std::nullopt;
  return riccati_policy_iteration(doc.model(), doc.weights(), k0).cost_star;
}

int cmd_check(const ProblemDocument& doc, const Common& common, std::ostream& out) {
  const auto model = doc.model();
  const auto check = is_stabilizer(model, doc.k0);
  Report rep;
  rep.add("k", format_matrix(doc.k0));
  if (check.stabilizing) {
    rep.add("status", "mean-square stabilizing");
    rep.add("certificate_min_eig", fmt::format("{:.6g}", min_eig(*check.certificate)));
  } else {
    rep.add("status", check.marginal ? "not mean-square stabilizing (marginal)"
                                     : "not mean-square stabilizing");
  }
  rep.emit(out, common.report_path);
  return check.stabilizing ? kExitOk : kExitNegative;
}

int cmd_descend(const ProblemDocument& doc, const Common& common,
                const DescendFlags& f, std::ostream& out) {
  const auto model = doc.model();
  const auto weights = doc.weights();
  const Gain k0 = Gain::verify(model, doc.k0);

  OptimizerConfig cfg = doc.optimizer.value_or(OptimizerConfig{});
  if (f.step == "bb") {
    cfg.step_rule = step::BarzilaiBorwein{};
  } else if (f.step == "two-over-l") {
    cfg.step_rule = step::TwoOverL{};
  } else if (f.step == "fixed") {
    const auto* current = std::get_if<step::Fixed>(&cfg.step_rule);
    if (!f.alpha && !current) throw ValidationError("--step fixed needs --alpha");
    cfg.step_rule = step::Fixed{f.alpha ? *f.alpha : current->alpha};
  } else if (auto* current = std::get_if<step::Fixed>(&cfg.step_rule); current && f.alpha) {
    current->alpha = *f.alpha;
  }
  if (f.tol) cfg.tol = *f.tol;
  if (f.gamma) cfg.gamma = *f.gamma;
  if (f.max_iter) cfg.max_iter = *f.max_iter;
  if (f.alpha0) cfg.alpha0 = *f.alpha0;
  if (f.alpha_max) cfg.alpha_max = *f.alpha_max;
  if (f.step_floor) cfg.step_floor = *f.step_floor;
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw ValidationError(e.what());
  }

  auto report = gradient_descent(model, weights, k0, cfg,
                                 oracle_cost(doc, k0, f.no_oracle));
  std::optional<ConvergenceConstants> consts;
  try {
    consts = constants(model, weights, k0);
    report.certificate_violations = check_certificates(report, *consts);
  } catch (const UnsupportedModel&) {
  }

  const std::string trace = f.trace_path.empty() ? default_trace_path(doc, "descend")
                                                 : f.trace_path;
  write_trace_file(report, trace);
  Report rep;
  rep.add("command", "descend");
  rep.add("step_rule", step_rule_name(cfg.step_rule));
  summarize(rep, report);
  if (!consts) rep.add("certificates", "unavailable (||B|| = 0)");
  rep.add("trace", trace);
  rep.emit(out, common.report_path);
  return report.converged && report.certificate_violations.empty() ? kExitOk
                                                                   : kExitNegative;
}

int cmd_flow(const ProblemDocument& doc, const Common& common,
             const FlowFlags& f, std::ostream& out) {
  const auto model = doc.model();
  const auto weights = doc.weights();
  const Gain k0 = Gain::verify(model, doc.k0);
  try {
    f.cfg.validate();
  } catch (const InvalidInput& e) {
    throw ValidationError(e.what());
  }
  auto report = gradient_flow(model, weights, k0, f.cfg,
                              oracle_cost(doc, k0, f.no_oracle));
  bool have_consts = true;
  try {
    report.certificate_violations =
        check_certificates(report, constants(model, weights, k0));
  } catch (const UnsupportedModel&) {
    have_consts = false;
  }
  const std::string trace =
      f.trace_path.empty() ? default_trace_path(doc, "flow") : f.trace_path;
  write_trace_file(report, trace);
  Report rep;
  rep.add("command", "flow");
  rep.add("t_end", fmt::format("{:.6g}", f.cfg.t_end));
  summarize(rep, report);
  if (!have_consts) rep.add("certificates", "unavailable (||B|| = 0)");
  rep.add("trace", trace);
  rep.emit(out, common.report_path);
  return report.certificate_violations.empty() ? kExitOk : kExitNegative;
}

int cmd_constants(const ProblemDocument& doc, const Common& common,
                  std::ostream& out) {
  const auto model = doc.model();
  const auto c = constants(model, doc.weights(), Gain::verify(model, doc.k0));
  Report rep;
  rep.add("anchor_cost", fmt::format("{:.6g}", c.anchor_cost));
  rep.add("l_smooth", fmt::format("{:.6g}", c.l_smooth));
  rep.add("xi", fmt::format("{:.6g}", c.xi));
  rep.add("mu_tilde", fmt::format("{:.6g}", c.mu_tilde));
  rep.add("mu_pl", fmt::format("{:.6g}", c.mu_pl));
  rep.add("gain_bound", fmt::format("{:.6g}", c.gain_bound));
  rep.emit(out, common.report_path);
  return kExitOk;
}

int cmd_oracle(const ProblemDocument& doc, const Common& common, std::ostream& out) {
  const auto model = doc.model();
  const auto s = riccati_policy_iteration(model, doc.weights(),
                                          Gain::verify(model, doc.k0));
  Report rep;
  rep.add("k_star", format_matrix(s.k_star.k()));
  rep.add("p_star", format_matrix(s.p_star.matrix()));
  rep.add("cost_star", fmt::format("{:.12g}", s.cost_star));
  rep.add("grad_norm", fmt::format("{:.6g}", s.grad_norm));
  rep.add("iterations", std::to_string(s.iterations));
  rep.emit(out, common.report_path);
  return kExitOk;
}

int cmd_verify(const ProblemDocument& doc, const Common& common,
               const VerifyFlags& f, std::ostream& out) {
  const auto model = doc.model();
  const auto weights = doc.weights();
  SuiteResult result = verify_problem(model, weights, Gain::verify(model, doc.k0), f.seed);
  result.merge(run_random_suite(f.random_instances, f.seed + 1));
  Report rep;
  for (const auto& [name, n] : result.checks) rep.add("checks." + name, std::to_string(n));
  rep.add("total_checks", std::to_string(result.total_checks()));
  rep.add("violations", format_violations(result.violations));
  rep.emit(out, common.report_path);
  return result.ok() ? kExitOk : kExitNegative;
}

int cmd_simulate(const ProblemDocument& doc, const Common& common,
                 const SimulateFlags& f, std::ostream& out) {
  const auto model = doc.model();
  const auto weights = doc.weights();
  SimConfig cfg = doc.simulation.value_or(SimConfig{});
  if (f.horizon) cfg.horizon = *f.horizon;
  if (f.dt) cfg.dt = *f.dt;
  if (f.paths) cfg.paths = *f.paths;
  if (f.seed) cfg.seed = *f.seed;
  cfg.threads = f.threads;
  if (const char* env = std::getenv("SLQ_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ValidationError(std::string("SLQ_SEED is not an integer: ") + env);
    }
  }
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw ValidationError(e.what());
  }

  Gain gain = Gain::verify(model, doc.k0);
  if (f.at_optimum) gain = riccati_policy_iteration(model, weights, gain).k_star;
  const double analytic = cost(model, weights, gain);
  const auto est = estimate_cost(model, weights, gain.k(), cfg);

  Report rep;
  rep.add("k", format_matrix(gain.k()));
  rep.add("analytic_cost", fmt::format("{:.12g}", analytic));
  rep.add("mc_cost_mean", fmt::format("{:.12g}", est.cost_mean));
  rep.add("mc_cost_stderr", fmt::format("{:.6g}", est.cost_stderr));
  rep.add("relative_difference", fmt::format("{:.6g}", (est.cost_mean - analytic) / analytic));
  rep.add("z_score", fmt::format("{:.6g}", est.cost_stderr > 0
                                               ? (est.cost_mean - analytic) / est.cost_stderr
                                               : 0.0));
  rep.add("terminal_second_moment", fmt::format("{:.6g}", est.terminal_second_moment));
  rep.add("tail_bound", fmt::format("{:.6g}", est.tail_bound));
  rep.add("paths", std::to_string(est.paths_used));
  rep.add("seed", std::to_string(cfg.seed));
  rep.emit(out, common.report_path);
  return kExitOk;
}

}  // namespace

void write_trace_csv(const DescentReport& report, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : report.trace) {
    out << fmt::format("{},{:.16e},{:.16e},{:.16e},", r.iter, r.cost,
                       r.grad_norm, r.step);
    if (r.rel_error) out << fmt::format("{:.16e}", *r.rel_error);
    out << '\n';
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Policy-gradient solvers for stochastic LQ control with "
               "multiplicative noise"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config,
                    "Problem document (path or bundled name, e.g. slq_sec5)")
        ->required();
    sub->add_option("--report", common.report_path,
                    "Also write the summary report to this file");
  };

  auto* check = app.add_subcommand("check", "Test whether k0 is a mean-square stabilizer");
  add_common(check);

  DescendFlags descend_flags;
  auto* descend = app.add_subcommand("descend", "Gradient descent from k0");
  add_common(descend);
  descend->add_option("--step", descend_flags.step, "Step rule")
      ->check(CLI::IsMember({"bb", "fixed", "two-over-l"}));
  descend->add_option("--alpha", descend_flags.alpha, "Step for --step fixed");
  descend->add_option("--tol", descend_flags.tol, "Gradient-norm stopping tolerance");
  descend->add_option("--gamma", descend_flags.gamma, "Backtracking factor in (0,1)");
  descend->add_option("--max-iter", descend_flags.max_iter, "Iteration cap");
  descend->add_option("--alpha0", descend_flags.alpha0, "First BB step");
  descend->add_option("--alpha-max", descend_flags.alpha_max, "BB step cap");
  descend->add_option("--step-floor", descend_flags.step_floor,
                      "Backtracking gives up below this step");
  descend->add_option("--trace", descend_flags.trace_path, "CSV trace path");
  descend->add_flag("--no-oracle", descend_flags.no_oracle,
                    "Skip the policy-iteration oracle (rel_error left empty)");

  FlowFlags flow_flags;
  auto* flow = app.add_subcommand("flow", "Gradient flow from k0");
  add_common(flow);
  flow->add_option("--t-end", flow_flags.cfg.t_end, "Integration horizon");
  flow->add_option("--h0", flow_flags.cfg.h0, "Initial step");
  flow->add_option("--rtol", flow_flags.cfg.rtol, "Step-controller tolerance");
  flow->add_option("--record-every", flow_flags.cfg.record_every, "Trace sampling interval");
  flow->add_option("--grad-floor", flow_flags.cfg.grad_floor, "Equilibrium gradient norm");
  flow->add_option("--trace", flow_flags.trace_path, "CSV trace path");
  flow->add_flag("--no-oracle", flow_flags.no_oracle, "Skip the oracle");

  auto* consts = app.add_subcommand("constants", "Smoothness and gradient-domination constants");
  add_common(consts);
  auto* oracle = app.add_subcommand("oracle", "Optimal gain by policy iteration");
  add_common(oracle);

  VerifyFlags verify_flags;
  auto* verify = app.add_subcommand("verify", "Run the property suites");
  add_common(verify);
  verify->add_option("--random-instances", verify_flags.random_instances,
                     "Number of random systems");
  verify->add_option("--seed", verify_flags.seed, "Seed for the random suites");

  SimulateFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo cost estimate vs analytic");
  add_common(simulate);
  simulate->add_option("--horizon", sim_flags.horizon, "Truncation horizon T");
  simulate->add_option("--dt", sim_flags.dt, "Euler step");
  simulate->add_option("--paths", sim_flags.paths, "Number of paths");
  simulate->add_option("--seed", sim_flags.seed, "Seed (SLQ_SEED overrides)");
  simulate->add_option("--threads", sim_flags.threads, "Worker threads (0 = all)");
  simulate->add_flag("--at-optimum", sim_flags.at_optimum,
                     "Simulate at the oracle gain instead of k0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    const ProblemDocument doc = parse_problem(resolve_problem_path(common.config));
    if (check->parsed()) return cmd_check(doc, common, out);
    if (descend->parsed()) return cmd_descend(doc, common, descend_flags, out);
    if (flow->parsed()) return cmd_flow(doc, common, flow_flags, out);
    if (consts->parsed()) return cmd_constants(doc, common, out);
    if (oracle->parsed()) return cmd_oracle(doc, common, out);
    if (verify->parsed()) return cmd_verify(doc, common, verify_flags, out);
    if (simulate->parsed()) return cmd_simulate(doc, common, sim_flags, out);
  } catch (const ParseError& e) {
    err << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << e.what() << '\n';
    return kExitValidation;
  } catch (const UnsupportedModel& e) {
    err << e.what() << '\n';
    return kExitValidation;
  } catch (const InvalidInput& e) {
    err << e.what() << '\n';
    return kExitValidation;
  } catch (const NotStabilizing& e) {
    err << e.what() << '\n';
    return kExitNegative;
  } catch (const MaxIterExceeded& e) {
    err << e.what() << '\n';
    return kExitNegative;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitValidation;
}

}  // namespace slq
