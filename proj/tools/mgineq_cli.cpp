#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <mgineq/mgineq.hpp>

using namespace mgineq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kDiverged = 2;
constexpr int kMaxIterations = 3;
constexpr int kCheckFailed = 4;

struct Global {
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  std::optional<double> cap;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  std::string sweep = "gauss-seidel";

  IterationOptions options() const {
    IterationOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    o.value_cap = cap;
    o.sweep = sweep == "jacobi" ? Sweep::Jacobi : Sweep::GaussSeidel;
    return o;
  }
  std::string path(const std::string& name) const {
    fs::create_directories(out_dir);
    return (fs::path(out_dir) / name).string();
  }
};

int status_exit(Status s) {
  switch (s) {
    case Status::Converged: return kOk;
    case Status::Diverged: return kDiverged;
    case Status::MaxIterations: return kMaxIterations;
  }
  return kInputError;
}

std::string num(double v) { return io::format_number(v); }

json ext_json(ExtReal v) {
  if (v.is_finite()) return v.value();
  return v.is_neg_inf() ? "-inf" : "inf";
}

void write_json(const std::string& path, const json& j) { io::write_text_file(path, j.dump(2) + "\n"); }

ValidatedProblem load(const std::string& file) { return validate_problem(io::read_problem(file)); }

SupergradientPolicy parse_policy(const std::string& s) {
  if (s == "lower") return SupergradientPolicy::Lower;
  if (s == "upper") return SupergradientPolicy::Upper;
  return SupergradientPolicy::Midpoint;
}

// ---- solve ----

struct SolveArgs {
  std::string problem;
  std::optional<std::size_t> horizon;
};

int cmd_solve(const Global& g, const SolveArgs& a) {
  auto P = load(a.problem);
  json summary;
  const std::size_t z0 = P.initial_state();
  GridFn u;
  int code = kOk;
  if (a.horizon) {
    auto tables = finite_horizon_value(P, P.payoff(), *a.horizon);
    u = tables.back();
    summary["mode"] = "finite-horizon";
    summary["horizon"] = *a.horizon;
    summary["status"] = "Converged";
  } else {
    auto rep = iterate_to_fixed_point(P, P.payoff(), g.options());
    u = rep.result;
    summary["mode"] = "fixed-point";
    summary["status"] = to_string(rep.status);
    summary["iterations"] = rep.iterations;
    summary["sup_delta"] = rep.sup_delta;
    summary["cap_hit_states"] = rep.cap_hit_states;
    code = status_exit(rep.status);
  }
  summary["z0"] = z0;
  summary["value_at_z0"] = ext_json(u[z0]);
  io::write_text_file(g.path("values.csv"), io::values_csv(P.spec(), u));
  write_json(g.path("summary.json"), summary);
  std::cout << "status: " << summary["status"].get<std::string>() << "\n";
  if (summary.contains("iterations")) std::cout << "iterations: " << summary["iterations"] << "\nsup_delta: " << num(summary["sup_delta"].get<double>()) << "\n";
  std::cout << "value at z0 (state " << z0 << "): " << io::format_number(u[z0]) << "\n";
  return code;
}

// ---- verify ----

struct VerifyArgs {
  std::string problem;
  std::string candidate;
};

int cmd_verify(const Global& g, const VerifyArgs& a) {
  auto P = load(a.problem);
  GridFn u = io::read_values(a.candidate, P.num_states());
  auto rep = verify_fixed_point(P, u, P.payoff(), g.tol);
  std::cout << "dominates: " << (rep.dominates ? "true" : "false") << "\n"
            << "superfixed: " << (rep.superfixed ? "true" : "false") << "\n"
            << "worst_gap: " << num(rep.worst_gap) << "\n"
            << "worst_state: " << rep.worst_state << " (" << to_string(P.spec().state_labels[rep.worst_state]) << ")\n";
  return rep.dominates && rep.superfixed ? kOk : kCheckFailed;
}

// ---- hedge-check ----

struct HedgeArgs {
  std::string problem;
  std::size_t horizon = 1;
  std::string policy = "midpoint";
  double xi_noise = 0.0;
};

int cmd_hedge(const Global& g, const HedgeArgs& a) {
  auto P = load(a.problem);
  auto tables = finite_horizon_value(P, P.payoff(), a.horizon);
  ExtReal value = tables.back()[P.initial_state()];
  if (!value.is_finite()) throw Error(ErrorCode::InvalidParameter, "value at z0 is " + io::format_number(value) + "; no finite hedge exists");
  Strategy s = extract_strategy(P, tables, parse_policy(a.policy));
  if (a.xi_noise > 0.0) {
    std::mt19937_64 rng(g.seed);
    std::normal_distribution<double> noise(0.0, a.xi_noise);
    for (auto& row : s.xi)
      for (auto& h : row)
        if (h.kind != RatioKind::Excluded) h.xi += noise(rng);
  }
  std::ostringstream csv;
  csv << "time,state_index,xi\n";
  for (std::size_t t = 1; t <= s.horizon(); ++t)
    for (std::size_t z = 0; z < P.num_states(); ++z)
      if (s.at(t, z).kind != RatioKind::Excluded) csv << t << ',' << z << ',' << num(s.at(t, z).xi) << '\n';
  io::write_text_file(g.path("strategy.csv"), csv.str());
  auto rep = oracle::hedge_check(P, s, value.value(), P.payoff(), a.horizon);
  std::cout << "a: " << num(value.value()) << "\nmin_slack: " << num(rep.min_slack) << "\n";
  if (rep.violating_path) {
    std::cout << "witness increments:";
    for (std::size_t j : *rep.violating_path) std::cout << ' ' << num(P.increments()[j]);
    std::cout << "\n";
  }
  return rep.min_slack >= -g.tol ? kOk : kCheckFailed;
}

// ---- reduce ----

struct ReduceArgs {
  std::string tree;
  std::string payoff = "terminal-power:2";
  std::string leaf_values;
};

std::vector<std::vector<double>> builtin_payoff(const MartingaleTree& t, const std::string& spec) {
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "payoff must look like 'terminal-power:q' or 'terminal-moments:q'");
  double q = io::parse_number(spec.substr(colon + 1));
  std::vector<std::vector<double>> out;
  for (std::size_t v : t.leaves()) {
    const auto& x = t.nodes[v].x;
    std::vector<double> row;
    if (kind == "terminal-power") {
      double s = 0.0;
      for (double c : x) s += c * c;
      row.push_back(std::pow(std::sqrt(s), q));
    } else if (kind == "terminal-moments") {
      if (q < 1 || q != std::floor(q)) throw Error(ErrorCode::ParseError, "terminal-moments needs a positive integer order");
      for (double c : x)
        for (int j = 1; j <= static_cast<int>(q); ++j) row.push_back(std::pow(c, j));
    } else {
      throw Error(ErrorCode::ParseError, "unknown payoff '" + kind + "'");
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<double>> table_payoff(const std::string& path) {
  json j = io::read_json_file(path);
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "leaf value table must be an array");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::string where = "leaf_values[" + std::to_string(i) + "]";
    std::vector<double> row;
    if (j[i].is_number()) {
      row.push_back(j[i].get<double>());
    } else if (j[i].is_array()) {
      for (const auto& e : j[i]) {
        if (!e.is_number()) throw Error(ErrorCode::ParseError, where + " must hold numbers");
        row.push_back(e.get<double>());
      }
    } else {
      throw Error(ErrorCode::ParseError, where + " must be a number or an array");
    }
    out.push_back(std::move(row));
  }
  return out;
}

int cmd_reduce(const Global& g, const ReduceArgs& a) {
  MartingaleTree tree = io::tree_from_json(io::read_json_file(a.tree));
  auto values = a.leaf_values.empty() ? builtin_payoff(tree, a.payoff) : table_payoff(a.leaf_values);
  auto rep = reduce_martingale_tree(tree, values, 1e-12);
  const std::size_t k = values.front().size();
  double bound = std::pow(static_cast<double>(tree.n + k + 1), static_cast<double>(tree.T));
  bool ok = static_cast<double>(rep.support_after) <= bound && rep.moment_error <= 1e-8 && rep.martingale_error <= 1e-10;
  write_json(g.path("reduced_tree.json"), io::tree_to_json(rep.reduced));
  json r;
  r["support_before"] = rep.support_before;
  r["support_after"] = rep.support_after;
  r["support_bound"] = bound;
  r["moment_error"] = rep.moment_error;
  r["martingale_error"] = rep.martingale_error;
  r["moments_before"] = rep.moments_before;
  r["moments_after"] = rep.moments_after;
  write_json(g.path("reduce_report.json"), r);
  std::cout << "support: " << rep.support_before << " -> " << rep.support_after << " (bound " << num(bound) << ")\n"
            << "moment_error: " << num(rep.moment_error) << "\nmartingale_error: " << num(rep.martingale_error) << "\n";
  return ok ? kOk : kCheckFailed;
}

// ---- doob ----

struct DoobArgs {
  DoobParams params;
  bool emit_problem = false;
};

int cmd_doob(const Global& g, DoobArgs a) {
  auto sol = doob_solve(a.params, g.options());
  const auto& dp = sol.system;
  const bool sharp = a.params.sharp();
  std::ostringstream csv;
  csv << "r,value,closed_form,abs_err\n";
  double err = 0.0;
  for (std::size_t i = 0; i < sol.r.size(); ++i) {
    csv << num(sol.r[i]) << ',' << num(sol.rho[i]) << ',';
    if (sharp) {
      double cf = doob_rho(a.params, sol.r[i]);
      double e = std::fabs(sol.rho[i] - cf);
      err = std::max(err, e);
      csv << num(cf) << ',' << num(e);
    } else {
      csv << ',';
    }
    csv << '\n';
  }
  io::write_text_file(g.path("rho.csv"), csv.str());
  if (a.emit_problem) {
    io::write_problem(g.path("problem.json"), dp.problem.spec());
    if (sharp) io::write_text_file(g.path("closed_form.csv"), io::values_csv(dp.problem.spec(), doob_closed_form_table(dp)));
  }
  json s;
  s["p"] = a.params.p;
  s["c"] = a.params.constant();
  s["grid_points"] = a.params.grid_points;
  s["status"] = to_string(sol.report.status);
  s["iterations"] = sol.report.iterations;
  s["sup_delta"] = sol.report.sup_delta;
  std::cout << "status: " << to_string(sol.report.status) << "\niterations: " << sol.report.iterations << "\n";
  if (sol.report.status == Status::Converged) {
    s["rho_0"] = sol.rho.front();
    s["rho_1"] = sol.rho.back();
    std::cout << "rho(0): " << num(sol.rho.front()) << "\nrho(1): " << num(sol.rho.back()) << "\n";
    if (sol.tangent) {
      s["tangent"] = {{"intercept", sol.tangent->intercept}, {"slope", sol.tangent->slope}};
      std::cout << "tangent: intercept " << num(sol.tangent->intercept) << ", slope " << num(sol.tangent->slope) << "\n";
    }
    if (sol.free_boundary) {
      s["free_boundary"] = *sol.free_boundary;
      std::cout << "free boundary: " << num(*sol.free_boundary) << "\n";
    }
    if (sharp) {
      s["closed_form_sup_error"] = err;
      std::cout << "sup error vs closed form: " << num(err) << "\n";
    }
  }
  write_json(g.path("summary.json"), s);
  return status_exit(sol.report.status);
}

// ---- burkholder ----

struct BurkholderArgs {
  double p = 2.0;
  std::size_t state_samples = 10000;
  std::size_t direction_samples = 1000;
  std::size_t ray_samples = 10;
  std::size_t horizon = 5;
  std::size_t paths = 100000;
  std::vector<double> z0{1.0, 1.0};
};

int cmd_burkholder(const Global& g, const BurkholderArgs& a) {
  BurkholderParams b{a.p};
  PairState z0;
  if (a.z0.size() == 2)
    z0 = {{a.z0[0], 0.0}, {a.z0[1], 0.0}};
  else if (a.z0.size() == 4)
    z0 = {{a.z0[0], a.z0[1]}, {a.z0[2], a.z0[3]}};
  else
    throw Error(ErrorCode::ParseError, "--z0 takes 2 norms or 4 coordinates");
  double tol = std::max(g.tol, 1e-7);
  auto v = burkholder_verify(b, a.state_samples, a.direction_samples, a.ray_samples, tol, g.seed);
  auto mc = burkholder_mc_check(b, z0, a.horizon, a.paths, g.seed);
  json r;
  r["p"] = a.p;
  r["p_star"] = b.p_star();
  r["tol"] = tol;
  r["dominates"] = v.dominates;
  r["line_concave"] = v.line_concave;
  r["worst_dominance"] = v.worst_dominance;
  r["worst_concavity"] = v.worst_concavity;
  r["monte_carlo"] = {{"estimate", mc.estimate}, {"u0", mc.u0}, {"gap", mc.gap}, {"standard_error", mc.standard_error}, {"flagged", mc.flagged}};
  write_json(g.path("burkholder.json"), r);
  std::cout << "dominates: " << (v.dominates ? "true" : "false") << " (worst " << num(v.worst_dominance) << ")\n"
            << "line_concave: " << (v.line_concave ? "true" : "false") << " (worst " << num(v.worst_concavity) << ")\n"
            << "monte carlo: estimate " << num(mc.estimate) << ", u(z0) " << num(mc.u0) << ", gap " << num(mc.gap)
            << ", standard error " << num(mc.standard_error) << (mc.flagged ? " FLAGGED" : "") << "\n";
  return v.dominates && v.line_concave && !mc.flagged ? kOk : kCheckFailed;
}

// ---- enumerate ----

struct EnumerateArgs {
  std::string problem;
  std::size_t horizon = 1;
};

int cmd_enumerate(const Global& g, const EnumerateArgs& a) {
  auto P = load(a.problem);
  ExtReal brute = oracle::enumerate_tree_value(P, P.payoff(), a.horizon, P.initial_state());
  ExtReal hull = finite_horizon_value(P, P.payoff(), a.horizon).back()[P.initial_state()];
  bool agree = brute == hull || (brute.is_finite() && hull.is_finite() && std::fabs(brute.value() - hull.value()) <= std::max(g.tol, 1e-9));
  std::cout << "enumerated: " << io::format_number(brute) << "\nhull solver: " << io::format_number(hull) << "\n"
            << (agree ? "agree" : "DISAGREE") << "\n";
  return agree ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Martingale inequality solver"};
  app.require_subcommand(1);
  Global g;
  std::optional<double> cap;
  app.add_option("--tol", g.tol, "Convergence / check tolerance")->capture_default_str();
  app.add_option("--max-iter", g.max_iter, "Iteration budget")->capture_default_str();
  app.add_option("--cap", cap, "Divergence cap on |values|");
  app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--sweep", g.sweep, "Iteration schedule")->check(CLI::IsMember({"jacobi", "gauss-seidel"}))->capture_default_str();

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Minimal fixed point (or horizon-T value) of a problem file");
  s->add_option("problem", solve.problem)->required();
  s->add_option("--horizon", solve.horizon, "Finite horizon T");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Check a candidate fixed point");
  v->add_option("problem", verify.problem)->required();
  v->add_option("candidate", verify.candidate, "values CSV or JSON array")->required();

  HedgeArgs hedge;
  auto* h = app.add_subcommand("hedge-check", "Pathwise superhedge check of the extracted strategy");
  h->add_option("problem", hedge.problem)->required();
  h->add_option("--horizon", hedge.horizon)->required();
  h->add_option("--policy", hedge.policy)->check(CLI::IsMember({"midpoint", "lower", "upper"}))->capture_default_str();
  h->add_option("--xi-noise", hedge.xi_noise, "Gaussian perturbation of hedge ratios")->check(CLI::NonNegativeNumber);

  ReduceArgs reduce;
  auto* r = app.add_subcommand("reduce", "Support reduction of a martingale tree");
  r->add_option("tree", reduce.tree)->required();
  auto* payoff_opt = r->add_option("--payoff", reduce.payoff, "terminal-power:q or terminal-moments:q")->capture_default_str();
  r->add_option("--leaf-values", reduce.leaf_values, "JSON table of payoff values per leaf")->excludes(payoff_opt);

  DoobArgs doob;
  double doob_c = -1.0;
  auto* d = app.add_subcommand("doob", "Ray-reduced Doob maximal inequality");
  d->add_option("--p", doob.params.p)->capture_default_str();
  auto* c_opt = d->add_option("--c", doob_c, "Payoff constant (default: sharp)");
  d->add_option("--grid-points", doob.params.grid_points)->capture_default_str();
  d->add_option("--span", doob.params.span)->capture_default_str();
  d->add_flag("--emit-problem", doob.emit_problem, "Also write problem.json (and closed_form.csv at the sharp constant)");

  BurkholderArgs burk;
  auto* b = app.add_subcommand("burkholder", "Burkholder closed-form verification and Monte Carlo check");
  b->add_option("--p", burk.p)->capture_default_str();
  b->add_option("--state-samples", burk.state_samples)->capture_default_str();
  b->add_option("--direction-samples", burk.direction_samples)->capture_default_str();
  b->add_option("--ray-samples", burk.ray_samples)->capture_default_str();
  b->add_option("--horizon", burk.horizon)->capture_default_str();
  b->add_option("--paths", burk.paths)->capture_default_str();
  b->add_option("--z0", burk.z0, "|x1| |x2| or four coordinates")->delimiter(',');

  EnumerateArgs en;
  auto* e = app.add_subcommand("enumerate", "Brute-force scenario-tree value against the hull solver");
  e->add_option("problem", en.problem)->required();
  e->add_option("--horizon", en.horizon)->required();

  for (auto* sub : {s, v, h, r, d, b, e}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? kOk : kInputError;
  }
  g.cap = cap;
  if (c_opt->count() > 0) doob.params.c = doob_c;

  try {
    if (*s) return cmd_solve(g, solve);
    if (*v) return cmd_verify(g, verify);
    if (*h) return cmd_hedge(g, hedge);
    if (*r) return cmd_reduce(g, reduce);
    if (*d) return cmd_doob(g, doob);
    if (*b) return cmd_burkholder(g, burk);
    if (*e) return cmd_enumerate(g, en);
  } catch (const Error& err) {
    std::cerr << "error [" << to_string(err.code()) << "]: " << err.what() << "\n";
    return kInputError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
