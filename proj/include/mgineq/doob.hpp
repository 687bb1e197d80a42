#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core_types.hpp"
#include "envelope.hpp"
#include "error.hpp"
#include "operator.hpp"

namespace mgineq {

inline double doob_sharp_constant(double p) { return std::pow(p / (p - 1.0), p); }

struct DoobParams {
  double p = 2.0;
  std::optional<double> c;  // payoff constant; the sharp constant when empty
  std::size_t grid_points = 1000;
  double span = 3.0;

  double constant() const { return c ? *c : doob_sharp_constant(p); }
  bool sharp() const {
    double s = doob_sharp_constant(p);
    return std::fabs(constant() - s) <= 1e-12 * s;
  }

  void validate() const {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidParameter, "p must exceed 1");
    if (!(constant() >= 0.0) || !std::isfinite(constant())) throw Error(ErrorCode::InvalidParameter, "c must be nonnegative");
    if (grid_points < 3) throw Error(ErrorCode::InvalidParameter, "at least 3 grid points are required");
    if (!(span > 1.0) || !std::isfinite(span)) throw Error(ErrorCode::InvalidParameter, "span must exceed 1");
  }
};

// Minimal fixed point at the sharp constant, for |x| <= y.
inline double doob_closed_form(const DoobParams& params, double x, double y) {
  if (!(std::fabs(x) <= y)) throw Error(ErrorCode::OutsideStateSpace, "closed form needs |x| <= y");
  if (!params.sharp()) throw Error(ErrorCode::NonSharpConstant, "closed form holds only at c = (p/(p-1))^p");
  const double p = params.p;
  if (y == 0.0) return 0.0;
  double ax = std::fabs(x);
  if (ax < (1.0 - 1.0 / p) * y) return std::pow(y, p) - params.constant() * std::pow(ax, p);
  return p * std::pow(y, p) - p * p / (p - 1.0) * ax * std::pow(y, p - 1.0);
}

inline double doob_rho(const DoobParams& params, double r) { return doob_closed_form(params, r, 1.0); }

// Ray-reduced system on r = |x|/y. States, in order: the lattice r_i = i/(N-1)
// (the last one is the anchor r = 1), an optional refinement node just above
// the payoff root, tail states s > 1 tied to the anchor with factor s^p, and an
// absorbing cemetery for off-lattice landings.
struct DoobProblem {
  DoobParams params;
  ValidatedProblem problem;
  std::vector<double> coord;  // r or s per state, NaN for the cemetery
  std::size_t lattice = 0;
  std::size_t anchor = 0;
  std::optional<std::size_t> node;
  std::size_t cemetery = 0;
  double h = 0.0;
  double eps = 0.0;
};

inline DoobProblem build_doob_problem(const DoobParams& params) {
  params.validate();
  const double p = params.p;
  const double c = params.constant();
  const std::size_t N = params.grid_points;
  const double h = 1.0 / static_cast<double>(N - 1);
  const double eta = h / 8.0;
  const double eps = std::max(eta * eta, 2.5e-12 / eta);
  const long kneg = static_cast<long>(std::ceil((params.span + 1.0) / h - 1e-9));
  const long kpos = static_cast<long>(std::floor((params.span - 1.0) / h + 1e-9));

  std::optional<double> node_r;
  if (c > 0.0) {
    double r0 = std::pow(c, -1.0 / p) + eta;
    double nearest = std::round(r0 / h) * h;
    if (r0 < 1.0 && std::fabs(r0 - nearest) > h / 64.0) node_r = r0;
  }

  enum class Kind { Lattice, Eps, Node };
  struct Inc {
    double d;
    Kind kind;
    long k;
  };
  std::vector<Inc> incs;
  for (long k = -kneg; k <= kpos; ++k) incs.push_back({static_cast<double>(k) * h, Kind::Lattice, k});
  incs.push_back({eps, Kind::Eps, 0});
  if (node_r) incs.push_back({*node_r - 1.0, Kind::Node, 0});
  std::sort(incs.begin(), incs.end(), [](const Inc& a, const Inc& b) { return a.d < b.d; });

  const long last = static_cast<long>(N) - 1;
  const long mmax = std::max(last + kpos, kneg);
  const std::size_t node_id = N;
  const std::size_t tail0 = N + (node_r ? 1 : 0);
  const std::size_t n_tail = mmax > last ? static_cast<std::size_t>(mmax - last) : 0;
  const std::size_t eps_tail = tail0 + n_tail;
  const std::size_t cemetery = eps_tail + 1;
  const std::size_t n_states = cemetery + 1;

  ProblemSpec spec;
  std::vector<double> dvals;
  for (const Inc& i : incs) dvals.push_back(i.d);
  spec.increments = IncrementGrid(std::move(dvals));
  spec.transition = TransitionTable(n_states, incs.size());
  spec.state_labels.resize(n_states);
  spec.payoff.resize(n_states);

  std::vector<double> coord(n_states, std::numeric_limits<double>::quiet_NaN());
  auto tail_id = [&](long m) { return tail0 + static_cast<std::size_t>(m - last - 1); };
  const double f1 = 1.0 - c;

  for (std::size_t i = 0; i < N; ++i) coord[i] = static_cast<double>(i) * h;
  coord[N - 1] = 1.0;
  if (node_r) coord[node_id] = *node_r;
  for (long m = last + 1; m <= mmax; ++m) coord[tail_id(m)] = static_cast<double>(m) * h;
  coord[eps_tail] = 1.0 + eps;

  for (std::size_t z = 0; z < n_states; ++z) {
    if (z == cemetery) {
      spec.state_labels[z] = StateLabel::named("cemetery");
      spec.payoff[z] = ExtReal::neg_inf();
    } else {
      spec.state_labels[z] = StateLabel::at(coord[z]);
      if (z < N || (node_r && z == node_id))
        spec.payoff[z] = 1.0 - c * std::pow(coord[z], p);
    }
  }

  using Id = TransitionTable::StateId;
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<Id> row(incs.size());
    for (std::size_t j = 0; j < incs.size(); ++j) {
      const Inc& in = incs[j];
      std::size_t target = cemetery;
      if (in.kind == Kind::Lattice) {
        long m = std::labs(static_cast<long>(i) + in.k);
        target = m <= last ? static_cast<std::size_t>(m) : tail_id(m);
      } else if (i == N - 1) {
        target = in.kind == Kind::Eps ? eps_tail : node_id;
      }
      row[j] = static_cast<Id>(target);
    }
    spec.transition.set_row(i, std::move(row));
  }
  if (node_r) {
    std::vector<Id> row(incs.size(), static_cast<Id>(cemetery));
    row[spec.increments.zero_index()] = static_cast<Id>(node_id);
    spec.transition.set_row(node_id, std::move(row));
  }
  for (std::size_t z = tail0; z < n_states; ++z) spec.transition.set_absorbing(z);

  for (std::size_t z = tail0; z <= eps_tail; ++z) {
    double factor = std::pow(coord[z], p);
    spec.ties.push_back(Tie{z, N - 1, factor});
    spec.payoff[z] = factor * f1;
  }
  spec.initial_state = 0;

  return DoobProblem{params, validate_problem(std::move(spec)), std::move(coord), N, N - 1,
                     node_r ? std::optional<std::size_t>(node_id) : std::nullopt, cemetery, h, eps};
}

// Closed form on every state of the reduced system (sharp constant only).
inline GridFn doob_closed_form_table(const DoobProblem& dp) {
  GridFn u(dp.problem.num_states());
  double rho1 = doob_rho(dp.params, 1.0);
  for (std::size_t z = 0; z < u.size(); ++z) {
    double r = dp.coord[z];
    if (std::isnan(r))
      u[z] = ExtReal::neg_inf();
    else if (r <= 1.0)
      u[z] = doob_rho(dp.params, r);
    else
      u[z] = std::pow(r, dp.params.p) * rho1;
  }
  return u;
}

struct Tangent {
  double intercept = 0.0;
  double slope = 0.0;
};

struct DoobSolution {
  DoobProblem system;
  IterationReport report;
  std::vector<double> r;    // lattice coordinates
  std::vector<double> rho;  // values on the lattice (may be +inf after divergence)
  std::optional<Tangent> tangent;
  std::optional<double> free_boundary;  // largest lattice r with rho = payoff
};

// Affine piece of rho ending at r = 1, read off the left hull slope at the anchor.
inline std::optional<Tangent> doob_tangent(const DoobProblem& dp, const GridFn& u) {
  const auto& P = dp.problem;
  SampledFn fn;
  for (std::size_t j = 0; j < P.num_increments(); ++j) fn.push_back({P.increments()[j], u[P.next(dp.anchor, j)]});
  EnvelopeResult res = envelope_at(fn, 0.0);
  if (!res.value.is_finite() || !res.superdiff_hi) return std::nullopt;
  return Tangent{res.value.value() - *res.superdiff_hi, *res.superdiff_hi};
}

inline DoobSolution doob_solve(const DoobParams& params, IterationOptions opts) {
  DoobSolution sol{build_doob_problem(params), {}, {}, {}, std::nullopt, std::nullopt};
  const DoobProblem& dp = sol.system;
  sol.report = iterate_to_fixed_point(dp.problem, dp.problem.payoff(), opts);
  for (std::size_t i = 0; i < dp.lattice; ++i) {
    sol.r.push_back(dp.coord[i]);
    sol.rho.push_back(sol.report.result[i].value());
  }
  if (sol.report.status == Status::Converged) {
    sol.tangent = doob_tangent(dp, sol.report.result);
    for (std::size_t i = 0; i < dp.lattice; ++i) {
      double f = dp.problem.payoff()[i].value();
      if (sol.rho[i] - f <= 1e-9 * (1.0 + std::fabs(f))) sol.free_boundary = sol.r[i];
    }
  }
  return sol;
}

inline DoobSolution doob_solve(const DoobParams& params) {
  IterationOptions opts;
  opts.sweep = Sweep::GaussSeidel;
  return doob_solve(params, opts);
}

}  // namespace mgineq
