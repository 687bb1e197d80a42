#pragma once

// Brute-force reference computations. Deliberately independent of envelope.hpp.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core_types.hpp"
#include "error.hpp"
#include "operator.hpp"

namespace mgineq::oracle {

struct Atom {
  double d = 0.0;
  ExtReal v;
};

// Best value of sum(lambda * v) over probability weights on the finite-valued
// atoms with sum(lambda * d) = barycenter. Extreme points have at most two atoms.
inline ExtReal one_step_lp(const std::vector<Atom>& samples, double barycenter) {
  if (samples.empty()) throw Error(ErrorCode::InvalidSamples, "no samples");
  for (const Atom& a : samples) {
    if (a.v.is_pos_inf()) throw Error(ErrorCode::PlusInfinityValue, "sample value is +inf");
    if (std::isnan(a.v.value()) || std::isnan(a.d)) throw Error(ErrorCode::NotANumber, "sample is NaN");
  }
  ExtReal best = ExtReal::neg_inf();
  const std::size_t n = samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = samples[i];
    if (!a.v.is_finite()) continue;
    if (a.d == barycenter) best = max(best, a.v);
    if (!(a.d < barycenter)) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const Atom& b = samples[j];
      if (!b.v.is_finite() || !(b.d > barycenter)) continue;
      double lam = (b.d - barycenter) / (b.d - a.d);
      best = max(best, ExtReal(lam * a.v.value() + (1.0 - lam) * b.v.value()));
    }
  }
  return best;
}

// One backward step of the scenario recursion over the state system.
inline GridFn tree_step(const ValidatedProblem& problem, const GridFn& next_values) {
  const std::size_t n = problem.num_states();
  GridFn out(n);
  std::vector<Atom> atoms(problem.num_increments());
  for (std::size_t z = 0; z < n; ++z) {
    if (problem.tied(z)) continue;
    for (std::size_t j = 0; j < atoms.size(); ++j) atoms[j] = {problem.increments()[j], next_values[problem.next(z, j)]};
    out[z] = one_step_lp(atoms, 0.0);
  }
  problem.propagate_ties(out);
  return out;
}

inline ExtReal enumerate_tree_value(const ValidatedProblem& problem, const GridFn& f, std::size_t T, std::size_t z0) {
  if (f.size() != problem.num_states()) throw Error(ErrorCode::LengthMismatch, "payoff length differs from state count");
  if (z0 >= problem.num_states()) throw Error(ErrorCode::IndexOutOfRange, "initial state out of range", z0);
  GridFn v = f;
  for (std::size_t t = 0; t < T; ++t) v = tree_step(problem, v);
  return v[z0];
}

// table[s] is the payoff of the increment-index sequence whose base-|grid|
// digits (first step most significant) spell s.
inline ExtReal path_dp(const std::vector<ExtReal>& path_payoff, const std::vector<double>& increments, std::size_t T) {
  const std::size_t g = increments.size();
  if (g == 0) throw Error(ErrorCode::InvalidIncrements, "empty increment list");
  std::size_t total = 1;
  for (std::size_t t = 0; t < T; ++t) {
    if (total > std::numeric_limits<std::size_t>::max() / g) throw Error(ErrorCode::IncompleteTable, "path table too large");
    total *= g;
  }
  if (path_payoff.size() != total)
    throw Error(ErrorCode::IncompleteTable, "path table has " + std::to_string(path_payoff.size()) + " entries, expected " +
                                                std::to_string(total));
  std::vector<ExtReal> level = path_payoff;
  std::vector<Atom> atoms(g);
  for (std::size_t t = T; t-- > 0;) {
    std::vector<ExtReal> up(level.size() / g);
    for (std::size_t p = 0; p < up.size(); ++p) {
      for (std::size_t j = 0; j < g; ++j) atoms[j] = {increments[j], level[p * g + j]};
      up[p] = one_step_lp(atoms, 0.0);
    }
    level = std::move(up);
  }
  return level[0];
}

struct HedgeReport {
  double min_slack = std::numeric_limits<double>::infinity();
  // increment indices of a path attaining min_slack, present when it is negative
  std::optional<std::vector<std::size_t>> violating_path;
};

namespace detail {
inline void require_ratio(const Strategy& s, std::size_t t, std::size_t z) {
  if (t > s.horizon() || z >= s.xi[t - 1].size())
    throw Error(ErrorCode::UndefinedStrategyState, "no hedge ratio at time " + std::to_string(t) + ", state " + std::to_string(z), z);
  const HedgeRatio& h = s.xi[t - 1][z];
  if (h.kind != RatioKind::Excluded && !std::isfinite(h.xi))
    throw Error(ErrorCode::UndefinedStrategyState, "hedge ratio undefined at time " + std::to_string(t) + ", state " + std::to_string(z), z);
}

inline double terminal_slack(ExtReal payoff) {
  return payoff.is_neg_inf() ? std::numeric_limits<double>::infinity() : -payoff.value();
}
}  // namespace detail

// Minimum over all increment paths of a + sum xi(t, Z_{t-1}) d_t - f(Z_T), by
// backward recursion over (time, state). Paths entering an Excluded state count
// as +inf; so do paths ending at -inf payoff.
inline HedgeReport hedge_check(const ValidatedProblem& problem, const Strategy& strategy, double a, const GridFn& f,
                               std::size_t T) {
  const std::size_t n = problem.num_states();
  const std::size_t nd = problem.num_increments();
  if (f.size() != n) throw Error(ErrorCode::LengthMismatch, "payoff length differs from state count");
  const std::size_t z0 = problem.initial_state();
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<std::vector<char>> reach(T + 1, std::vector<char>(n, 0));
  reach[0][z0] = 1;
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t z = 0; z < n; ++z) {
      if (!reach[t - 1][z]) continue;
      detail::require_ratio(strategy, t, z);
      if (strategy.at(t, z).kind == RatioKind::Excluded) continue;
      for (std::size_t j = 0; j < nd; ++j) reach[t][problem.next(z, j)] = 1;
    }
  }

  std::vector<double> m(n, inf);
  for (std::size_t z = 0; z < n; ++z)
    if (reach[T][z]) m[z] = detail::terminal_slack(f[z]);
  std::vector<std::vector<std::size_t>> arg(T, std::vector<std::size_t>(n, 0));
  for (std::size_t t = T; t >= 1; --t) {
    std::vector<double> prev(n, inf);
    for (std::size_t z = 0; z < n; ++z) {
      if (!reach[t - 1][z]) continue;
      const HedgeRatio& h = strategy.at(t, z);
      if (h.kind == RatioKind::Excluded) continue;
      double best = inf;
      for (std::size_t j = 0; j < nd; ++j) {
        double s = h.xi * problem.increments()[j] + m[problem.next(z, j)];
        if (s < best) {
          best = s;
          arg[t - 1][z] = j;
        }
      }
      prev[z] = best;
    }
    m = std::move(prev);
  }

  HedgeReport rep;
  rep.min_slack = a + m[z0];
  if (rep.min_slack < 0.0) {
    std::vector<std::size_t> path;
    std::size_t z = z0;
    for (std::size_t t = 1; t <= T; ++t) {
      std::size_t j = arg[t - 1][z];
      path.push_back(j);
      z = problem.next(z, j);
    }
    rep.violating_path = std::move(path);
  }
  return rep;
}

// Slack of one explicit path; +inf when it enters an Excluded state.
inline double path_slack(const ValidatedProblem& problem, const Strategy& strategy, double a, const GridFn& f,
                         const std::vector<std::size_t>& path) {
  std::size_t z = problem.initial_state();
  double s = a;
  for (std::size_t t = 1; t <= path.size(); ++t) {
    detail::require_ratio(strategy, t, z);
    const HedgeRatio& h = strategy.at(t, z);
    if (h.kind == RatioKind::Excluded) return std::numeric_limits<double>::infinity();
    s += h.xi * problem.increments()[path[t - 1]];
    z = problem.next(z, path[t - 1]);
  }
  return s + detail::terminal_slack(f[z]);
}

// Literal enumeration of all |grid|^T paths, for small instances.
inline HedgeReport hedge_check_enumerate(const ValidatedProblem& problem, const Strategy& strategy, double a,
                                         const GridFn& f, std::size_t T) {
  const std::size_t nd = problem.num_increments();
  double total = std::pow(static_cast<double>(nd), static_cast<double>(T));
  if (total > 1e7) throw Error(ErrorCode::InvalidParameter, "too many paths to enumerate");
  HedgeReport rep;
  std::vector<std::size_t> path(T, 0);
  std::vector<std::size_t> best;
  for (;;) {
    double s = path_slack(problem, strategy, a, f, path);
    if (s < rep.min_slack) {
      rep.min_slack = s;
      best = path;
    }
    std::size_t k = T;
    while (k > 0 && path[k - 1] + 1 == nd) path[--k] = 0;
    if (k == 0) break;
    ++path[k - 1];
  }
  if (rep.min_slack < 0.0) rep.violating_path = best;
  return rep;
}

}  // namespace mgineq::oracle
