#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core_types.hpp"
#include "envelope.hpp"
#include "error.hpp"

namespace mgineq {

enum class Status { Converged, Diverged, MaxIterations };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "Converged";
    case Status::Diverged: return "Diverged";
    case Status::MaxIterations: return "MaxIterations";
  }
  return "Unknown";
}

// Jacobi applies A to the whole table; GaussSeidel updates in place, solving
// each state's own equation exactly.
enum class Sweep { Jacobi, GaussSeidel };

struct IterationOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  std::optional<double> value_cap;
  Sweep sweep = Sweep::Jacobi;
};

struct IterationReport {
  GridFn result;
  Status status = Status::MaxIterations;
  std::size_t iterations = 0;
  double sup_delta = 0.0;
  std::vector<std::size_t> cap_hit_states;
};

struct FixedPointReport {
  bool dominates = true;
  bool superfixed = true;
  double worst_gap = 0.0;
  std::size_t worst_state = 0;
};

enum class RatioKind { Interior, OneSided, Isolated, Excluded };

struct HedgeRatio {
  double xi = 0.0;
  RatioKind kind = RatioKind::Excluded;
};

struct Strategy {
  // xi[t - 1][z] for t = 1..T
  std::vector<std::vector<HedgeRatio>> xi;

  std::size_t horizon() const { return xi.size(); }
  const HedgeRatio& at(std::size_t t, std::size_t z) const { return xi.at(t - 1).at(z); }
};

struct RayPoint {
  std::size_t ray = 0;
  double scale = 1.0;
};

namespace detail {

inline void check_length(const ValidatedProblem& problem, const GridFn& g, const char* what) {
  if (g.size() != problem.num_states())
    throw Error(ErrorCode::LengthMismatch, std::string(what) + " has " + std::to_string(g.size()) + " entries for " +
                                               std::to_string(problem.num_states()) + " states");
}

struct Workspace {
  std::vector<double> vals;
  std::vector<double> base;
  std::vector<double> coef;
  std::vector<std::size_t> hull;

  explicit Workspace(std::size_t n) : vals(n), base(n), coef(n) { hull.reserve(n); }
};

// Envelope at 0 of d -> g(next(z, d)); +inf if any sample is +inf.
inline ExtReal envelope_at_state(const ValidatedProblem& problem, const GridFn& g, std::size_t z, Workspace& ws) {
  const std::size_t nd = problem.num_increments();
  const double* x = problem.increments().values().data();
  for (std::size_t j = 0; j < nd; ++j) {
    double v = g[problem.next(z, j)].value();
    if (v == std::numeric_limits<double>::infinity()) return ExtReal::pos_inf();
    ws.vals[j] = v;
  }
  hull_indices(x, ws.vals.data(), nd, ws.hull);
  return locate(x, ws.vals.data(), ws.hull, 0.0).value;
}

// Smallest a >= u[z] with a = G(a), where G is the envelope at 0 of the samples
// with u[z] (and values tied to z) replaced by functions of a. G is convex and
// piecewise affine in a, so Newton from the left lands on the minimal root.
inline double local_root(const ValidatedProblem& problem, const GridFn& u, std::size_t z, double cap, Workspace& ws) {
  const std::size_t nd = problem.num_increments();
  const double* x = problem.increments().values().data();
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nd; ++j) {
    std::size_t w = problem.next(z, j);
    if (w == z) {
      ws.base[j] = 0.0;
      ws.coef[j] = 1.0;
    } else if (problem.tied(w) && problem.anchor_of(w) == z) {
      ws.base[j] = 0.0;
      ws.coef[j] = problem.tie_factor(w);
    } else {
      ws.base[j] = u[w].value();
      ws.coef[j] = 0.0;
      if (ws.base[j] == inf) return inf;
    }
  }
  double a = u[z].value();
  for (int it = 0; it < 200; ++it) {
    for (std::size_t j = 0; j < nd; ++j) ws.vals[j] = ws.coef[j] == 0.0 ? ws.base[j] : ws.coef[j] * a;
    hull_indices(x, ws.vals.data(), nd, ws.hull);
    Located loc = locate(x, ws.vals.data(), ws.hull, 0.0);
    if (!(loc.value.value() > a)) break;
    double lam = loc.weight_left;
    double beta = lam * ws.coef[loc.left] + (1.0 - lam) * ws.coef[loc.right];
    double alpha = lam * ws.base[loc.left] + (1.0 - lam) * ws.base[loc.right];
    if (beta >= 1.0) return inf;
    double na = std::max(alpha / (1.0 - beta), loc.value.value());
    if (na > cap) return inf;
    double step = na - a;
    a = na;
    if (step <= 1e-13 * (1.0 + std::fabs(a))) break;
  }
  return a;
}

inline double change(ExtReal before, ExtReal after) {
  if (after == before) return 0.0;
  if (before.is_finite() && after.is_finite()) return std::fabs(after.value() - before.value());
  if (after.is_finite()) return std::numeric_limits<double>::infinity();
  return 0.0;
}

}  // namespace detail

inline GridFn apply_A(const ValidatedProblem& problem, const GridFn& g) {
  detail::check_length(problem, g, "grid function");
  const std::size_t n = problem.num_states();
  GridFn out(n);
  detail::Workspace ws(problem.num_increments());
  for (std::size_t z = 0; z < n; ++z) {
    if (problem.tied(z)) continue;
    if (problem.absorbing(z)) {
      out[z] = g[z];
      continue;
    }
    out[z] = max(detail::envelope_at_state(problem, g, z, ws), g[z]);
  }
  problem.propagate_ties(out);
  return out;
}

inline std::vector<GridFn> finite_horizon_value(const ValidatedProblem& problem, const GridFn& f, std::size_t T) {
  detail::check_length(problem, f, "payoff");
  std::vector<GridFn> out;
  out.reserve(T + 1);
  out.push_back(f);
  for (std::size_t t = 0; t < T; ++t) out.push_back(apply_A(problem, out.back()));
  return out;
}

inline double default_value_cap(const GridFn& f) {
  double m = 0.0;
  for (ExtReal v : f)
    if (v.is_finite()) m = std::max(m, std::fabs(v.value()));
  return 1e6 * (1.0 + m);
}

inline IterationReport iterate_to_fixed_point(const ValidatedProblem& problem, const GridFn& f,
                                              const IterationOptions& opts = {}) {
  detail::check_length(problem, f, "payoff");
  if (!(opts.tol > 0.0) || !std::isfinite(opts.tol)) throw Error(ErrorCode::BadTolerance, "tolerance must be positive");
  double cap = opts.value_cap ? *opts.value_cap : default_value_cap(f);
  double fmax = -std::numeric_limits<double>::infinity();
  for (ExtReal v : f) {
    if (v.is_pos_inf()) throw Error(ErrorCode::PlusInfinityPayoff, "payoff contains +inf");
    if (v.is_finite()) fmax = std::max(fmax, v.value());
  }
  if (std::isnan(cap) || !(cap > fmax)) throw Error(ErrorCode::BadCap, "value cap must exceed every finite payoff value");

  const std::size_t n = problem.num_states();
  IterationReport rep;
  GridFn u = f;
  problem.propagate_ties(u);
  detail::Workspace ws(problem.num_increments());

  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    rep.iterations = it;
    double delta = 0.0;
    if (opts.sweep == Sweep::Jacobi) {
      GridFn next = apply_A(problem, u);
      for (std::size_t z = 0; z < n; ++z) {
        if (next[z].value() > cap) {
          next[z] = ExtReal::pos_inf();
          rep.cap_hit_states.push_back(z);
        } else {
          delta = std::max(delta, detail::change(u[z], next[z]));
        }
      }
      u = std::move(next);
    } else {
      for (std::size_t z = 0; z < n && rep.cap_hit_states.empty(); ++z) {
        if (problem.tied(z) || problem.absorbing(z)) continue;
        double a = detail::local_root(problem, u, z, cap, ws);
        ExtReal nv = max(ExtReal(a), u[z]);
        if (nv.value() > cap) {
          u[z] = ExtReal::pos_inf();
          rep.cap_hit_states.push_back(z);
          for (std::size_t t : problem.dependents(z)) u[t] = ExtReal::pos_inf();
          break;
        }
        delta = std::max(delta, detail::change(u[z], nv));
        u[z] = nv;
        for (std::size_t t : problem.dependents(z)) {
          ExtReal tv = nv.scaled(problem.tie_factor(t));
          delta = std::max(delta, detail::change(u[t], tv));
          u[t] = tv;
        }
      }
    }
    rep.sup_delta = delta;
    if (!rep.cap_hit_states.empty()) {
      rep.status = Status::Diverged;
      rep.result = std::move(u);
      return rep;
    }
    if (delta <= opts.tol) {
      rep.status = Status::Converged;
      rep.result = std::move(u);
      return rep;
    }
  }
  rep.status = Status::MaxIterations;
  rep.result = std::move(u);
  return rep;
}

inline FixedPointReport verify_fixed_point(const ValidatedProblem& problem, const GridFn& u, const GridFn& f,
                                           double tol) {
  detail::check_length(problem, u, "candidate");
  detail::check_length(problem, f, "payoff");
  GridFn au = apply_A(problem, u);
  FixedPointReport rep;
  rep.worst_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t z = 0; z < u.size(); ++z) {
    if (u[z] < f[z]) rep.dominates = false;
    double gap = 0.0;
    if (au[z] != u[z]) {
      ExtReal d = au[z] - u[z];
      gap = d.is_neg_inf() ? 0.0 : d.value();
    }
    if (gap > rep.worst_gap) {
      rep.worst_gap = gap;
      rep.worst_state = z;
    }
  }
  rep.superfixed = rep.worst_gap <= tol;
  return rep;
}

inline Strategy extract_strategy(const ValidatedProblem& problem, const std::vector<GridFn>& value_tables,
                                 SupergradientPolicy policy = SupergradientPolicy::Midpoint) {
  if (value_tables.empty()) throw Error(ErrorCode::LengthMismatch, "no value tables");
  for (const GridFn& g : value_tables) detail::check_length(problem, g, "value table");
  const std::size_t T = value_tables.size() - 1;
  const std::size_t n = problem.num_states();
  const std::size_t nd = problem.num_increments();
  const double* x = problem.increments().values().data();
  detail::Workspace ws(nd);
  Strategy s;
  s.xi.assign(T, std::vector<HedgeRatio>(n));
  for (std::size_t t = 1; t <= T; ++t) {
    const GridFn& g = value_tables[T - t];
    for (std::size_t z = 0; z < n; ++z) {
      HedgeRatio& h = s.xi[t - 1][z];
      bool pinf = false;
      for (std::size_t j = 0; j < nd; ++j) {
        ws.vals[j] = g[problem.next(z, j)].value();
        if (ws.vals[j] == std::numeric_limits<double>::infinity()) pinf = true;
      }
      if (pinf) continue;
      detail::hull_indices(x, ws.vals.data(), nd, ws.hull);
      detail::Located loc = detail::locate(x, ws.vals.data(), ws.hull, 0.0);
      if (!loc.value.is_finite()) continue;
      if (loc.lo && loc.hi) {
        h.xi = select_supergradient(EnvelopeResult{loc.value, loc.lo, loc.hi}, policy);
        h.kind = RatioKind::Interior;
      } else if (loc.lo || loc.hi) {
        h.xi = loc.lo ? *loc.lo : *loc.hi;
        h.kind = RatioKind::OneSided;
      } else {
        h.xi = 0.0;
        h.kind = RatioKind::Isolated;
      }
    }
  }
  return s;
}

// Relative comparison: |u(b) - (s_b/s_a)^p u(a)| <= tol * max(1, |u(b)|).
inline bool check_homogeneity(const GridFn& u, const std::map<std::size_t, RayPoint>& ray_structure, double p,
                              double tol) {
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> rays;
  for (const auto& [z, rp] : ray_structure) {
    if (z >= u.size()) throw Error(ErrorCode::IndexOutOfRange, "ray structure names a missing state", z);
    rays[rp.ray].push_back({z, rp.scale});
  }
  for (const auto& [ray, members] : rays) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        ExtReal ua = u[members[i].first], ub = u[members[j].first];
        double ratio = std::pow(members[j].second / members[i].second, p);
        ExtReal want = ua.scaled(ratio);
        if (want == ub) continue;
        if (!want.is_finite() || !ub.is_finite()) return false;
        if (std::fabs(ub.value() - want.value()) > tol * std::max(1.0, std::fabs(ub.value()))) return false;
      }
    }
  }
  return true;
}

// Samples equal to -inf lie outside the admissible domain and are skipped.
inline bool check_submartingale_extension(const ValidatedProblem& problem, const GridFn& u) {
  detail::check_length(problem, u, "grid function");
  const auto& labels = problem.spec().state_labels;
  for (std::size_t z = 0; z < u.size(); ++z)
    if (!u[z].is_neg_inf() && !labels[z].has_coords())
      throw Error(ErrorCode::MissingCoordinates, "state " + std::to_string(z) + " has no coordinates", z);
  for (std::size_t z = 0; z < u.size(); ++z) {
    std::optional<double> prev;
    for (std::size_t j = 0; j < problem.num_increments(); ++j) {
      ExtReal v = u[problem.next(z, j)];
      if (v.is_neg_inf()) continue;
      if (prev && v.value() > *prev + 1e-12 * (1.0 + std::fabs(*prev))) return false;
      prev = v.value();
    }
  }
  return true;
}

}  // namespace mgineq
