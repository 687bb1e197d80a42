#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

#include "error.hpp"

namespace mgineq {

struct BurkholderParams {
  double p = 2.0;

  double p_star() const { return std::max(p, p / (p - 1.0)); }
  void validate() const {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidParameter, "p must exceed 1");
  }
};

// Arguments are the norms |x1|, |x2|.
inline double burkholder_payoff(const BurkholderParams& b, double x1, double x2) {
  return std::pow(x2, b.p) - std::pow(b.p_star() - 1.0, b.p) * std::pow(x1, b.p);
}

inline double burkholder_utilde(const BurkholderParams& b, double x1, double x2) {
  const double p = b.p, ps = b.p_star();
  return p * std::pow(1.0 - 1.0 / ps, p - 1.0) * (x2 - (ps - 1.0) * x1) * std::pow(x1 + x2, p - 1.0);
}

inline double burkholder_closed_form(const BurkholderParams& b, double x1, double x2) {
  b.validate();
  if (!(x1 >= 0.0) || !(x2 >= 0.0)) throw Error(ErrorCode::InvalidParameter, "norm arguments must be nonnegative");
  bool inner = x2 <= (b.p_star() - 1.0) * x1;
  if (b.p <= 2.0) return inner ? burkholder_utilde(b, x1, x2) : burkholder_payoff(b, x1, x2);
  return inner ? burkholder_payoff(b, x1, x2) : burkholder_utilde(b, x1, x2);
}

using Vec2 = std::array<double, 2>;

// A point of H x H with H = R^2.
struct PairState {
  Vec2 x1{};
  Vec2 x2{};
};

inline double norm(const Vec2& v) { return std::hypot(v[0], v[1]); }

inline PairState along(const PairState& z, const PairState& d, double r) {
  return {{z.x1[0] + r * d.x1[0], z.x1[1] + r * d.x1[1]}, {z.x2[0] + r * d.x2[0], z.x2[1] + r * d.x2[1]}};
}

inline double burkholder_u(const BurkholderParams& b, const PairState& z) {
  return burkholder_closed_form(b, norm(z.x1), norm(z.x2));
}

inline double burkholder_f(const BurkholderParams& b, const PairState& z) {
  return burkholder_payoff(b, norm(z.x1), norm(z.x2));
}

// Relative midpoint-concavity defect of r -> u(z + r d) on [r_lo, r_hi].
inline double burkholder_line_defect(const BurkholderParams& b, const PairState& z, const PairState& d, double r_lo,
                                     double r_hi) {
  double ua = burkholder_u(b, along(z, d, r_lo));
  double ub = burkholder_u(b, along(z, d, r_hi));
  double um = burkholder_u(b, along(z, d, 0.5 * (r_lo + r_hi)));
  double scale = 1.0 + std::max({std::fabs(ua), std::fabs(ub), std::fabs(um)});
  return (0.5 * (ua + ub) - um) / scale;
}

struct BurkholderVerifyReport {
  bool dominates = true;
  bool line_concave = true;
  double worst_dominance = -std::numeric_limits<double>::infinity();  // max f - u
  double worst_concavity = -std::numeric_limits<double>::infinity();  // max relative defect
  PairState worst_state{};
  PairState worst_direction{};
  double worst_r_lo = 0.0;
  double worst_r_hi = 0.0;
};

namespace detail {
inline PairState subordinate_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec2 d1{g(rng), g(rng)};
  Vec2 d2{g(rng), g(rng)};
  double n1 = norm(d1), n2 = norm(d2);
  double s = n2 > 0.0 ? unit(rng) * n1 / n2 : 0.0;
  return {d1, {s * d2[0], s * d2[1]}};
}
}  // namespace detail

// Dominance f <= u on sampled norm pairs, and midpoint concavity of u along
// sampled lines z + r d with |d2| <= |d1|.
inline BurkholderVerifyReport burkholder_verify(const BurkholderParams& b, std::size_t state_samples,
                                                std::size_t direction_samples, std::size_t ray_samples, double tol,
                                                std::uint64_t seed = 1) {
  b.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> nrm(0.0, 3.0);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  BurkholderVerifyReport rep;
  for (std::size_t i = 0; i < state_samples; ++i) {
    double x1 = nrm(rng), x2 = nrm(rng);
    double gap = burkholder_payoff(b, x1, x2) - burkholder_closed_form(b, x1, x2);
    rep.worst_dominance = std::max(rep.worst_dominance, gap);
  }
  rep.dominates = !(rep.worst_dominance > tol);
  for (std::size_t i = 0; i < direction_samples; ++i) {
    PairState z{{coord(rng), coord(rng)}, {coord(rng), coord(rng)}};
    PairState d = detail::subordinate_direction(rng);
    for (std::size_t k = 0; k < ray_samples; ++k) {
      double ra = coord(rng), rb = coord(rng);
      if (ra > rb) std::swap(ra, rb);
      double defect = burkholder_line_defect(b, z, d, ra, rb);
      if (defect > rep.worst_concavity) {
        rep.worst_concavity = defect;
        rep.worst_state = z;
        rep.worst_direction = d;
        rep.worst_r_lo = ra;
        rep.worst_r_hi = rb;
      }
    }
  }
  rep.line_concave = !(rep.worst_concavity > tol);
  return rep;
}

struct MonteCarloReport {
  double estimate = 0.0;
  double u0 = 0.0;
  double gap = 0.0;
  double standard_error = 0.0;
  bool flagged = false;  // gap above 3 standard errors
};

// Simple subordinate martingale pairs: each step moves by +a (d1, d2) with
// probability b/(a+b) and by -b (d1, d2) otherwise, with |d2| <= |d1|.
inline MonteCarloReport burkholder_mc_check(const BurkholderParams& b, const PairState& z0, std::size_t T,
                                            std::size_t n_paths, std::uint64_t seed) {
  b.validate();
  if (n_paths == 0) throw Error(ErrorCode::InvalidParameter, "at least one path is required");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> size(0.2, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < n_paths; ++k) {
    PairState z = z0;
    for (std::size_t t = 0; t < T; ++t) {
      PairState d = detail::subordinate_direction(rng);
      double up = size(rng), down = size(rng);
      double r = unit(rng) < down / (up + down) ? up : -down;
      z = along(z, d, r);
    }
    double v = burkholder_f(b, z);
    double delta = v - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (v - mean);
  }
  MonteCarloReport rep;
  rep.estimate = mean;
  rep.u0 = burkholder_u(b, z0);
  rep.gap = mean - rep.u0;
  rep.standard_error = n_paths > 1 ? std::sqrt(m2 / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths)) : 0.0;
  rep.flagged = rep.gap > 3.0 * rep.standard_error;
  return rep;
}

}  // namespace mgineq
