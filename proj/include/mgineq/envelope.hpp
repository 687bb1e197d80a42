#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "core_types.hpp"
#include "error.hpp"

namespace mgineq {

struct SamplePoint {
  double d = 0.0;
  ExtReal v;
};

using SampledFn = std::vector<SamplePoint>;

struct EnvelopeResult {
  ExtReal value = ExtReal::neg_inf();
  std::optional<double> superdiff_lo;
  std::optional<double> superdiff_hi;
};

enum class SupergradientPolicy { Midpoint, Lower, Upper };

namespace detail {

// Upper hull over the finite entries of (x, v); x strictly increasing, v free of +inf.
inline void hull_indices(const double* x, const double* v, std::size_t n, std::vector<std::size_t>& hull) {
  hull.clear();
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(v[j])) continue;
    while (hull.size() >= 2) {
      std::size_t a = hull[hull.size() - 2], b = hull.back();
      double cross = (x[b] - x[a]) * (v[j] - v[a]) - (v[b] - v[a]) * (x[j] - x[a]);
      if (cross >= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(j);
  }
}

struct Located {
  ExtReal value = ExtReal::neg_inf();
  std::size_t left = 0;
  std::size_t right = 0;
  double weight_left = 1.0;
  std::optional<double> lo;
  std::optional<double> hi;
};

inline double slope(const double* x, const double* v, std::size_t a, std::size_t b) {
  return (v[b] - v[a]) / (x[b] - x[a]);
}

inline Located locate(const double* x, const double* v, const std::vector<std::size_t>& hull, double q) {
  Located out;
  if (hull.empty() || q < x[hull.front()] || q > x[hull.back()]) return out;
  auto it = std::upper_bound(hull.begin(), hull.end(), q, [&](double val, std::size_t idx) { return val < x[idx]; });
  std::size_t k = static_cast<std::size_t>(it - hull.begin()) - 1;
  std::size_t a = hull[k];
  if (x[a] == q) {
    out.value = v[a];
    out.left = out.right = a;
    out.weight_left = 1.0;
    if (k > 0) out.hi = slope(x, v, hull[k - 1], a);
    if (k + 1 < hull.size()) out.lo = slope(x, v, a, hull[k + 1]);
    return out;
  }
  std::size_t b = hull[k + 1];
  double lam = (x[b] - q) / (x[b] - x[a]);
  out.value = lam * v[a] + (1.0 - lam) * v[b];
  out.left = a;
  out.right = b;
  out.weight_left = lam;
  out.lo = out.hi = slope(x, v, a, b);
  return out;
}

}  // namespace detail

inline void validate_samples(const SampledFn& fn) {
  if (fn.empty()) throw Error(ErrorCode::InvalidSamples, "sampled function has no points");
  for (std::size_t j = 0; j < fn.size(); ++j) {
    if (!std::isfinite(fn[j].d)) throw Error(ErrorCode::InvalidSamples, "abscissa " + std::to_string(j) + " is not finite");
    if (j > 0 && !(fn[j - 1].d < fn[j].d))
      throw Error(ErrorCode::InvalidSamples, "abscissas must be strictly increasing at index " + std::to_string(j));
    if (std::isnan(fn[j].v.value())) throw Error(ErrorCode::NotANumber, "sample value " + std::to_string(j) + " is NaN");
    if (fn[j].v.is_pos_inf()) throw Error(ErrorCode::PlusInfinityValue, "sample value " + std::to_string(j) + " is +inf");
  }
}

// Piecewise-linear concave majorant; identically -inf when it has no vertices.
struct HullFn {
  std::vector<SamplePoint> vertices;

  bool empty() const { return vertices.empty(); }

  ExtReal operator()(double q) const {
    if (vertices.empty() || q < vertices.front().d || q > vertices.back().d) return ExtReal::neg_inf();
    auto it = std::upper_bound(vertices.begin(), vertices.end(), q, [](double val, const SamplePoint& s) { return val < s.d; });
    std::size_t k = static_cast<std::size_t>(it - vertices.begin()) - 1;
    if (vertices[k].d == q) return vertices[k].v;
    const SamplePoint& a = vertices[k];
    const SamplePoint& b = vertices[k + 1];
    double lam = (b.d - q) / (b.d - a.d);
    return lam * a.v.value() + (1.0 - lam) * b.v.value();
  }
};

namespace detail {
inline void split(const SampledFn& fn, std::vector<double>& x, std::vector<double>& v) {
  x.resize(fn.size());
  v.resize(fn.size());
  for (std::size_t j = 0; j < fn.size(); ++j) {
    x[j] = fn[j].d;
    v[j] = fn[j].v.value();
  }
}
}  // namespace detail

inline HullFn upper_concave_hull(const SampledFn& fn) {
  validate_samples(fn);
  std::vector<double> x, v;
  std::vector<std::size_t> idx;
  detail::split(fn, x, v);
  detail::hull_indices(x.data(), v.data(), x.size(), idx);
  HullFn out;
  out.vertices.reserve(idx.size());
  for (std::size_t i : idx) out.vertices.push_back(fn[i]);
  return out;
}

inline EnvelopeResult envelope_at(const SampledFn& fn, double query) {
  validate_samples(fn);
  std::vector<double> x, v;
  std::vector<std::size_t> idx;
  detail::split(fn, x, v);
  detail::hull_indices(x.data(), v.data(), x.size(), idx);
  detail::Located loc = detail::locate(x.data(), v.data(), idx, query);
  return EnvelopeResult{loc.value, loc.lo, loc.hi};
}

inline double select_supergradient(const EnvelopeResult& res,
                                   SupergradientPolicy policy = SupergradientPolicy::Midpoint) {
  if (!res.value.is_finite() || !res.superdiff_lo || !res.superdiff_hi)
    throw Error(ErrorCode::UndefinedSuperdifferential, "superdifferential has an undefined side");
  double lo = *res.superdiff_lo, hi = *res.superdiff_hi;
  switch (policy) {
    case SupergradientPolicy::Lower: return lo;
    case SupergradientPolicy::Upper: return hi;
    case SupergradientPolicy::Midpoint: break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace mgineq
