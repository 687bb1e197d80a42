#pragma once

#include <algorithm>
#include <cstddef>
#include <random>
#include <set>
#include <vector>

#include <mgineq/mgineq.hpp>

namespace testsupport {

using namespace mgineq;

inline SampledFn random_samples(std::mt19937_64& rng, std::size_t max_points = 25, double neg_inf_share = 0.2) {
  std::uniform_int_distribution<std::size_t> count(1, max_points);
  std::uniform_real_distribution<double> abscissa(-5.0, 5.0);
  std::uniform_real_distribution<double> value(-10.0, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t n = count(rng);
  std::set<double> xs;
  // Half of the instances put a sample exactly at the origin.
  if (unit(rng) < 0.5) xs.insert(0.0);
  while (xs.size() < n) xs.insert(abscissa(rng));
  SampledFn fn;
  for (double x : xs) fn.push_back({x, unit(rng) < neg_inf_share ? ExtReal::neg_inf() : ExtReal(value(rng))});
  return fn;
}

inline std::vector<oracle::Atom> to_atoms(const SampledFn& fn) {
  std::vector<oracle::Atom> out;
  for (const auto& s : fn) out.push_back({s.d, s.v});
  return out;
}

inline ProblemSpec random_problem(std::mt19937_64& rng, std::size_t max_states = 6, std::size_t max_increments = 5,
                                  double neg_inf_share = 0.2) {
  std::uniform_int_distribution<std::size_t> ns(1, max_states);
  std::uniform_int_distribution<std::size_t> nd(1, max_increments);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> value(-10.0, 10.0);
  std::uniform_real_distribution<double> inc(-3.0, 3.0);
  const std::size_t n = ns(rng), k = nd(rng);
  std::set<double> d{0.0};
  while (d.size() < k) d.insert(inc(rng));
  ProblemSpec spec;
  spec.increments = IncrementGrid(std::vector<double>(d.begin(), d.end()));
  spec.transition = TransitionTable(n, k);
  std::uniform_int_distribution<std::size_t> st(0, n - 1);
  for (std::size_t z = 0; z < n; ++z) {
    std::vector<TransitionTable::StateId> row(k);
    for (std::size_t j = 0; j < k; ++j)
      row[j] = static_cast<TransitionTable::StateId>(j == spec.increments.zero_index() ? z : st(rng));
    spec.transition.set_row(z, std::move(row));
    spec.state_labels.push_back(StateLabel::at(static_cast<double>(z)));
    spec.payoff.push_back(unit(rng) < neg_inf_share ? ExtReal::neg_inf() : ExtReal(value(rng)));
  }
  spec.initial_state = st(rng);
  return spec;
}

inline GridFn random_grid_fn(std::mt19937_64& rng, std::size_t n, double neg_inf_share = 0.2) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> value(-10.0, 10.0);
  GridFn g(n);
  for (auto& v : g) v = unit(rng) < neg_inf_share ? ExtReal::neg_inf() : ExtReal(value(rng));
  return g;
}

// Children of a node at x: uniform values in [lo, hi] with exponentially tilted
// weights whose mean is x.
inline void add_random_children(MartingaleTree& tree, std::size_t parent, std::size_t count, double lo, double hi,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  const double x = tree.nodes[parent].x[0];
  std::vector<double> xs;
  for (;;) {
    xs.clear();
    for (std::size_t i = 0; i < count; ++i) xs.push_back(u(rng));
    auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    if (*mn < x && x < *mx) break;
  }
  auto weights = [&](double theta) {
    double m = *std::max_element(xs.begin(), xs.end(), [&](double a, double b) { return theta * a < theta * b; });
    std::vector<double> w;
    double s = 0.0;
    for (double v : xs) {
      w.push_back(std::exp(theta * (v - m)));
      s += w.back();
    }
    for (double& v : w) v /= s;
    return w;
  };
  auto mean = [&](double theta) {
    auto w = weights(theta);
    double m = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) m += w[i] * xs[i];
    return m;
  };
  double a = -50.0, b = 50.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (a + b);
    (mean(mid) < x ? a : b) = mid;
  }
  auto w = weights(0.5 * (a + b));
  // Absorb the residual mean error into the extreme atoms exactly.
  double m = 0.0, s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    m += w[i] * xs[i];
    s += w[i];
  }
  for (double& v : w) v /= s;
  m /= s;
  std::size_t imin = static_cast<std::size_t>(std::min_element(xs.begin(), xs.end()) - xs.begin());
  std::size_t imax = static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
  double shift = (x - m) / (xs[imax] - xs[imin]);
  w[imax] += shift;
  w[imin] -= shift;
  for (std::size_t i = 0; i < xs.size(); ++i) tree.add_child(parent, w[i], {xs[i]});
}

// n = 1 tree of horizon T with `width` children per node, values in [-5, 5].
inline MartingaleTree random_tree(std::mt19937_64& rng, std::size_t T, std::size_t width) {
  MartingaleTree tree = MartingaleTree::with_root({0.0});
  std::vector<std::size_t> level{0};
  for (std::size_t t = 1; t <= T; ++t) {
    std::vector<std::size_t> next;
    double bound = t == T ? 5.0 : 4.0;
    for (std::size_t v : level) {
      std::size_t first = tree.nodes.size();
      add_random_children(tree, v, width, -bound, bound, rng);
      for (std::size_t c = first; c < tree.nodes.size(); ++c) next.push_back(c);
    }
    level = std::move(next);
  }
  tree.T = T;
  return tree;
}

}  // namespace testsupport
