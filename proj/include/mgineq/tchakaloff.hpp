#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace mgineq {

struct Atom {
  double weight = 0.0;
  std::vector<double> v;
};

struct KeptAtom {
  double weight = 0.0;
  std::size_t index = 0;
};

namespace detail {

// Nonzero kernel vector of the m x k column matrix (k > m) by Gauss-Jordan
// elimination with partial pivoting.
inline std::vector<double> kernel_vector(std::vector<std::vector<double>> a, std::size_t k) {
  const std::size_t m = a.size();
  double scale = 0.0;
  for (const auto& row : a)
    for (double v : row) scale = std::max(scale, std::fabs(v));
  const double eps = 1e-12 * scale;
  std::vector<std::size_t> pivot_col;
  std::vector<char> is_pivot(k, 0);
  std::size_t r = 0;
  for (std::size_t c = 0; c < k && r < m; ++c) {
    std::size_t best = r;
    for (std::size_t i = r + 1; i < m; ++i)
      if (std::fabs(a[i][c]) > std::fabs(a[best][c])) best = i;
    if (!(std::fabs(a[best][c]) > eps)) continue;
    std::swap(a[r], a[best]);
    double piv = a[r][c];
    for (std::size_t j = 0; j < k; ++j) a[r][j] /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r || a[i][c] == 0.0) continue;
      double fct = a[i][c];
      for (std::size_t j = 0; j < k; ++j) a[i][j] -= fct * a[r][j];
    }
    pivot_col.push_back(c);
    is_pivot[c] = 1;
    ++r;
  }
  std::size_t free = k;
  for (std::size_t c = 0; c < k; ++c)
    if (!is_pivot[c]) {
      free = c;
      break;
    }
  if (free == k) throw Error(ErrorCode::DegenerateKernel, "elimination found no free column");
  std::vector<double> out(k, 0.0);
  out[free] = 1.0;
  for (std::size_t i = 0; i < pivot_col.size(); ++i) out[pivot_col[i]] = -a[i][free];
  for (double v : out)
    if (!std::isfinite(v)) throw Error(ErrorCode::DegenerateKernel, "kernel vector is not finite");
  return out;
}

}  // namespace detail

// Keeps at most m atoms (m = vector length) with positive weights so that
// sum(weight * v) is unchanged up to rounding.
inline std::vector<KeptAtom> caratheodory_reduce(const std::vector<Atom>& atoms, double tol = 1e-12) {
  if (atoms.empty()) return {};
  const std::size_t m = atoms.front().v.size();
  if (m == 0) throw Error(ErrorCode::InvalidParameter, "atom vectors must be nonempty");
  if (!(tol >= 0.0)) throw Error(ErrorCode::BadTolerance, "tolerance must be nonnegative");
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].v.size() != m) throw Error(ErrorCode::LengthMismatch, "atom " + std::to_string(i) + " has a different dimension");
    if (!(atoms[i].weight > 0.0) || !std::isfinite(atoms[i].weight))
      throw Error(ErrorCode::InvalidParameter, "atom " + std::to_string(i) + " has a non-positive weight");
  }
  std::vector<std::size_t> active(atoms.size());
  std::vector<double> w(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    active[i] = i;
    w[i] = atoms[i].weight;
  }
  while (active.size() > m) {
    const std::size_t k = m + 1;
    std::vector<std::vector<double>> a(m, std::vector<double>(k));
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t r = 0; r < m; ++r) a[r][c] = atoms[active[c]].v[r];
    std::vector<double> c = detail::kernel_vector(std::move(a), k);
    if (std::none_of(c.begin(), c.end(), [](double x) { return x > 0.0; }))
      for (double& x : c) x = -x;
    double tstar = 0.0;
    std::size_t hit = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (c[i] <= 0.0) continue;
      double t = w[active[i]] / c[i];
      if (hit == k || t < tstar) {
        tstar = t;
        hit = i;
      }
    }
    for (std::size_t i = 0; i < k; ++i) w[active[i]] -= tstar * c[i];
    w[active[hit]] = 0.0;
    double wmax = 0.0;
    for (std::size_t i : active) wmax = std::max(wmax, w[i]);
    std::erase_if(active, [&](std::size_t i) { return w[i] <= tol * wmax; });
  }
  std::vector<KeptAtom> out;
  out.reserve(active.size());
  for (std::size_t i : active) out.push_back({w[i], i});
  return out;
}

struct Child {
  double weight = 0.0;
  std::vector<double> x;
};

// Reduces the children of one node to at most n + k + 1 while keeping total
// mass, barycenter and the weighted sum of f_values.
inline std::vector<KeptAtom> reduce_one_step(const std::vector<double>& parent_x, const std::vector<Child>& children,
                                             const std::vector<std::vector<double>>& f_values, double tol = 1e-12) {
  if (children.size() != f_values.size()) throw Error(ErrorCode::LengthMismatch, "one payoff vector per child is required");
  std::vector<Atom> atoms;
  atoms.reserve(children.size());
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (children[i].x.size() != parent_x.size()) throw Error(ErrorCode::LengthMismatch, "child dimension differs from parent");
    Atom a{children[i].weight, f_values[i]};
    a.v.insert(a.v.end(), children[i].x.begin(), children[i].x.end());
    a.v.push_back(1.0);
    atoms.push_back(std::move(a));
  }
  return caratheodory_reduce(atoms, tol);
}

struct TreeNode {
  std::vector<double> x;
  double w = 1.0;  // conditional weight given the parent
  std::size_t parent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> children;
  std::size_t depth = 0;
  std::size_t source = 0;  // node id in the tree this one was derived from
};

struct MartingaleTree {
  std::size_t n = 1;
  std::size_t T = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  static MartingaleTree with_root(std::vector<double> x0) {
    MartingaleTree t;
    t.n = x0.size();
    TreeNode root;
    root.x = std::move(x0);
    t.nodes.push_back(std::move(root));
    return t;
  }

  std::size_t add_child(std::size_t parent, double w, std::vector<double> x) {
    TreeNode node;
    node.x = std::move(x);
    node.w = w;
    node.parent = parent;
    node.depth = nodes[parent].depth + 1;
    node.source = nodes.size();
    nodes.push_back(std::move(node));
    nodes[parent].children.push_back(nodes.size() - 1);
    T = std::max(T, nodes.back().depth);
    return nodes.size() - 1;
  }

  // Leaf ids in depth-first order; this order defines leaf indices.
  std::vector<std::size_t> leaves() const {
    std::vector<std::size_t> out, stack{0};
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      if (nodes[v].children.empty()) out.push_back(v);
      for (auto it = nodes[v].children.rbegin(); it != nodes[v].children.rend(); ++it) stack.push_back(*it);
    }
    return out;
  }

  // Root-to-node coordinates, flattened.
  std::vector<double> path(std::size_t v) const {
    std::vector<std::size_t> chain;
    for (std::size_t u = v; u != static_cast<std::size_t>(-1); u = nodes[u].parent) chain.push_back(u);
    std::vector<double> out;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) out.insert(out.end(), nodes[*it].x.begin(), nodes[*it].x.end());
    return out;
  }

  double path_probability(std::size_t v) const {
    double p = 1.0;
    for (std::size_t u = v; u != 0; u = nodes[u].parent) p *= nodes[u].w;
    return p;
  }
};

struct TreeDefects {
  double weight_sum = 0.0;   // max |sum w - 1|
  double barycenter = 0.0;   // max |sum w x - x_parent|
};

inline TreeDefects tree_defects(const MartingaleTree& tree) {
  TreeDefects d;
  for (const TreeNode& node : tree.nodes) {
    if (node.children.empty()) continue;
    double sw = 0.0;
    std::vector<double> bary(tree.n, 0.0);
    for (std::size_t c : node.children) {
      sw += tree.nodes[c].w;
      for (std::size_t i = 0; i < tree.n; ++i) bary[i] += tree.nodes[c].w * tree.nodes[c].x[i];
    }
    d.weight_sum = std::max(d.weight_sum, std::fabs(sw - 1.0));
    for (std::size_t i = 0; i < tree.n; ++i) d.barycenter = std::max(d.barycenter, std::fabs(bary[i] - node.x[i]));
  }
  return d;
}

inline void validate_tree(const MartingaleTree& tree) {
  if (tree.nodes.empty()) throw Error(ErrorCode::InvalidTree, "tree has no root");
  if (tree.n == 0) throw Error(ErrorCode::InvalidTree, "dimension must be positive");
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    const TreeNode& node = tree.nodes[v];
    if (node.x.size() != tree.n) throw Error(ErrorCode::InvalidTree, "node " + std::to_string(v) + " has the wrong dimension");
    for (double c : node.x)
      if (!std::isfinite(c)) throw Error(ErrorCode::InvalidTree, "node " + std::to_string(v) + " has a non-finite coordinate");
    if (v > 0 && !(node.w > 0.0 && std::isfinite(node.w)))
      throw Error(ErrorCode::InvalidTree, "node " + std::to_string(v) + " has a non-positive weight");
    if (node.children.empty() && node.depth != tree.T)
      throw Error(ErrorCode::InvalidTree, "leaf " + std::to_string(v) + " is at depth " + std::to_string(node.depth) +
                                              ", expected " + std::to_string(tree.T));
    if (node.children.empty()) continue;
    double sw = 0.0;
    std::vector<double> bary(tree.n, 0.0);
    for (std::size_t c : node.children) {
      sw += tree.nodes[c].w;
      for (std::size_t i = 0; i < tree.n; ++i) bary[i] += tree.nodes[c].w * tree.nodes[c].x[i];
    }
    if (std::fabs(sw - 1.0) > 1e-12)
      throw Error(ErrorCode::InvalidTree, "weights at node " + std::to_string(v) + " sum to " + std::to_string(sw));
    for (std::size_t i = 0; i < tree.n; ++i)
      if (std::fabs(bary[i] - node.x[i]) > 1e-10)
        throw Error(ErrorCode::InvalidTree, "children of node " + std::to_string(v) + " do not average to the node value");
  }
}

struct ReductionReport {
  MartingaleTree reduced;
  std::size_t support_before = 0;
  std::size_t support_after = 0;
  double moment_error = 0.0;
  double martingale_error = 0.0;
  std::vector<double> moments_before;
  std::vector<double> moments_after;
};

namespace detail {

struct TreeReducer {
  const MartingaleTree& tree;
  double tol;
  std::vector<double> w;
  std::vector<std::vector<std::size_t>> kids;
  std::vector<std::vector<double>> h;
  std::vector<std::vector<std::size_t>> by_depth;

  TreeReducer(const MartingaleTree& t, double tol_) : tree(t), tol(tol_) {
    const std::size_t nn = t.nodes.size();
    w.resize(nn);
    kids.resize(nn);
    h.resize(nn);
    by_depth.resize(t.T + 1);
    for (std::size_t v = 0; v < nn; ++v) {
      w[v] = t.nodes[v].w;
      kids[v] = t.nodes[v].children;
      by_depth[t.nodes[v].depth].push_back(v);
    }
  }

  // h holds payoff vectors at depth L. Afterwards every surviving node above
  // depth L has at most n + k + 1 children and the weighted sum of h over
  // depth L is unchanged.
  void reduce_to(std::size_t L) {
    if (L == 0) return;
    for (std::size_t v : by_depth[L - 1]) {
      std::vector<double> g(h[kids[v].front()].size(), 0.0);
      for (std::size_t c : kids[v])
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += w[c] * h[c][i];
      h[v] = std::move(g);
    }
    reduce_to(L - 1);
    for (std::size_t v : surviving(L - 1)) {
      std::vector<Child> ch;
      std::vector<std::vector<double>> fv;
      for (std::size_t c : kids[v]) {
        ch.push_back({w[c], tree.nodes[c].x});
        fv.push_back(h[c]);
      }
      std::vector<KeptAtom> kept = reduce_one_step(tree.nodes[v].x, ch, fv, tol);
      std::vector<std::size_t> nk;
      for (const KeptAtom& a : kept) {
        std::size_t c = kids[v][a.index];
        w[c] = a.weight;
        nk.push_back(c);
      }
      kids[v] = std::move(nk);
    }
  }

  std::vector<std::size_t> surviving(std::size_t depth) const {
    std::vector<std::size_t> level{0};
    for (std::size_t d = 0; d < depth; ++d) {
      std::vector<std::size_t> next;
      for (std::size_t v : level) next.insert(next.end(), kids[v].begin(), kids[v].end());
      level = std::move(next);
    }
    return level;
  }
};

}  // namespace detail

inline std::vector<double> expectation(const MartingaleTree& tree, const std::vector<std::vector<double>>& leaf_values) {
  std::vector<std::size_t> leaves = tree.leaves();
  std::vector<double> out;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    double p = tree.path_probability(leaves[i]);
    if (out.empty()) out.assign(leaf_values[i].size(), 0.0);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += p * leaf_values[i][j];
  }
  return out;
}

// leaf_values[i] is f on the i-th leaf path (depth-first leaf order).
inline ReductionReport reduce_martingale_tree(const MartingaleTree& tree,
                                              const std::vector<std::vector<double>>& leaf_values, double tol = 1e-12) {
  validate_tree(tree);
  std::vector<std::size_t> leaves = tree.leaves();
  if (leaf_values.size() != leaves.size())
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(leaves.size()) + " leaf payoff vectors");
  const std::size_t k = leaf_values.empty() ? 0 : leaf_values.front().size();
  for (const auto& v : leaf_values)
    if (v.size() != k || k == 0) throw Error(ErrorCode::LengthMismatch, "leaf payoff vectors must share a positive length");

  detail::TreeReducer red(tree, tol);
  for (std::size_t i = 0; i < leaves.size(); ++i) red.h[leaves[i]] = leaf_values[i];
  red.reduce_to(tree.T);

  ReductionReport rep;
  rep.support_before = leaves.size();
  MartingaleTree& out = rep.reduced;
  out = MartingaleTree::with_root(tree.nodes[0].x);
  out.T = tree.T;
  out.nodes[0].source = 0;
  auto copy = [&](auto&& self, std::size_t src, std::size_t dst) -> void {
    for (std::size_t c : red.kids[src]) {
      std::size_t d = out.add_child(dst, red.w[c], tree.nodes[c].x);
      out.nodes[d].source = c;
      self(self, c, d);
    }
  };
  copy(copy, 0, 0);
  out.T = tree.T;

  std::vector<std::size_t> new_leaves = out.leaves();
  rep.support_after = new_leaves.size();
  std::vector<std::size_t> leaf_index(tree.nodes.size(), 0);
  for (std::size_t i = 0; i < leaves.size(); ++i) leaf_index[leaves[i]] = i;
  std::vector<std::vector<double>> new_values;
  for (std::size_t v : new_leaves) new_values.push_back(leaf_values[leaf_index[out.nodes[v].source]]);
  rep.moments_before = expectation(tree, leaf_values);
  rep.moments_after = expectation(out, new_values);
  for (std::size_t j = 0; j < k; ++j)
    rep.moment_error = std::max(rep.moment_error, std::fabs(rep.moments_after[j] - rep.moments_before[j]));
  TreeDefects d = tree_defects(out);
  rep.martingale_error = std::max(d.weight_sum, d.barycenter);
  return rep;
}

template <class PathFn>
  requires std::invocable<PathFn&, const std::vector<double>&>
ReductionReport reduce_martingale_tree(const MartingaleTree& tree, PathFn&& f, double tol = 1e-12) {
  std::vector<std::vector<double>> values;
  for (std::size_t v : tree.leaves()) values.push_back(f(tree.path(v)));
  return reduce_martingale_tree(tree, values, tol);
}

}  // namespace mgineq
