#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace mgineq {

// Extended real with the convention (+inf) + (-inf) = -inf.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : v_(v) {}

  static constexpr ExtReal neg_inf() { return ExtReal(-std::numeric_limits<double>::infinity()); }
  static constexpr ExtReal pos_inf() { return ExtReal(std::numeric_limits<double>::infinity()); }

  constexpr double value() const { return v_; }
  bool is_finite() const { return std::isfinite(v_); }
  constexpr bool is_neg_inf() const { return v_ == -std::numeric_limits<double>::infinity(); }
  constexpr bool is_pos_inf() const { return v_ == std::numeric_limits<double>::infinity(); }

  friend constexpr ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.is_neg_inf() || b.is_neg_inf()) return neg_inf();
    return ExtReal(a.v_ + b.v_);
  }
  friend constexpr ExtReal operator-(ExtReal a) { return ExtReal(-a.v_); }
  friend constexpr ExtReal operator-(ExtReal a, ExtReal b) { return a + (-b); }

  // Nonnegative scaling with 0 * inf = 0.
  constexpr ExtReal scaled(double lambda) const {
    if (lambda == 0.0) return ExtReal(0.0);
    return ExtReal(lambda * v_);
  }

  friend constexpr bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }
  friend constexpr std::partial_ordering operator<=>(ExtReal a, ExtReal b) { return a.v_ <=> b.v_; }

 private:
  double v_ = 0.0;
};

inline ExtReal max(ExtReal a, ExtReal b) { return a < b ? b : a; }
inline ExtReal min(ExtReal a, ExtReal b) { return b < a ? b : a; }

using GridFn = std::vector<ExtReal>;

class IncrementGrid {
 public:
  IncrementGrid() = default;

  explicit IncrementGrid(std::vector<double> increments) : d_(std::move(increments)) {
    if (d_.empty()) throw Error(ErrorCode::MissingZeroIncrement, "increment grid is empty");
    for (std::size_t j = 0; j < d_.size(); ++j) {
      if (!std::isfinite(d_[j])) throw Error(ErrorCode::InvalidIncrements, "increment " + std::to_string(j) + " is not finite");
      if (j > 0 && !(d_[j - 1] < d_[j]))
        throw Error(ErrorCode::InvalidIncrements, "increments must be strictly increasing at index " + std::to_string(j));
    }
    std::size_t zeros = 0;
    for (std::size_t j = 0; j < d_.size(); ++j) {
      if (d_[j] == 0.0) {
        zero_index_ = j;
        ++zeros;
      }
    }
    if (zeros != 1) throw Error(ErrorCode::MissingZeroIncrement, "increment grid does not contain 0");
  }

  std::size_t size() const { return d_.size(); }
  double operator[](std::size_t j) const { return d_[j]; }
  const std::vector<double>& values() const { return d_; }
  std::size_t zero_index() const { return zero_index_; }

  friend bool operator==(const IncrementGrid&, const IncrementGrid&) = default;

 private:
  std::vector<double> d_;
  std::size_t zero_index_ = 0;
};

// Rows are stored per state; an empty row means the state is absorbing.
class TransitionTable {
 public:
  using StateId = std::uint32_t;

  TransitionTable() = default;
  TransitionTable(std::size_t n_states, std::size_t n_increments) : rows_(n_states), n_increments_(n_increments) {}

  std::size_t num_states() const { return rows_.size(); }
  std::size_t num_increments() const { return n_increments_; }

  void set_row(std::size_t z, std::vector<StateId> row) {
    if (z >= rows_.size()) throw Error(ErrorCode::IndexOutOfRange, "transition row index out of range", z);
    if (row.size() != n_increments_)
      throw Error(ErrorCode::LengthMismatch, "transition row length differs from increment count", z);
    rows_[z] = std::move(row);
  }
  void set_absorbing(std::size_t z) {
    if (z >= rows_.size()) throw Error(ErrorCode::IndexOutOfRange, "transition row index out of range", z);
    rows_[z].clear();
  }

  bool absorbing(std::size_t z) const { return rows_[z].empty(); }
  std::size_t next(std::size_t z, std::size_t j) const { return rows_[z].empty() ? z : rows_[z][j]; }
  const std::vector<StateId>& row(std::size_t z) const { return rows_[z]; }

  friend bool operator==(const TransitionTable&, const TransitionTable&) = default;

 private:
  std::vector<std::vector<StateId>> rows_;
  std::size_t n_increments_ = 0;
};

struct StateLabel {
  std::string name;
  std::vector<double> coords;

  static StateLabel named(std::string n) { return StateLabel{std::move(n), {}}; }
  static StateLabel at(std::vector<double> c) { return StateLabel{{}, std::move(c)}; }
  static StateLabel at(double c) { return StateLabel{{}, {c}}; }

  bool has_coords() const { return !coords.empty(); }
  friend bool operator==(const StateLabel&, const StateLabel&) = default;
};

inline std::string to_string(const StateLabel& label) {
  if (!label.has_coords()) return label.name;
  std::string out;
  for (std::size_t i = 0; i < label.coords.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", label.coords[i]);
    if (i > 0) out += ' ';
    out += buf;
  }
  return out;
}

// A tied state always carries factor * value(anchor).
struct Tie {
  std::size_t state = 0;
  std::size_t anchor = 0;
  double factor = 1.0;
  friend bool operator==(const Tie&, const Tie&) = default;
};

struct ProblemSpec {
  std::vector<StateLabel> state_labels;
  IncrementGrid increments;
  TransitionTable transition;
  GridFn payoff;
  std::size_t initial_state = 0;
  std::vector<Tie> ties;

  std::size_t num_states() const { return state_labels.size(); }
  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

class ValidatedProblem;
ValidatedProblem validate_problem(ProblemSpec spec);

class ValidatedProblem {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  const ProblemSpec& spec() const { return spec_; }
  std::size_t num_states() const { return spec_.num_states(); }
  std::size_t num_increments() const { return spec_.increments.size(); }
  const IncrementGrid& increments() const { return spec_.increments; }
  std::size_t next(std::size_t z, std::size_t j) const { return spec_.transition.next(z, j); }
  bool absorbing(std::size_t z) const { return spec_.transition.absorbing(z); }
  const GridFn& payoff() const { return spec_.payoff; }
  std::size_t initial_state() const { return spec_.initial_state; }

  bool tied(std::size_t z) const { return anchor_[z] != npos; }
  std::size_t anchor_of(std::size_t z) const { return anchor_[z]; }
  double tie_factor(std::size_t z) const { return factor_[z]; }
  const std::vector<std::size_t>& dependents(std::size_t z) const { return dependents_[z]; }

  // Overwrites tied entries with factor * value(anchor).
  void propagate_ties(GridFn& g) const {
    for (const Tie& t : spec_.ties) g[t.state] = g[t.anchor].scaled(t.factor);
  }

 private:
  friend ValidatedProblem validate_problem(ProblemSpec spec);
  explicit ValidatedProblem(ProblemSpec spec) : spec_(std::move(spec)) {}

  ProblemSpec spec_;
  std::vector<std::size_t> anchor_;
  std::vector<double> factor_;
  std::vector<std::vector<std::size_t>> dependents_;
};

inline ValidatedProblem validate_problem(ProblemSpec spec) {
  const std::size_t n = spec.num_states();
  if (n == 0) throw Error(ErrorCode::IndexOutOfRange, "problem has no states");
  if (spec.increments.size() == 0) throw Error(ErrorCode::MissingZeroIncrement, "increment grid is empty");
  if (spec.transition.num_states() != n)
    throw Error(ErrorCode::LengthMismatch, "transition table has " + std::to_string(spec.transition.num_states()) +
                                               " rows for " + std::to_string(n) + " states");
  if (spec.transition.num_increments() != spec.increments.size())
    throw Error(ErrorCode::LengthMismatch, "transition table width differs from increment count");
  if (spec.payoff.size() != n) throw Error(ErrorCode::LengthMismatch, "payoff length differs from state count");
  if (spec.initial_state >= n) throw Error(ErrorCode::IndexOutOfRange, "initial state out of range", spec.initial_state);

  const std::size_t zero = spec.increments.zero_index();
  for (std::size_t z = 0; z < n; ++z) {
    if (spec.transition.absorbing(z)) continue;
    for (auto w : spec.transition.row(z))
      if (w >= n) throw Error(ErrorCode::IndexOutOfRange, "transition target out of range in row " + std::to_string(z), z);
    if (spec.transition.next(z, zero) != z)
      throw Error(ErrorCode::NotIdentityAtZero, "state " + std::to_string(z) + " does not map to itself at increment 0", z);
  }
  for (std::size_t z = 0; z < n; ++z) {
    double v = spec.payoff[z].value();
    if (std::isnan(v)) throw Error(ErrorCode::NotANumber, "payoff is NaN at state " + std::to_string(z), z);
    if (spec.payoff[z].is_pos_inf())
      throw Error(ErrorCode::PlusInfinityPayoff, "payoff is +inf at state " + std::to_string(z), z);
  }

  ValidatedProblem out(std::move(spec));
  const ProblemSpec& s = out.spec_;
  out.anchor_.assign(n, ValidatedProblem::npos);
  out.factor_.assign(n, 1.0);
  out.dependents_.assign(n, {});
  for (const Tie& t : s.ties) {
    if (t.state >= n || t.anchor >= n) throw Error(ErrorCode::IndexOutOfRange, "tie refers to a missing state");
    if (t.state == t.anchor) throw Error(ErrorCode::InvalidTie, "state tied to itself", t.state);
    if (!(std::isfinite(t.factor) && t.factor > 0.0)) throw Error(ErrorCode::InvalidTie, "tie factor must be positive", t.state);
    if (out.anchor_[t.state] != ValidatedProblem::npos) throw Error(ErrorCode::InvalidTie, "state tied twice", t.state);
    if (!s.transition.absorbing(t.state)) throw Error(ErrorCode::InvalidTie, "tied state must be absorbing", t.state);
    out.anchor_[t.state] = t.anchor;
    out.factor_[t.state] = t.factor;
    out.dependents_[t.anchor].push_back(t.state);
  }
  for (const Tie& t : s.ties) {
    if (out.anchor_[t.anchor] != ValidatedProblem::npos)
      throw Error(ErrorCode::InvalidTie, "anchor " + std::to_string(t.anchor) + " is itself tied", t.anchor);
    ExtReal want = s.payoff[t.anchor].scaled(t.factor);
    ExtReal got = s.payoff[t.state];
    bool ok = (want.is_neg_inf() && got.is_neg_inf()) ||
              (want.is_finite() && got.is_finite() &&
               std::fabs(want.value() - got.value()) <= 1e-12 * (1.0 + std::fabs(want.value())));
    if (!ok) throw Error(ErrorCode::InvalidTie, "payoff at tied state " + std::to_string(t.state) + " is not factor * anchor payoff", t.state);
  }
  return out;
}

}  // namespace mgineq
