#include <catch_amalgamated.hpp>

#include <random>

#include "support.hpp"

using namespace mgineq;
using Catch::Approx;

namespace {
SampledFn samples(std::initializer_list<std::pair<double, double>> pts) {
  SampledFn fn;
  for (auto [d, v] : pts) fn.push_back({d, v});
  return fn;
}
const double NI = -std::numeric_limits<double>::infinity();
}  // namespace

TEST_CASE("hull of an already concave sample keeps every vertex") {
  HullFn h = upper_concave_hull(samples({{-1, -1}, {0, 0}, {1, -1}}));
  REQUIRE(h.vertices.size() == 3);
  CHECK(h(-1).value() == -1);
  CHECK(h(0).value() == 0);
  CHECK(h(0.5).value() == Approx(-0.5));
}

TEST_CASE("hull of |d| is the top chord") {
  HullFn h = upper_concave_hull(samples({{-1, 1}, {0, 0}, {1, 1}}));
  REQUIRE(h.vertices.size() == 2);
  CHECK(h.vertices[0].d == -1);
  CHECK(h.vertices[1].d == 1);
  CHECK(h(0).value() == 1);
}

TEST_CASE("-inf samples do not generate vertices") {
  HullFn h = upper_concave_hull(samples({{-1, NI}, {0, 5}, {1, NI}}));
  REQUIRE(h.vertices.size() == 1);
  CHECK(h(0).value() == 5);
  CHECK(h(0.5).is_neg_inf());
  CHECK(h(-1).is_neg_inf());

  HullFn none = upper_concave_hull(samples({{-1, NI}, {2, NI}}));
  CHECK(none.empty());
  CHECK(none(0).is_neg_inf());
}

TEST_CASE("+inf samples are rejected") {
  CHECK_THROWS_AS(upper_concave_hull(samples({{0, std::numeric_limits<double>::infinity()}})), Error);
  CHECK_THROWS_AS(envelope_at(samples({{0, 1}, {1, std::numeric_limits<double>::infinity()}}), 0.0), Error);
}

TEST_CASE("envelope at a kink has a nondegenerate superdifferential") {
  EnvelopeResult r = envelope_at(samples({{-1, -1}, {0, 0}, {1, -1}}), 0.0);
  CHECK(r.value.value() == 0);
  REQUIRE(r.superdiff_lo);
  REQUIRE(r.superdiff_hi);
  CHECK(*r.superdiff_lo == -1);
  CHECK(*r.superdiff_hi == 1);
  CHECK(select_supergradient(r) == 0);
}

TEST_CASE("envelope on a flat segment has a singleton superdifferential") {
  EnvelopeResult r = envelope_at(samples({{-1, 1}, {0, 0}, {1, 1}}), 0.0);
  CHECK(r.value.value() == 1);
  CHECK(*r.superdiff_lo == 0);
  CHECK(*r.superdiff_hi == 0);
  for (auto pol : {SupergradientPolicy::Lower, SupergradientPolicy::Midpoint, SupergradientPolicy::Upper})
    CHECK(select_supergradient(r, pol) == 0);
}

TEST_CASE("boundary and off-domain queries") {
  auto fn = samples({{-1, 0}, {0, 1}, {2, 0}});
  EnvelopeResult left = envelope_at(fn, -1.0);
  CHECK(left.value.value() == 0);
  CHECK_FALSE(left.superdiff_hi);
  REQUIRE(left.superdiff_lo);
  CHECK(*left.superdiff_lo == 1);
  CHECK_THROWS_AS(select_supergradient(left), Error);

  EnvelopeResult out = envelope_at(fn, 2.5);
  CHECK(out.value.is_neg_inf());
  CHECK_FALSE(out.superdiff_lo);
  CHECK_FALSE(out.superdiff_hi);
}

TEST_CASE("supergradient selection policies") {
  EnvelopeResult r{ExtReal(1.0), 2.0, 6.0};
  CHECK(select_supergradient(r, SupergradientPolicy::Lower) == 2);
  CHECK(select_supergradient(r, SupergradientPolicy::Upper) == 6);
  CHECK(select_supergradient(r, SupergradientPolicy::Midpoint) == 4);
  EnvelopeResult bad{ExtReal::neg_inf(), std::nullopt, std::nullopt};
  CHECK_THROWS_AS(select_supergradient(bad), Error);
}

TEST_CASE("converged Doob table at r = 0.75 evaluates to 2 - 4 r") {
  DoobParams dp;
  dp.p = 2.0;
  auto sol = doob_solve(dp);
  REQUIRE(sol.report.status == Status::Converged);
  const auto& P = sol.system.problem;
  std::size_t z = 0;
  for (std::size_t i = 0; i < sol.r.size(); ++i)
    if (std::fabs(sol.r[i] - 0.75) < std::fabs(sol.r[z] - 0.75)) z = i;
  SampledFn fn;
  std::vector<oracle::Atom> atoms;
  for (std::size_t j = 0; j < P.num_increments(); ++j) {
    fn.push_back({P.increments()[j], sol.report.result[P.next(z, j)]});
    atoms.push_back({P.increments()[j], sol.report.result[P.next(z, j)]});
  }
  double r = sol.r[z];
  EnvelopeResult res = envelope_at(fn, 0.0);
  CHECK(res.value.value() == Approx(2.0 - 4.0 * r).margin(1e-3));
  CHECK(std::fabs(2.0 - 4.0 * 0.75 - (-1.0)) < 1e-15);
  CHECK(std::fabs(res.value.value() - oracle::one_step_lp(atoms, 0.0).value()) <= 1e-9);
}

TEST_CASE("randomized envelope properties") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int inst = 0; inst < 300; ++inst) {
    SampledFn fn = testsupport::random_samples(rng);
    HullFn hull = upper_concave_hull(fn);
    // majorization
    for (const auto& s : fn)
      if (s.v.is_finite()) CHECK(envelope_at(fn, s.d).value.value() >= s.v.value() - 1e-12);
    // minimality: vertices are data points
    for (const auto& v : hull.vertices) {
      auto it = std::find_if(fn.begin(), fn.end(), [&](const SamplePoint& s) { return s.d == v.d; });
      REQUIRE(it != fn.end());
      CHECK(it->v == v.v);
      CHECK(envelope_at(fn, v.d).value == v.v);
    }
    // concavity on random triples inside the domain
    double lo = fn.front().d, hi = fn.back().d;
    for (int k = 0; k < 10; ++k) {
      double a = lo + (hi - lo) * unit(rng), b = lo + (hi - lo) * unit(rng), c = lo + (hi - lo) * unit(rng);
      double q[3] = {a, b, c};
      std::sort(q, q + 3);
      ExtReal v1 = envelope_at(fn, q[0]).value, v2 = envelope_at(fn, q[1]).value, v3 = envelope_at(fn, q[2]).value;
      if (!v1.is_finite() || !v3.is_finite() || q[2] == q[0]) continue;
      double lam = (q[2] - q[1]) / (q[2] - q[0]);
      REQUIRE(v2.is_finite());
      CHECK(v2.value() >= lam * v1.value() + (1 - lam) * v3.value() - 1e-9);
    }
    // supergradient inequality at interior queries
    EnvelopeResult r = envelope_at(fn, 0.0);
    if (r.value.is_finite() && r.superdiff_lo && r.superdiff_hi) {
      for (auto pol : {SupergradientPolicy::Lower, SupergradientPolicy::Midpoint, SupergradientPolicy::Upper}) {
        double xi = select_supergradient(r, pol);
        for (const auto& s : fn) {
          ExtReal v = envelope_at(fn, s.d).value;
          if (v.is_finite()) CHECK(v.value() <= r.value.value() + xi * s.d + 1e-9);
        }
      }
    }
    // oracle equivalence at the grid abscissas and at 0
    auto atoms = testsupport::to_atoms(fn);
    for (const auto& s : fn) {
      ExtReal a = envelope_at(fn, s.d).value, b = oracle::one_step_lp(atoms, s.d);
      CHECK((a == b || std::fabs(a.value() - b.value()) <= 1e-9));
    }
  }
}
