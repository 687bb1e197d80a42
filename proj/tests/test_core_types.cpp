#include <catch_amalgamated.hpp>

#include <random>

#include "support.hpp"

using namespace mgineq;

namespace {

ProblemSpec one_state() {
  ProblemSpec spec;
  spec.state_labels = {StateLabel::named("z")};
  spec.increments = IncrementGrid({0.0});
  spec.transition = TransitionTable(1, 1);
  spec.transition.set_row(0, {0});
  spec.payoff = {0.0};
  return spec;
}

ErrorCode code_of(const ProblemSpec& spec) {
  try {
    validate_problem(spec);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::ParseError;
}

}  // namespace

TEST_CASE("extended reals follow the -inf absorbing convention") {
  const ExtReal ninf = ExtReal::neg_inf(), pinf = ExtReal::pos_inf();
  CHECK((pinf + ninf).is_neg_inf());
  CHECK((ninf + pinf).is_neg_inf());
  CHECK((pinf - pinf).is_neg_inf());
  for (double a : {-1e300, -3.5, 0.0, 2.0, 1e300}) {
    CHECK((ExtReal(a) + ninf).is_neg_inf());
    CHECK(ninf < ExtReal(a));
    CHECK(ExtReal(a) < pinf);
  }
  CHECK((ExtReal(1.5) + ExtReal(2.0)).value() == 3.5);
  CHECK(ninf.scaled(0.0).value() == 0.0);
  CHECK(ninf.scaled(2.0).is_neg_inf());
}

TEST_CASE("minimal identity system validates") {
  auto p = validate_problem(one_state());
  CHECK(p.num_states() == 1);
  CHECK(p.next(0, 0) == 0);
}

TEST_CASE("identity at zero is enforced and the state is reported") {
  ProblemSpec spec;
  spec.state_labels = {StateLabel::named("z1"), StateLabel::named("z2")};
  spec.increments = IncrementGrid({-1.0, 0.0, 1.0});
  spec.transition = TransitionTable(2, 3);
  spec.transition.set_row(0, {0, 1, 1});
  spec.transition.set_row(1, {0, 1, 1});
  spec.payoff = {0.0, 0.0};
  try {
    validate_problem(spec);
    FAIL("expected NotIdentityAtZero");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotIdentityAtZero);
    REQUIRE(e.state());
    CHECK(*e.state() == 0);
  }
}

TEST_CASE("payoff +inf is rejected") {
  auto spec = one_state();
  spec.payoff = {ExtReal::pos_inf()};
  CHECK(code_of(spec) == ErrorCode::PlusInfinityPayoff);
}

TEST_CASE("increment grids need exactly one zero and strict order") {
  CHECK_THROWS_MATCHES(IncrementGrid({-1.0, 1.0}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::MissingZeroIncrement; }));
  CHECK_THROWS_AS(IncrementGrid({0.0, 0.0}), Error);
  CHECK_THROWS_AS(IncrementGrid({1.0, 0.0}), Error);
  IncrementGrid g({-2.0, 0.0, 0.5});
  CHECK(g.zero_index() == 1);
}

TEST_CASE("index and length errors") {
  auto spec = one_state();
  spec.initial_state = 3;
  CHECK(code_of(spec) == ErrorCode::IndexOutOfRange);

  spec = one_state();
  spec.increments = IncrementGrid({0.0, 1.0});
  spec.transition = TransitionTable(1, 2);
  spec.transition.set_row(0, {0, 5});
  CHECK(code_of(spec) == ErrorCode::IndexOutOfRange);

  spec = one_state();
  spec.payoff = {0.0, 1.0};
  CHECK(code_of(spec) == ErrorCode::LengthMismatch);
}

TEST_CASE("ties must be absorbing, untied at the anchor and payoff consistent") {
  ProblemSpec spec;
  spec.state_labels = {StateLabel::at(1.0), StateLabel::at(2.0)};
  spec.increments = IncrementGrid({0.0, 1.0});
  spec.transition = TransitionTable(2, 2);
  spec.transition.set_row(0, {0, 1});
  spec.transition.set_absorbing(1);
  spec.payoff = {-1.0, -4.0};
  spec.ties = {Tie{1, 0, 4.0}};
  auto p = validate_problem(spec);
  CHECK(p.tied(1));
  CHECK(p.anchor_of(1) == 0);
  CHECK(p.dependents(0) == std::vector<std::size_t>{1});

  auto bad = spec;
  bad.payoff = {-1.0, -3.0};
  CHECK(code_of(bad) == ErrorCode::InvalidTie);
  bad = spec;
  bad.transition.set_row(1, {1, 0});
  CHECK(code_of(bad) == ErrorCode::InvalidTie);
  bad = spec;
  bad.ties[0].factor = -1.0;
  CHECK(code_of(bad) == ErrorCode::InvalidTie);
}

TEST_CASE("every validated random problem fixes states at increment zero") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    auto p = validate_problem(testsupport::random_problem(rng));
    for (std::size_t z = 0; z < p.num_states(); ++z) CHECK(p.next(z, p.increments().zero_index()) == z);
  }
}

TEST_CASE("problem JSON round-trips field for field") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    ProblemSpec spec = testsupport::random_problem(rng);
    if (i % 3 == 0) spec.state_labels[0] = StateLabel::named("start");
    if (i % 3 == 1) spec.state_labels[0] = StateLabel::at({0.25, -1.0 / 3.0});
    ProblemSpec back = io::problem_from_json(nlohmann::json::parse(io::problem_to_json(spec).dump()));
    CHECK(back == spec);
  }
  DoobParams dp;
  dp.grid_points = 21;
  auto doob = build_doob_problem(dp);
  const ProblemSpec& spec = doob.problem.spec();
  ProblemSpec back = io::problem_from_json(nlohmann::json::parse(io::problem_to_json(spec).dump()));
  CHECK(back == spec);
  CHECK_NOTHROW(validate_problem(back));
}
