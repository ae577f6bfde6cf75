#include <doctest.h>

#include <cmath>
#include <numbers>

#include "error.hpp"
#include "model.hpp"

using namespace bdp;

namespace {

ModelSpec one_type(RateRule birth, RateRule death, RateBounds b) {
  return ModelSpec({TypeSpec{std::move(birth), std::move(death), b}});
}

}  // namespace

TEST_CASE("graded-lex enumeration of a 2x2 box") {
  const TruncatedSpace s({1, 1});
  REQUIRE(s.size() == 4);
  CHECK(s.state_of(0) == MultiIndex{0, 0});
  CHECK(s.state_of(1) == MultiIndex{0, 1});
  CHECK(s.state_of(2) == MultiIndex{1, 0});
  CHECK(s.state_of(3) == MultiIndex{1, 1});
  CHECK(s.index_of(MultiIndex{1, 0}) == 2);
}

TEST_CASE("one-dimensional space is the identity enumeration") {
  const TruncatedSpace s({2});
  REQUIRE(s.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(s.state_of(static_cast<std::size_t>(i)) == MultiIndex{i});
  }
}

TEST_CASE("space rejects bad caps and out-of-box states") {
  CHECK_THROWS_AS(TruncatedSpace({0}), InvalidArgument);
  CHECK_THROWS_AS(TruncatedSpace(std::vector<int>{}), InvalidArgument);
  CHECK_THROWS_AS(TruncatedSpace({2000, 2000, 2000}), InvalidArgument);
  const TruncatedSpace s({1, 1});
  CHECK_THROWS_AS(s.index_of(MultiIndex{3, 0}), InvalidArgument);
  CHECK_THROWS_AS(s.state_of(4), InvalidArgument);
  CHECK_FALSE(s.contains(MultiIndex{0, 2}));
}

TEST_CASE("index_of and state_of are inverse on every small box") {
  for (int a = 1; a <= 4; ++a) {
    for (int b = 1; b <= 3; ++b) {
      for (int c = 1; c <= 3; ++c) {
        const TruncatedSpace s({a, b, c});
        REQUIRE(s.size() == static_cast<std::size_t>((a + 1) * (b + 1) * (c + 1)));
        for (std::size_t i = 0; i < s.size(); ++i) {
          REQUIRE(s.index_of(s.state_of(i)) == i);
          if (i > 0) REQUIRE(s.state_of(i - 1).total() <= s.state_of(i).total());
        }
      }
    }
  }
}

TEST_CASE("neighbour tables and boundary flags") {
  const TruncatedSpace s({2, 1});
  const std::size_t i = s.index_of(MultiIndex{1, 0});
  CHECK(s.state_of(s.up(i, 0)) == MultiIndex{2, 0});
  CHECK(s.state_of(s.up(i, 1)) == MultiIndex{1, 1});
  CHECK(s.state_of(s.down(i, 0)) == MultiIndex{0, 0});
  CHECK(s.down(i, 1) == TruncatedSpace::npos);
  CHECK_FALSE(s.on_boundary(i));
  CHECK(s.on_boundary(s.index_of(MultiIndex{0, 1})));
  CHECK(s.up(s.index_of(MultiIndex{2, 0}), 0) == TruncatedSpace::npos);
}

TEST_CASE("identical caps give identical enumerations") {
  const TruncatedSpace a({3, 2, 2});
  const TruncatedSpace b({3, 2, 2});
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.state_of(i) == b.state_of(i));
}

TEST_CASE("constant birth rule") {
  const auto m = one_type(RateRule::constant(2.0), RateRule::constant(1.0),
                          RateBounds{2.0, 2.0, 1.0, 1.0});
  for (int k : {0, 3, 7}) {
    for (double t : {0.0, 1.5, 100.0}) {
      CHECK(eval_rates(m, 0, MultiIndex{k}, t).birth == 2.0);
    }
  }
}

TEST_CASE("death is zero when the type is absent") {
  const auto m = one_type(RateRule::constant(1.0),
                          RateRule::state_affine({5.0, 1.0}),
                          RateBounds{1.0, 1.0, 0.0, 100.0});
  CHECK(eval_rates(m, 0, MultiIndex{0}, 0.3).death == 0.0);
  CHECK(eval_rates(m, 0, MultiIndex{2}, 0.3).death == 7.0);
}

TEST_CASE("periodic rule outside declared bounds raises a bound violation") {
  const auto m = one_type(RateRule::periodic(3.0, 1.0, 1.0), RateRule::constant(1.0),
                          RateBounds{2.0, 3.5, 1.0, 1.0});
  CHECK_NOTHROW(eval_rates(m, 0, MultiIndex{0}, 0.0));
  try {
    eval_rates(m, 0, MultiIndex{1}, 0.25);
    FAIL("expected a bound violation");
  } catch (const BoundViolation& e) {
    const std::string what = e.what();
    CHECK(what.find("type 1") != std::string::npos);
    CHECK(what.find("m=(1)") != std::string::npos);
    CHECK(what.find("t=0.25") != std::string::npos);
    CHECK(e.code() == ErrorCode::bound_violation);
  }
}

TEST_CASE("rule evaluation") {
  const MultiIndex m{2, 3};
  CHECK(RateRule::periodic(1.0, 0.5, 2.0).evaluate(m, 0, 0.5) ==
        doctest::Approx(1.5));
  CHECK(RateRule::periodic(1.0, 0.5, 2.0, std::numbers::pi / 2).evaluate(m, 0, 0.0) ==
        doctest::Approx(1.5));
  CHECK(RateRule::state_affine({1.0, 0.5, -0.25}).evaluate(m, 0, 0.0) ==
        doctest::Approx(1.25));
  CHECK(RateRule::state_affine_capped({1.0, 0.5, 0.5}, 2.0).evaluate(m, 0, 0.0) == 2.0);

  const auto table = RateRule::time_table({0.0, 1.0, 3.0}, {1.0, 3.0, 2.0});
  CHECK(table.evaluate(m, 0, 0.5) == doctest::Approx(2.0));
  CHECK(table.evaluate(m, 0, 2.0) == doctest::Approx(2.5));
  CHECK(table.evaluate(m, 0, 10.0) == doctest::Approx(2.0));
  const auto wrapped = RateRule::time_table({0.0, 1.0, 2.0}, {1.0, 3.0, 1.0}, 2.0);
  CHECK(wrapped.evaluate(m, 0, 4.5) == doctest::Approx(2.0));

  const auto count = RateRule::count_table({0.0, 1.0, 4.0});
  CHECK(count.evaluate(m, 0, 0.0) == 4.0);
  CHECK(count.evaluate(MultiIndex{1, 0}, 0, 0.0) == 1.0);
  CHECK(count.evaluate(m, 1, 0.0) == 4.0);
}

TEST_CASE("malformed rules are rejected") {
  CHECK_THROWS_AS(RateRule::state_affine({1.0, 2.0}).validate(2), ConfigError);
  CHECK_THROWS_AS(RateRule::periodic(1.0, 0.5, 0.0).validate(1), ConfigError);
  CHECK_THROWS_AS(RateRule::time_table({1.0, 0.0}, {1.0, 1.0}).validate(1), ConfigError);
  CHECK_THROWS_AS(RateRule::time_table({0.0}, {1.0, 1.0}).validate(1), ConfigError);
  CHECK_NOTHROW(RateRule::state_affine({1.0, 2.0, 3.0}).validate(2));
}

TEST_CASE("global caps default to the largest upper bounds") {
  const ModelSpec m({TypeSpec{RateRule::constant(1.0), RateRule::constant(2.0),
                              RateBounds{1.0, 1.0, 2.0, 2.0}},
                     TypeSpec{RateRule::constant(3.0), RateRule::constant(0.5),
                              RateBounds{3.0, 3.0, 0.5, 0.5}}});
  CHECK(m.global_birth_cap() == 3.0);
  CHECK(m.global_death_cap() == 2.0);
  CHECK(m.generator_norm_bound() == doctest::Approx(2.0 * 2.0 * 5.0));
  CHECK_THROWS_AS(ModelSpec({TypeSpec{RateRule::constant(1.0), RateRule::constant(1.0),
                                      RateBounds{1.0, 1.0, 1.0, 1.0}}},
                            0.5),
                  ConfigError);
}

TEST_CASE("inconsistent bounds are rejected") {
  CHECK_THROWS_AS((RateBounds{2.0, 1.0, 0.0, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((RateBounds{-1.0, 1.0, 0.0, 1.0}.validate()), ConfigError);
}

TEST_CASE("eval_rates argument checks") {
  const auto m = one_type(RateRule::constant(1.0), RateRule::constant(1.0),
                          RateBounds{1.0, 1.0, 1.0, 1.0});
  CHECK_THROWS_AS(eval_rates(m, 1, MultiIndex{0}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(eval_rates(m, 0, MultiIndex{0, 0}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(eval_rates(m, 0, MultiIndex{0}, -1.0), InvalidArgument);
}
