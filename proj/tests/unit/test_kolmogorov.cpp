#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "kolmogorov.hpp"

using namespace bdp;

namespace {

ModelSpec constant_model(std::size_t d, double birth, double death) {
  std::vector<TypeSpec> types;
  for (std::size_t j = 0; j < d; ++j) {
    types.push_back({RateRule::constant(birth), RateRule::constant(death),
                     RateBounds{birth, birth, death, death}});
  }
  return ModelSpec(std::move(types));
}

}  // namespace

TEST_CASE("d=1 cap 2 generator entries") {
  const ModelSpec m = constant_model(1, 1.0, 2.0);
  const TruncatedSpace s({2});
  const GeneratorMatrix a = assemble_generator(m, s, 0.0);
  CHECK(a.at(0, 0) == -1.0);
  CHECK(a.at(1, 0) == 1.0);
  CHECK(a.at(2, 0) == 0.0);
  CHECK(a.at(1, 1) == -3.0);
  CHECK(a.at(0, 1) == 2.0);
  CHECK(a.at(2, 1) == 1.0);
  CHECK(a.at(2, 2) == -2.0);
  CHECK(a.at(1, 2) == 2.0);
  CHECK(a.at(0, 2) == 0.0);
  for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(a.column_sum(c)) <= 1e-12);
}

TEST_CASE("d=2 caps (1,1) unit rates") {
  // Hand enumeration: (0,0) may only gain a particle of either type, (1,1)
  // may only lose one, each edge state has one birth and one death.
  const ModelSpec m = constant_model(2, 1.0, 1.0);
  const TruncatedSpace s({1, 1});
  const GeneratorMatrix a = assemble_generator(m, s, 0.0);
  const std::size_t s00 = s.index_of(MultiIndex{0, 0});
  const std::size_t s01 = s.index_of(MultiIndex{0, 1});
  const std::size_t s10 = s.index_of(MultiIndex{1, 0});
  const std::size_t s11 = s.index_of(MultiIndex{1, 1});
  for (std::size_t c : {s00, s11, s01, s10}) {
    CHECK(a.off_diagonal_values(c).size() == 2);
    CHECK(a.diagonal(c) == -2.0);
  }
  CHECK(a.at(s01, s00) == 1.0);
  CHECK(a.at(s10, s00) == 1.0);
  CHECK(a.at(s11, s00) == 0.0);
  CHECK(a.at(s01, s11) == 1.0);
  CHECK(a.at(s10, s11) == 1.0);
  CHECK(a.at(s00, s01) == 1.0);
  CHECK(a.at(s11, s01) == 1.0);
  CHECK(a.at(s10, s01) == 0.0);
}

TEST_CASE("time-dependent generator is conservative and within the norm bound") {
  const ModelSpec m({TypeSpec{RateRule::periodic(2.0, 1.0, 1.0),
                              RateRule::state_affine({0.5, 0.1, 0.2}),
                              RateBounds{1.0, 3.0, 0.6, 1.7}},
                     TypeSpec{RateRule::count_table({1.0, 2.0, 0.5}),
                              RateRule::constant(0.7),
                              RateBounds{0.5, 2.0, 0.7, 0.7}}});
  const TruncatedSpace s({5, 2});
  for (double t : {0.0, 0.1, 0.37, 2.9}) {
    const GeneratorMatrix a = assemble_generator(m, s, t);
    for (std::size_t c = 0; c < a.dimension(); ++c) {
      CHECK(std::abs(a.column_sum(c)) <= 1e-12);
      for (double v : a.off_diagonal_values(c)) CHECK(v >= 0.0);
    }
    CHECK(a.l1_operator_norm() <= m.generator_norm_bound());
  }
}

TEST_CASE("two-state analytic solution") {
  // p_0(t) = (1 + e^{-2t}) / 2 for lambda = mu = 1 started in state 0.
  const ModelSpec m = constant_model(1, 1.0, 1.0);
  const TruncatedSpace s({1});
  const auto grid = make_grid(1.0, 0.1);
  const Trajectory tr =
      integrate(m, s, ProbabilityVector::point_mass(s, MultiIndex{0}), grid);
  REQUIRE(tr.snapshots.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double exact = 0.5 * (1.0 + std::exp(-2.0 * grid[i]));
    CHECK(std::abs(tr.snapshots[i].values[0] - exact) <= 1e-6);
  }
  CHECK(std::abs(tr.snapshots.back().values[0] - 0.5676676416183064) <= 1e-6);
  CHECK(tr.snapshots.back().time == 1.0);
}

TEST_CASE("zero rates leave p0 unchanged") {
  const ModelSpec m = constant_model(2, 0.0, 0.0);
  const TruncatedSpace s({2, 2});
  const auto p0 = ProbabilityVector::point_mass(s, MultiIndex{1, 2});
  const Trajectory tr = integrate(m, s, p0, make_grid(3.0, 1.0));
  for (const auto& p : tr.snapshots) CHECK(p.values == p0.values);
}

TEST_CASE("single-point grid returns p0") {
  const ModelSpec m = constant_model(1, 1.0, 1.0);
  const TruncatedSpace s({3});
  const auto p0 = ProbabilityVector::point_mass(s, MultiIndex{2});
  const std::vector<double> grid{0.0};
  const Trajectory tr = integrate(m, s, p0, grid);
  REQUIRE(tr.snapshots.size() == 1);
  CHECK(tr.snapshots[0].values == p0.values);
  CHECK(tr.internal_steps == 0);
}

TEST_CASE("internal step respects the stability bound") {
  const ModelSpec m = constant_model(1, 2.0, 3.0);
  const TruncatedSpace s({4});
  const Trajectory tr = integrate(m, s, ProbabilityVector::point_mass(s, MultiIndex{0}),
                                  make_grid(1.0, 0.5));
  // h <= 0.1 / (2 * 1 * 5) = 0.01 means at least 100 steps over [0, 1].
  CHECK(tr.internal_steps >= 100);
  CHECK(tr.min_entry_pre_clip >= -1e-8);
  CHECK(tr.max_drift <= 1e-6);
}

TEST_CASE("tail threshold policies") {
  const ModelSpec m = constant_model(1, 3.0, 0.5);
  const TruncatedSpace s({5});
  const auto p0 = ProbabilityVector::point_mass(s, MultiIndex{0});
  const auto grid = make_grid(4.0, 0.1);
  IntegrateOptions opt;
  opt.tail_threshold = 1e-3;
  CHECK_THROWS_AS(integrate(m, s, p0, grid, opt), TruncationError);

  opt.tail_policy = TailPolicy::stop;
  const Trajectory tr = integrate(m, s, p0, grid, opt);
  REQUIRE(tr.stopped_at.has_value());
  CHECK(tr.grid.size() < grid.size());
  CHECK(tr.grid.back() < *tr.stopped_at);
  for (double tail : tr.tail_mass) CHECK(tail < 1e-3);

  const auto at_cap = ProbabilityVector::point_mass(s, MultiIndex{5});
  CHECK_THROWS_AS(integrate(m, s, at_cap, grid, opt), TruncationError);
}

TEST_CASE("integrate argument checks") {
  const ModelSpec m = constant_model(1, 1.0, 1.0);
  const TruncatedSpace s({2});
  const auto p0 = ProbabilityVector::point_mass(s, MultiIndex{0});
  CHECK_THROWS_AS(integrate(m, s, p0, std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(integrate(m, s, p0, std::vector<double>{0.0, 1.0, 0.5}),
                  InvalidArgument);
  ProbabilityVector bad;
  bad.values = {0.5, 0.6, 0.0};
  CHECK_THROWS_AS(integrate(m, s, bad, make_grid(1.0, 0.5)), InvalidArgument);
  CHECK_THROWS_AS(integrate(m, TruncatedSpace({2, 2}),
                            ProbabilityVector::point_mass(TruncatedSpace({2, 2}),
                                                          MultiIndex{0, 0}),
                            make_grid(1.0, 0.5)),
                  InvalidArgument);
}

TEST_CASE("make_grid ends exactly at the horizon") {
  const auto g = make_grid(1.0, 0.3);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(make_grid(0.0, 0.1).size() == 1);
  CHECK_THROWS_AS(make_grid(1.0, 0.0), InvalidArgument);
}

TEST_CASE("l1 norms") {
  CHECK(l1_norm(std::vector<double>{0.2, -0.3, 0.5}) == doctest::Approx(1.0));
  CHECK(weighted_l1_norm(std::vector<double>{1.0, 1.0, 1.0},
                         std::vector<double>{1.0, 0.5, 0.25}) ==
        doctest::Approx(1.75));
  CHECK_THROWS_AS(weighted_l1_norm(std::vector<double>{1.0},
                                   std::vector<double>{0.0}),
                  InvalidArgument);
  const ModelSpec m = constant_model(2, 1.0, 1.0);
  const TruncatedSpace s({3, 3});
  const Trajectory tr = integrate(m, s, ProbabilityVector::point_mass(s, MultiIndex{1, 1}),
                                  make_grid(2.0, 0.5));
  for (const auto& p : tr.snapshots) CHECK(std::abs(l1_norm(p.values) - 1.0) <= 1e-8);
}

TEST_CASE("tail mass") {
  const TruncatedSpace s({2, 3});
  CHECK(tail_mass(ProbabilityVector::point_mass(s, MultiIndex{0, 0}), s) == 0.0);
  CHECK(tail_mass(ProbabilityVector::point_mass(s, MultiIndex{2, 3}), s) == 1.0);
  const TruncatedSpace one({1});
  ProbabilityVector u;
  u.values = {0.5, 0.5};
  CHECK(tail_mass(u, one) == 0.5);
}
