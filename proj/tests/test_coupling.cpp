// Unit tests for the subordinator coupling: pathwise domination, marginal
// laws, determinism and the inverse-map ordering.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "distlat/coupling.hpp"

using namespace distlat;
using Catch::Approx;

TEST_CASE("coupled subordinators", "[coupling]") {
  const auto nu1 = SubordinatorSpec::scaled_exponential(1.0, 2.0);  // tail 2 e^-x
  const auto nu2 = SubordinatorSpec::scaled_exponential(2.0, 1.0);  // tail e^-2x

  SECTION("analytic moments of the specs") {
    REQUIRE(nu1.mean() == Approx(2.0).margin(1e-14));
    REQUIRE(nu2.mean() == Approx(0.5).margin(1e-14));
    REQUIRE(nu1.second_moment() == Approx(4.0).margin(1e-14));
    REQUIRE(nu2.second_moment() == Approx(0.5).margin(1e-14));
  }

  SECTION("identical measures couple to identical paths") {
    const auto paths = couple_subordinators(nu1, nu1, 1.0, 500, 7);
    for (std::size_t i = 0; i < paths.z1_T.size(); ++i) {
      REQUIRE(paths.z1_T[i] == paths.z2_T[i]);
      REQUIRE(paths.dominated[i] == 1);
    }
  }

  SECTION("seeded pair: full domination and 3-sigma marginals") {
    const auto paths = couple_subordinators(nu1, nu2, 1.0, 10000, 42);
    REQUIRE(paths.n_dominated() == 10000);
    const auto m1 = marginal_check(paths, 1, nu1);
    const auto m2 = marginal_check(paths, 2, nu2);
    REQUIRE(m1.pass);
    REQUIRE(m2.pass);
    REQUIRE(m1.sample_mean == Approx(2.0).margin(3.0 * std::sqrt(4.0 / 10000.0)));
    REQUIRE(m2.sample_mean == Approx(0.5).margin(3.0 * std::sqrt(0.5 / 10000.0)));
  }

  SECTION("null second measure: plain compound Poisson with the right mean") {
    const auto paths = couple_subordinators(nu1, SubordinatorSpec::null(), 1.0, 10000, 9);
    for (double z : paths.z2_T) REQUIRE(z == 0.0);
    REQUIRE(paths.n_dominated() == 10000);
    REQUIRE(marginal_check(paths, 1, nu1).pass);
  }

  SECTION("identical seeds give bitwise identical paths") {
    const auto a = couple_subordinators(nu1, nu2, 1.0, 256, 123);
    const auto b = couple_subordinators(nu1, nu2, 1.0, 256, 123);
    REQUIRE(a.z1_T == b.z1_T);
    REQUIRE(a.z2_T == b.z2_T);
    const auto c = couple_subordinators(nu1, nu2, 1.0, 256, 124);
    REQUIRE(a.z1_T != c.z1_T);
  }

  SECTION("domination precondition is enforced") {
    // crossing tails: 0.5 e^-x vs e^-2x cross at small x
    const auto small = SubordinatorSpec::scaled_exponential(1.0, 0.5);
    REQUIRE_THROWS_AS(couple_subordinators(small, nu2, 1.0, 10, 1), InfeasibleError);
  }
}

TEST_CASE("right-inverse ordering on a grid", "[coupling]") {
  const auto nu1 = SubordinatorSpec::scaled_exponential(1.0, 2.0);
  const auto nu2 = SubordinatorSpec::scaled_exponential(2.0, 1.0);
  const double C = std::max(nu1.total_mass(), nu2.total_mass());
  const double c1 = C - nu1.total_mass();
  const double c2 = C - nu2.total_mass();
  for (int i = 1; i < 200; ++i) {
    const double u = i / 200.0;
    const double y1 = detail::right_inverse(nu1, c1, C, u);
    const double y2 = detail::right_inverse(nu2, c2, C, u);
    REQUIRE(y1 >= y2);
  }
}

TEST_CASE("tabulated subordinator matches its source", "[coupling]") {
  std::vector<std::pair<double, double>> knots;
  for (int i = 0; i <= 4000; ++i) {
    const double x = 30.0 * i / 4000.0;
    knots.emplace_back(x, 2.0 * std::exp(-x));
  }
  const auto tab = SubordinatorSpec::tabulated(std::move(knots));
  REQUIRE(tab.total_mass() == Approx(2.0).margin(1e-12));
  REQUIRE(tab.mean() == Approx(2.0).margin(1e-4));
  REQUIRE(tab.second_moment() == Approx(4.0).margin(1e-3));
  REQUIRE(tab.tail(1.0) == Approx(2.0 * std::exp(-1.0)).epsilon(1e-6));
}
