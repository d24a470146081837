// Unit tests for the closed-form references: normal distribution function,
// shifted-drift call, and the two barrier digital formulas.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "distlat/closedform.hpp"
#include "distlat/valuation.hpp"

using namespace distlat;
using Catch::Approx;

namespace {
// Independent oracle: quadrature of the normal density.
double phi_quadrature(double x) {
  boost::math::quadrature::tanh_sinh<double> q;
  if (x <= 0.0)
    return q.integrate([](double t) { return normal_pdf(t); }, x, 0.0) * -1.0 + 0.5;
  return 0.5 + q.integrate([](double t) { return normal_pdf(t); }, 0.0, x);
}
}  // namespace

TEST_CASE("standard normal distribution function", "[closedform]") {
  REQUIRE(normal_cdf(0.0) == 0.5);
  REQUIRE(normal_cdf(0.1) == Approx(0.5398278372770290).epsilon(1e-13));
  for (double x : {-3.0, -1.2, -0.4, 0.1, 0.75, 2.5}) {
    REQUIRE(normal_cdf(x) == Approx(phi_quadrature(x)).margin(1e-12));
    REQUIRE(normal_cdf(-x) == Approx(1.0 - normal_cdf(x)).margin(1e-15));
  }
  REQUIRE(normal_cdf(40.0) == 1.0);
  REQUIRE(normal_cdf(-40.0) == 0.0);
}

TEST_CASE("shifted-drift call value", "[closedform]") {
  SECTION("at-the-money, no shift: 100 (Phi(0.1) - Phi(-0.1))") {
    const GbmSpec g(100.0, 0.0, 0.2, 1.0, 0.0);
    REQUIRE(gbm_call(g, 100.0) == Approx(7.9655674554057963).epsilon(1e-13));
    // independent lognormal quadrature
    boost::math::quadrature::tanh_sinh<double> q;
    const double quad = q.integrate(
        [&](double z) {
          const double s = 100.0 * std::exp(-0.02 + 0.2 * z);
          return std::max(s - 100.0, 0.0) * normal_pdf(z);
        },
        -10.0, 10.0);
    REQUIRE(gbm_call(g, 100.0) == Approx(quad).margin(1e-9));
  }
  SECTION("drift shift 0.5 moves the value to about 9.096") {
    const GbmSpec g(100.0, 0.0, 0.2, 1.0, 0.5);
    REQUIRE(g.c_sharp() == Approx(0.02).margin(1e-16));
    REQUIRE(gbm_call(g, 100.0) == Approx(9.0961531793282115).epsilon(1e-13));
  }
  SECTION("vanishing strike recovers the forward") {
    const GbmSpec g(100.0, 0.0, 0.2, 1.0, 0.3);
    REQUIRE(gbm_call(g, 1e-12) == Approx(100.0 * std::exp(g.c_sharp())).epsilon(1e-9));
  }
  SECTION("monotone in S0 and the drift shift, decreasing in K") {
    const GbmSpec base(100.0, 0.0, 0.2, 1.0, 0.1);
    for (double dK = 80.0; dK < 120.0; dK += 5.0)
      REQUIRE(gbm_call(base, dK) >= gbm_call(base, dK + 5.0));
    for (double dp = 0.0; dp < 0.5; dp += 0.1) {
      REQUIRE(gbm_call(GbmSpec(100.0, 0.0, 0.2, 1.0, dp + 0.1), 100.0) >=
              gbm_call(GbmSpec(100.0, 0.0, 0.2, 1.0, dp), 100.0));
      REQUIRE(gbm_call(GbmSpec(101.0, 0.0, 0.2, 1.0, dp), 100.0) >=
              gbm_call(GbmSpec(100.0, 0.0, 0.2, 1.0, dp), 100.0));
    }
  }
  SECTION("martingale case respects static no-arbitrage bounds") {
    const GbmSpec g(100.0, 0.0, 0.2, 1.0, 0.0);
    for (double K : {50.0, 90.0, 100.0, 120.0, 200.0}) {
      const double v = gbm_call(g, K);
      REQUIRE(v >= std::max(100.0 - K, 0.0) - 1e-12);
      REQUIRE(v <= 100.0 + 1e-12);
    }
  }
}

TEST_CASE("up-and-in digital closed forms", "[closedform][barrier]") {
  const GbmSpec g(100.0, 0.0, 0.2, 1.0, 0.0);

  SECTION("reflection value at H = 120") {
    REQUIRE(gbm_upin_digital_reflection(g, 120.0) == Approx(0.3296197793852068).epsilon(1e-12));
  }
  SECTION("barrier at spot gives probability one; far barrier gives zero") {
    REQUIRE(gbm_upin_digital_reflection(g, 100.0 * (1.0 + 1e-12)) == Approx(1.0).margin(1e-9));
    REQUIRE(gbm_upin_digital_reflection(g, 1e9) == Approx(0.0).margin(1e-12));
  }
  SECTION("lies in [0,1] and decreases in H") {
    double prev = 1.0;
    for (double H = 101.0; H < 200.0; H += 7.0) {
      const double v = gbm_upin_digital_reflection(g, H);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      REQUIRE(v <= prev + 1e-15);
      prev = v;
    }
  }
  SECTION("the alternative closed form disagrees with the reflection value") {
    // shipped for comparison only; the discrepancy at H = 120 is documented
    const double lit = gbm_upin_digital_alt(g, 120.0);
    REQUIRE(lit == Approx(0.3655120139570321).epsilon(1e-12));
    REQUIRE(std::fabs(lit - gbm_upin_digital_reflection(g, 120.0)) > 0.03);
    REQUIRE(gbm_upin_digital_alt(g, 1e9) == Approx(0.0).margin(1e-12));
    REQUIRE(std::isfinite(gbm_upin_digital_alt(GbmSpec(100.0, 0.0, 1e-8, 1.0, 0.0), 120.0)));
  }
  SECTION("reflection value agrees with a fine lattice (smoke, loose tolerance)") {
    // cross-check at desk scale; the acceptance suite does this at n = 4000
    const auto m = LevyModel::brownian(-0.02, 0.2);
    const auto grid = make_grid(m, 1.0, 800);
    const double lat =
        linear_value(m, Payoff::up_in_digital(100.0, 120.0), grid).value;
    REQUIRE(lat == Approx(0.3296197793852068).epsilon(0.08));
  }
}
