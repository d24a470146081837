// Unit tests for Choquet integrals (probability and measure case), the
// maximizing density, the brute-force sup oracle, and the driver function.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "distlat/checks.hpp"
#include "distlat/choquet.hpp"

using namespace distlat;
using Catch::Approx;

namespace {
DiscreteDistribution two_point() {
  return DiscreteDistribution({{0.0, 0.5}, {1.0, 0.5}});
}
// identity as a measure-distortion difference (plain integral), linear up to
// a knot far beyond any mass used in tests
MeasureDistortion plain_integral() {
  return MeasureDistortion::tabulated({{0.0, 0.0}, {1e9, 1e9}});
}
}  // namespace

TEST_CASE("choquet integral of discrete distributions", "[choquet]") {
  const auto mmv1 = ProbabilityDistortion::minmaxvar(1.0);

  SECTION("constants are preserved") {
    const DiscreteDistribution c({{3.25, 1.0}});
    REQUIRE(choquet_probability(c, mmv1) == Approx(3.25).margin(1e-15));
  }
  SECTION("linear distortion reduces to the expectation") {
    const DiscreteDistribution d({{-1.0, 1.0 / 3.0}, {0.0, 1.0 / 3.0}, {2.0, 1.0 / 3.0}});
    REQUIRE(choquet_probability(d, ProbabilityDistortion::linear()) ==
            Approx(1.0 / 3.0).margin(1e-14));
  }
  SECTION("two-point distribution equals Psi(P(X>0))") {
    REQUIRE(choquet_probability(two_point(), mmv1) == Approx(0.9142135623730950).epsilon(1e-14));
  }
  SECTION("atoms with equal values merge before evaluation") {
    const DiscreteDistribution split({{1.0, 0.25}, {1.0, 0.25}, {0.0, 0.5}});
    REQUIRE(choquet_probability(split, mmv1) ==
            Approx(choquet_probability(two_point(), mmv1)).margin(1e-15));
  }
  SECTION("invalid distributions are rejected") {
    REQUIRE_THROWS_AS(DiscreteDistribution({{0.0, 0.6}, {1.0, 0.6}}), ConfigError);
    REQUIRE_THROWS_AS(DiscreteDistribution({{0.0, -0.5}, {1.0, 1.5}}), ConfigError);
  }
}

TEST_CASE("choquet integral against a distorted jump measure", "[choquet]") {
  SECTION("zero exposure integrates to zero") {
    REQUIRE(choquet_measure({}, MeasureDistortion::power_shift(0.5)) == 0.0);
  }
  SECTION("single piece: level * d(mass) = 3 * 0.5 * 2^{2/3}") {
    const StepFunctionOnMeasure u{{{2.0, 3.0}}};
    REQUIRE(choquet_measure(u, MeasureDistortion::power_shift(0.5)) ==
            Approx(2.3811015779522992).epsilon(1e-14));
  }
  SECTION("identity difference reduces to the plain integral") {
    const StepFunctionOnMeasure u{{{1.0, 2.0}, {3.0, 1.0}}};
    // (2-1) d(1) + (1-0) d(4) = 1 + 4 = int u dLambda
    REQUIRE(choquet_measure(u, plain_integral()) == Approx(5.0).margin(1e-12));
  }
  SECTION("negative levels are rejected") {
    const StepFunctionOnMeasure u{{{1.0, -1.0}}};
    REQUIRE_THROWS_AS(choquet_measure(u, plain_integral()), ConfigError);
  }
}

TEST_CASE("maximizing density", "[choquet]") {
  const auto mmv1 = ProbabilityDistortion::minmaxvar(1.0);
  SECTION("two atoms: weights Psi(1/2)/(1/2) and (1-Psi(1/2))/(1/2)") {
    const auto md = maximizing_density(two_point(), mmv1);
    REQUIRE(md.weights[1] == Approx(1.8284271247461901).epsilon(1e-13));
    REQUIRE(md.weights[0] == Approx(0.1715728752538099).epsilon(1e-12));
    REQUIRE(md.total_mass == Approx(1.0).margin(1e-14));
    REQUIRE(md.attained == Approx(choquet_probability(two_point(), mmv1)).margin(1e-14));
  }
  SECTION("linear distortion leaves the measure undistorted") {
    const DiscreteDistribution d({{-1.0, 0.25}, {0.5, 0.5}, {2.0, 0.25}});
    const auto md = maximizing_density(d, ProbabilityDistortion::linear());
    for (double w : md.weights) REQUIRE(w == Approx(1.0).margin(1e-14));
  }
  SECTION("weights decrease in the value rank for concave distortions") {
    const DiscreteDistribution d(
        {{0.0, 1.0 / 3.0}, {1.0, 1.0 / 3.0}, {2.0, 1.0 / 3.0}});
    const auto md = maximizing_density(d, mmv1);
    REQUIRE(md.weights[0] <= md.weights[1]);
    REQUIRE(md.weights[1] <= md.weights[2]);
    REQUIRE(md.attained == Approx(choquet_probability(d, mmv1)).margin(1e-12));
  }
  SECTION("feasibility over all unions of atoms (exhaustive)") {
    REQUIRE(checks::choquet_maximizer(7).pass);
  }
}

TEST_CASE("brute-force sup equals the comonotone value", "[choquet][oracle]") {
  const auto mmv1 = ProbabilityDistortion::minmaxvar(1.0);
  SECTION("constant distribution") {
    const DiscreteDistribution c({{2.0, 1.0}});
    REQUIRE(bruteforce_sup(c, mmv1, 100) == Approx(2.0).margin(1e-14));
  }
  SECTION("two-point, 1e4 trials") {
    const double bf = bruteforce_sup(two_point(), mmv1, 10000, 42);
    const double cv = choquet_probability(two_point(), mmv1);
    REQUIRE(bf <= cv + 1e-9);
    REQUIRE(bf == Approx(cv).margin(1e-9));
  }
  SECTION("four random atoms, exponential distortion, fixed seed") {
    SplitMix64 rng(4242);
    const auto dist = checks::random_distribution(rng, 4);
    const auto psi = ProbabilityDistortion::exponential(0.9);
    const double bf = bruteforce_sup(dist, psi, 10000, 4242);
    REQUIRE(bf == Approx(choquet_probability(dist, psi)).margin(1e-9));
  }
  SECTION("too many atoms rejected") {
    std::vector<DiscreteDistribution::Atom> atoms;
    for (int i = 0; i < 13; ++i) atoms.push_back({static_cast<double>(i), 1.0 / 13.0});
    REQUIRE_THROWS_AS(bruteforce_sup(DiscreteDistribution(std::move(atoms)),
                                     ProbabilityDistortion::linear(), 10),
                      ConfigError);
  }
  SECTION("seeded sweep across distortion families") {
    REQUIRE(checks::choquet_comonotone_sup(11, 60, 400).pass);
  }
}

TEST_CASE("choquet functional properties", "[choquet]") {
  REQUIRE(checks::choquet_lipschitz(5).pass);
  REQUIRE(checks::choquet_cash_homogeneity(5).pass);
}

TEST_CASE("driver of the limiting nonlinear expectation", "[choquet][driver]") {
  const DriftShift shift(2.0, 3.0);
  const auto gp = MeasureDistortion::power_shift(0.5, TiltSide::upper);
  const auto gm = MeasureDistortion::identity(TiltSide::lower);

  SECTION("g(0, 0) = 0") {
    REQUIRE(driver_g(0.0, {}, shift, gp, gm, 0.04) == 0.0);
  }
  SECTION("pure diffusion exposure, positive and negative") {
    REQUIRE(driver_g(1.0, {}, shift, gp, gm, 0.04) == Approx(0.08).margin(1e-15));
    REQUIRE(driver_g(-1.0, {}, shift, gp, gm, 0.04) == Approx(0.12).margin(1e-15));
  }
  SECTION("negative-side exposure with an identity lower tilt adds nothing") {
    const SignedStepFunction u{{{1.0, -1.0}}};
    REQUIRE(driver_g(-1.0, u, shift, gp, gm, 0.04) == Approx(0.12).margin(1e-15));
  }
  SECTION("positive exposure picks up the upper Choquet term") {
    const SignedStepFunction u{{{2.0, 3.0}}};
    REQUIRE(driver_g(0.0, u, shift, gp, gm, 0.04) ==
            Approx(2.3811015779522992).epsilon(1e-13));
  }
  SECTION("pair sides are validated") {
    REQUIRE_THROWS_AS(driver_g(0.0, {}, shift, gm, gm, 0.04), ConfigError);
  }
}
