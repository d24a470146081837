// Unit tests for probability / measure distortions, duals, integrability
// constants and the delta-scaled families with their numeric limits.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "distlat/checks.hpp"
#include "distlat/distortion.hpp"

using namespace distlat;
using Catch::Approx;

TEST_CASE("distortion evaluation, pinned values", "[distortion]") {
  const auto mmv0 = ProbabilityDistortion::minmaxvar(0.4);
  const auto mmv1 = ProbabilityDistortion::minmaxvar(1.0);
  const auto exp9 = ProbabilityDistortion::exponential(0.9);

  SECTION("endpoints are exact for every family") {
    for (const auto& d : checks::builtin_distortions()) {
      REQUIRE(d(0.0) == 0.0);
      REQUIRE(d(1.0) == 1.0);
      REQUIRE(d.dual(0.0) == 0.0);
      REQUIRE(d.dual(1.0) == 1.0);
    }
  }
  SECTION("closed-form values") {
    // 1 - (1 - 2^{-1/2})^2 and (1 - e^{-0.45})/(1 - e^{-0.9})
    REQUIRE(mmv1(0.5) == Approx(0.9142135623730950).epsilon(1e-14));
    REQUIRE(exp9(0.5) == Approx(0.6106392339492220).epsilon(1e-14));
    REQUIRE(mmv0(0.0) == 0.0);
  }
  SECTION("dual values") {
    REQUIRE(ProbabilityDistortion::linear().dual(0.3) == Approx(0.3).margin(1e-15));
    REQUIRE(mmv1.dual(0.5) == Approx(0.0857864376269050).epsilon(1e-13));
    // dual keeps relative accuracy at tiny arguments (no 1-(1-p) cancellation)
    const double tiny = 1e-30;
    REQUIRE(ProbabilityDistortion::linear().dual(tiny) == Approx(tiny).epsilon(1e-12));
  }
  SECTION("domain errors beyond tolerance") {
    REQUIRE_THROWS_AS(mmv1(-1e-6), std::domain_error);
    REQUIRE_THROWS_AS(mmv1(1.0 + 1e-6), std::domain_error);
    REQUIRE_NOTHROW(mmv1(1.0 + 1e-13));
  }
}

TEST_CASE("distortion shape invariants and duality involution", "[distortion]") {
  REQUIRE(checks::distortion_invariants(2024).pass);
  REQUIRE(checks::duality_involution(2024).pass);

  // dual(dual(D, .)) = D on a grid, through the two evaluation paths
  for (const auto& d : checks::builtin_distortions()) {
    for (int i = 0; i <= 200; ++i) {
      const double p = i / 200.0;
      REQUIRE(1.0 - d.dual(1.0 - p) == Approx(d(p)).margin(1e-14));
    }
  }
}

TEST_CASE("integrability constants", "[distortion][kd]") {
  SECTION("probability case, linear: int_0^1 2y y^{-3/2} dy = 4") {
    REQUIRE(ProbabilityDistortion::linear().kd_constant() == Approx(4.0).epsilon(1e-9));
  }
  SECTION("measure case, capped identity min(y,1): 2 + 2 = 4") {
    const auto capped = MeasureDistortion::tabulated({{0.0, 0.0}, {1.0, 1.0}});
    REQUIRE(capped.kd_constant() == Approx(4.0).epsilon(1e-9));
  }
  SECTION("power tilt difference 0.5 y^{2/3} diverges at infinity") {
    REQUIRE(std::isinf(MeasureDistortion::power_shift(0.5).kd_constant()));
  }
  SECTION("divergence decided analytically from small-p exponents") {
    REQUIRE(std::isinf(ProbabilityDistortion::minmaxvar(1.0).kd_constant()));
    REQUIRE(std::isinf(ProbabilityDistortion::minmaxvar(1.5).kd_constant()));
    REQUIRE(std::isfinite(ProbabilityDistortion::minmaxvar(0.4).kd_constant()));
    REQUIRE(std::isfinite(ProbabilityDistortion::exponential(0.9).kd_constant()));
  }
}

TEST_CASE("measure distortion maps", "[distortion]") {
  const auto up = MeasureDistortion::power_shift(0.5, TiltSide::upper);
  REQUIRE(up.gamma_map(4.0) == Approx(4.0 + 0.5 * std::pow(4.0, 2.0 / 3.0)).epsilon(1e-14));
  REQUIRE(up.diff(0.0) == 0.0);

  // lower maps are clamped at zero so that id - Gamma_- stays below id
  const auto dn = MeasureDistortion::exp_cap(ProbabilityDistortion::piecewise_flat(0.02),
                                             TiltSide::lower);
  for (double lam : {1e-4, 1e-2, 0.5, 2.0, 50.0}) {
    REQUIRE(dn.gamma_map(lam) >= 0.0);
    REQUIRE(dn.diff(lam) <= lam + 1e-15);
    REQUIRE(dn.diff(lam) == Approx(std::min(dn.diff_raw(lam), lam)).margin(1e-15));
  }
}

TEST_CASE("scaled families evaluate per their formulas", "[distortion][scaling]") {
  SECTION("square-root family") {
    const auto f = ScalingFamily::sqrt_brownian(ProbabilityDistortion::exponential(0.9), 1.0);
    // 0.5 + 0.1 (Psi_a(0.5) - 0.5)
    REQUIRE(f(0.5, 0.01) == Approx(0.5110639233949222).epsilon(1e-14));
    REQUIRE(f(1.0, 0.01) == 1.0);
    REQUIRE(f(0.0, 0.01) == 0.0);
    // the shift vanishes as delta -> 0
    REQUIRE(std::fabs(f(0.5, 1e-14) - 0.5) < 1e-6);
  }
  SECTION("convex combination family is exact at p = 1") {
    const auto f = ScalingFamily::convex_cgmy(0.5);
    for (double d : {1e-4, 1e-2, 0.3, 1.0, 7.0}) REQUIRE(f(1.0, d) == 1.0);
  }
  SECTION("family members are valid distortions with upward shift") {
    REQUIRE(checks::scaling_family_invariants(99).pass);
  }
  SECTION("general example: raw formula can poke above one near p = 1; capped") {
    const auto f = ScalingFamily::general_example(ProbabilityDistortion::exponential(0.9),
                                                  ProbabilityDistortion::exponential(2.0),
                                                  ProbabilityDistortion::linear(), 1.0);
    const double delta = std::min(0.25, f.delta0());
    double prev = 0.0;
    for (int i = 0; i <= 4096; ++i) {
      const double p = i / 4096.0;
      const double v = f(p, delta);
      REQUIRE(v <= 1.0);
      REQUIRE(v >= prev - 1e-12);
      REQUIRE(v >= p - 1e-15);
      prev = std::max(prev, v);
    }
  }
}

TEST_CASE("scaling limits: drift coefficient", "[distortion][scaling]") {
  SECTION("square-root family with sigma normalization") {
    const auto f = ScalingFamily::sqrt_brownian(ProbabilityDistortion::exponential(0.9), 0.2);
    const auto r = estimate_xi(f, 1.0 / 6.0, 0.2);
    REQUIRE(r.converged);
    // (2 sqrt 3 / 0.2) (Psi_a(1/6) - 1/6)
    REQUIRE(r.value == Approx(1.1787782630607655).margin(1e-6));
    REQUIRE(r.value == Approx(f.xi_target(1.0 / 6.0)).margin(1e-6));
  }
  SECTION("general example: 2 sqrt(3) (Psi1(p) - p), sigma cancels") {
    const auto f = ScalingFamily::general_example(ProbabilityDistortion::exponential(0.9),
                                                  ProbabilityDistortion::exponential(2.0),
                                                  ProbabilityDistortion::linear(), 0.4);
    for (double p : {1.0 / 6.0, 0.5, 5.0 / 6.0}) {
      const auto r = estimate_xi(f, p, 0.4);
      REQUIRE(r.converged);
      REQUIRE(r.value == Approx(f.xi_target(p)).margin(1e-5));
    }
  }
  SECTION("convex combination family has vanishing drift coefficient") {
    for (double g : {0.5, 2.0}) {
      const auto f = ScalingFamily::convex_cgmy(g);
      const auto r = estimate_xi(f, 0.35, 1.0);
      REQUIRE(r.converged);
      REQUIRE(std::fabs(r.value) < 1e-5);
    }
  }
}

TEST_CASE("scaling limits: jump-rate coefficients", "[distortion][scaling]") {
  SECTION("convex combination family") {
    const auto f = ScalingFamily::convex_cgmy(0.5);
    const auto plus = estimate_gamma(f, 4.0, TiltSide::upper);
    REQUIRE(plus.converged);
    REQUIRE(plus.value == Approx(5.2599210498948732).margin(1e-5));
    const auto minus = estimate_gamma(f, 4.0, TiltSide::lower);
    REQUIRE(minus.converged);
    REQUIRE(minus.value == Approx(4.0).margin(1e-5));
    REQUIRE(estimate_gamma(f, 0.0, TiltSide::upper).value == 0.0);
  }
  SECTION("general example reproduces lambda +- Psi(1 - e^-lambda)") {
    const auto psi2 = ProbabilityDistortion::exponential(2.0);
    const auto f = ScalingFamily::general_example(ProbabilityDistortion::exponential(0.9), psi2,
                                                  ProbabilityDistortion::linear(), 0.0);
    for (double lam : {0.25, 1.0, 3.0}) {
      const auto plus = estimate_gamma(f, lam, TiltSide::upper);
      REQUIRE(plus.converged);
      REQUIRE(plus.value == Approx(lam + psi2(-std::expm1(-lam))).margin(1e-5));
      const auto minus = estimate_gamma(f, lam, TiltSide::lower);
      REQUIRE(minus.converged);
      REQUIRE(minus.value == Approx(lam + std::expm1(-lam)).margin(1e-5));
    }
  }
  SECTION("square-root family tilts no jump rates") {
    const auto f = ScalingFamily::sqrt_brownian(ProbabilityDistortion::exponential(0.9), 0.2);
    const auto plus = estimate_gamma(f, 2.0, TiltSide::upper);
    REQUIRE(plus.converged);
    REQUIRE(plus.value == Approx(2.0).margin(1e-5));
  }
}
