// Unit tests for Levy model tails, moment queries, tabulated equivalence and
// the extremal tilt.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "distlat/checks.hpp"
#include "distlat/levy.hpp"

using namespace distlat;
using Catch::Approx;

namespace {
LevyModel reference_model() { return LevyModel::tail_cgmy(0.0, 0.0, 1.0, 5.0, 5.0, 0.5); }
}  // namespace

TEST_CASE("tail queries", "[levy]") {
  SECTION("jump-free models have zero tails") {
    const auto m = LevyModel::brownian(0.0, 0.2);
    REQUIRE(m.tail_plus(1.0) == 0.0);
    REQUIRE(m.tail_minus(1.0) == 0.0);
  }
  SECTION("exponential-power tail at x = 1 is C e^{-M}") {
    REQUIRE(reference_model().tail_plus(1.0) == Approx(0.0067379469990855).epsilon(1e-13));
  }
  SECTION("tails decay monotonically to zero") {
    const auto m = reference_model();
    double prev = kInf;
    for (double x = 0.05; x < 12.0; x *= 1.4) {
      const double t = m.tail_plus(x);
      REQUIRE(t <= prev);
      prev = t;
    }
    REQUIRE(prev < 1e-20);
    REQUIRE_THROWS_AS(m.tail_plus(0.0), std::domain_error);
  }
  SECTION("interval masses from tail differences are nonnegative") {
    const auto m = reference_model();
    for (double a = 0.1; a < 3.0; a += 0.3)
      REQUIRE(m.tail_plus(a) - m.tail_plus(a + 0.2) >= 0.0);
  }
}

TEST_CASE("second-moment queries", "[levy]") {
  const auto m = reference_model();
  SECTION("closed form 2 C Gamma(2-Y) [M^{Y-2} + G^{Y-2}]") {
    REQUIRE(m.sigma2_total() == Approx(0.3170661838084809).epsilon(1e-14));
  }
  SECTION("quadrature against the density agrees with the closed form to 1e-8") {
    REQUIRE(m.sigma2_interval(-40.0, 40.0) == Approx(m.sigma2_total()).margin(1e-8));
  }
  SECTION("interval additivity") {
    const double whole = m.sigma2_interval(-1.5, 1.5);
    const double split = m.sigma2_interval(-1.5, 0.4) + m.sigma2_interval(0.4, 1.5);
    REQUIRE(whole == Approx(split).margin(1e-10));
  }
  SECTION("outside moments complement the total") {
    for (double c : {0.25, 0.8, 2.0})
      REQUIRE(m.sigma2_outside(c) + m.sigma2_interval(-c, c) ==
              Approx(m.sigma2_total()).margin(1e-8));
  }
  SECTION("jump-free model has zero jump variance") {
    REQUIRE(LevyModel::brownian(0.0, 0.2).sigma2_total() == 0.0);
  }
}

TEST_CASE("exponential-moment validation", "[levy]") {
  REQUIRE_THROWS_AS(LevyModel::tail_cgmy(0.0, 0.0, 1.0, 5.0, 1.5, 0.5), InfeasibleError);
  REQUIRE_THROWS_AS(LevyModel::tail_cgmy(0.0, 0.0, 1.0, 5.0, 5.0, 0.5, 2.5), InfeasibleError);
  REQUIRE_NOTHROW(LevyModel::tail_cgmy(0.0, 0.0, 1.0, 5.0, 5.0, 0.5, 2.0));
  // the tilt widens the right tail; M/(1+gamma) must still exceed 2q
  const auto m = LevyModel::tail_cgmy(0.0, 0.0, 1.0, 5.0, 5.0, 0.5);
  REQUIRE_THROWS_AS(tilt_qsharp(m, 0.0, MeasureDistortion::power_shift(2.0),
                                MeasureDistortion::identity(TiltSide::lower)),
                    InfeasibleError);
}

TEST_CASE("tabulated tails reproduce the closed-form model", "[levy][tabulated]") {
  const auto m = reference_model();
  // dense log-spaced sampling of both tails
  std::vector<double> xs, tr, tl;
  const double x_lo = 1e-4, x_hi = 12.0;
  const int n = 200000;
  for (int i = 0; i <= n; ++i) {
    const double x = x_lo * std::pow(x_hi / x_lo, static_cast<double>(i) / n);
    xs.push_back(x);
    tr.push_back(m.tail_plus(x));
    tl.push_back(m.tail_minus(x));
  }
  const auto tab = LevyModel::tabulated_tails(0.0, 0.0, xs, tr, xs, tl);

  SECTION("tail values interpolate to 1e-10") {
    for (double x = 0.01; x < 8.0; x *= 1.37) {
      REQUIRE(tab.tail_plus(x) == Approx(m.tail_plus(x)).margin(1e-10));
      REQUIRE(tab.tail_minus(x) == Approx(m.tail_minus(x)).margin(1e-10));
    }
  }
  SECTION("second moment matches within interpolation accuracy") {
    REQUIRE(tab.sigma2_total() == Approx(m.sigma2_total()).margin(2e-7));
  }
  SECTION("extrapolation beyond the grid: zero right, frozen left") {
    REQUIRE(tab.tail_plus(20.0) == 0.0);
    REQUIRE(tab.tail_plus(5e-5) == Approx(m.tail_plus(1e-4)).epsilon(1e-12));
    REQUIRE(tab.tabulated_extrapolates(20.0));
    REQUIRE(tab.tabulated_extrapolates(5e-5));
    REQUIRE_FALSE(tab.tabulated_extrapolates(1.0));
  }
}

TEST_CASE("extremal tilt", "[levy][qsharp]") {
  const auto m = reference_model();
  const auto idu = MeasureDistortion::identity(TiltSide::upper);
  const auto idl = MeasureDistortion::identity(TiltSide::lower);

  SECTION("identity tilt with zero drift shift reproduces the base") {
    const auto q = tilt_qsharp(m, 0.0, idu, idl);
    REQUIRE(q.tilted.drift() == m.drift());
    REQUIRE(q.jump_mean_shift == 0.0);
    for (double x : {0.3, 1.0, 2.5})
      REQUIRE(q.tilted.tail_plus(x) == Approx(m.tail_plus(x)).margin(1e-15));
  }
  SECTION("power tilt equals the closed tilted tail identically") {
    const auto q = tilt_qsharp(m, 0.0, MeasureDistortion::power_shift(0.5), idl);
    REQUIRE(q.tilted.tail_plus(1.0) == Approx(0.0245749436727117).epsilon(1e-13));
    for (double x = 0.01; x <= 5.0; x += 0.0499) {
      const double closed =
          m.tail_plus(x) + 0.5 * std::exp(-5.0 * x / 1.5) * std::pow(x, -0.5 / 1.5);
      REQUIRE(q.tilted.tail_plus(x) == Approx(closed).margin(1e-12 * std::max(1.0, closed)));
      // left tail untouched by an identity lower tilt
      REQUIRE(q.tilted.tail_minus(x) == Approx(m.tail_minus(x)).margin(1e-15));
    }
  }
  SECTION("jump mean shift: gamma C^{1/(1+gamma)} Gamma(u) (M/(1+gamma))^{-u}") {
    const auto q = tilt_qsharp(m, 0.0, MeasureDistortion::power_shift(0.5), idl);
    const double u = 2.0 / 3.0;  // (1 + gamma - Y)/(1 + gamma)
    const double bare = boost::math::tgamma(u) * std::pow(5.0 / 1.5, -u);
    REQUIRE(bare == Approx(0.6068350561143678).epsilon(1e-14));
    REQUIRE(q.jump_mean_shift == Approx(0.5 * bare).margin(1e-9));
    REQUIRE(q.tilted.drift() == Approx(m.drift() + 0.5 * bare).margin(1e-9));
    // cross-check the bare integral by quadrature
    boost::math::quadrature::exp_sinh<double> integrator;
    const double quad = integrator.integrate(
        [](double x) { return std::exp(-5.0 * x / 1.5) * std::pow(x, -1.0 / 3.0); });
    REQUIRE(bare == Approx(quad).margin(1e-6));
  }
  SECTION("drift shift uses sigma^2 Delta_plus") {
    const auto gb = LevyModel::brownian(0.01, 0.2);
    const auto q = tilt_qsharp(gb, 0.5, idu, idl);
    REQUIRE(q.tilted.drift() == Approx(0.01 + 0.04 * 0.5).margin(1e-15));
    REQUIRE(q.tilted.sigma() == gb.sigma());
  }
  SECTION("generic tilt wrapper: tilted tails ordered around the base") {
    const auto gp = MeasureDistortion::exp_cap(ProbabilityDistortion::exponential(2.0));
    const auto gm = MeasureDistortion::exp_cap(ProbabilityDistortion::linear(), TiltSide::lower);
    const auto q = tilt_qsharp(m, 0.0, gp, gm);
    for (double x : {0.2, 0.7, 1.9}) {
      REQUIRE(q.tilted.tail_plus(x) >= m.tail_plus(x));
      REQUIRE(q.tilted.tail_minus(x) <= m.tail_minus(x));
      REQUIRE(q.tilted.tail_minus(x) >= 0.0);
    }
    REQUIRE(q.jump_mean_shift > 0.0);
  }
}
