#ifndef DISTLAT_DISTORTION_HPP
#define DISTLAT_DISTORTION_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "distlat/common.hpp"

namespace distlat {

// Concave probability distortion on [0,1]. Immutable after construction;
// evaluation is exact at both endpoints.
class ProbabilityDistortion {
 public:
  enum class Family { linear, minmaxvar, exponential, piecewise, composite };

  static ProbabilityDistortion linear() { return ProbabilityDistortion(Family::linear); }

  static ProbabilityDistortion minmaxvar(double gamma) {
    if (gamma < 0.0) throw ConfigError("minmaxvar requires gamma >= 0");
    ProbabilityDistortion d(Family::minmaxvar);
    d.param_ = gamma;
    return d;
  }

  static ProbabilityDistortion exponential(double alpha) {
    if (alpha <= 0.0) throw ConfigError("exponential distortion requires alpha > 0");
    ProbabilityDistortion d(Family::exponential);
    d.param_ = alpha;
    return d;
  }

  // Knots (p_i, D_i) with p_0 = 0, D_0 = 0, p_last = 1, D_last = 1,
  // strictly increasing in p, nondecreasing in D, slopes nonincreasing.
  static ProbabilityDistortion piecewise_linear(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw ConfigError("piecewise distortion needs at least two knots");
    std::sort(knots.begin(), knots.end());
    if (knots.front() != std::make_pair(0.0, 0.0) || knots.back() != std::make_pair(1.0, 1.0))
      throw ConfigError("piecewise distortion knots must span (0,0)..(1,1)");
    double prev_slope = kInf;
    for (std::size_t i = 1; i < knots.size(); ++i) {
      const double dp = knots[i].first - knots[i - 1].first;
      const double dv = knots[i].second - knots[i - 1].second;
      if (dp <= 0.0) throw ConfigError("piecewise distortion knots must be strictly increasing in p");
      if (dv < 0.0) throw ConfigError("piecewise distortion must be nondecreasing");
      const double slope = dv / dp;
      if (slope > prev_slope + 1e-12) throw ConfigError("piecewise distortion must be concave");
      prev_slope = slope;
    }
    ProbabilityDistortion d(Family::piecewise);
    d.knots_ = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(knots));
    return d;
  }

  // Flat-knee special case: slope 1/knee up to p = knee, then constant 1.
  static ProbabilityDistortion piecewise_flat(double knee) {
    if (knee <= 0.0 || knee >= 1.0) throw ConfigError("flat-knee distortion requires knee in (0,1)");
    return piecewise_linear({{0.0, 0.0}, {knee, 1.0}, {1.0, 1.0}});
  }

  // Convex combination sum w_i Psi_i with w_i > 0, sum w_i = 1.
  static ProbabilityDistortion composite(std::vector<std::pair<double, ProbabilityDistortion>> parts) {
    if (parts.empty()) throw ConfigError("composite distortion needs at least one part");
    double wsum = 0.0;
    for (const auto& [w, psi] : parts) {
      if (w <= 0.0) throw ConfigError("composite weights must be positive");
      wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-12) throw ConfigError("composite weights must sum to 1");
    for (auto& [w, psi] : parts) w /= wsum;
    ProbabilityDistortion d(Family::composite);
    d.parts_ = std::make_shared<const std::vector<std::pair<double, ProbabilityDistortion>>>(std::move(parts));
    return d;
  }

  Family family() const { return family_; }
  double param() const { return param_; }
  bool is_linear() const { return family_ == Family::linear; }

  // Psi(p). Domain error if p is outside [0,1] by more than 1e-12.
  double operator()(double p) const {
    if (p < -1e-12 || p > 1.0 + 1e-12)
      throw std::domain_error("distortion argument outside [0,1]");
    p = std::clamp(p, 0.0, 1.0);
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    switch (family_) {
      case Family::linear:
        return p;
      case Family::minmaxvar: {
        const double g1 = 1.0 + param_;
        return 1.0 - std::pow(1.0 - std::pow(p, 1.0 / g1), g1);
      }
      case Family::exponential:
        return std::expm1(-param_ * p) / std::expm1(-param_);
      case Family::piecewise: {
        const auto& kn = *knots_;
        auto it = std::upper_bound(kn.begin(), kn.end(), std::make_pair(p, kInf));
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double t = (p - lo.first) / (hi.first - lo.first);
        return lo.second + t * (hi.second - lo.second);
      }
      case Family::composite: {
        double s = 0.0;
        for (const auto& [w, psi] : *parts_) s += w * psi(p);
        return s;
      }
    }
    return p;
  }

  // Dual distortion: 1 - Psi(1 - p), evaluated in cancellation-free form per
  // family so tiny arguments keep full relative accuracy.
  double dual(double p) const {
    if (p < -1e-12 || p > 1.0 + 1e-12)
      throw std::domain_error("distortion argument outside [0,1]");
    p = std::clamp(p, 0.0, 1.0);
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    switch (family_) {
      case Family::linear:
        return p;
      case Family::minmaxvar: {
        // (1 - (1-p)^{1/(1+g)})^{1+g}
        const double g1 = 1.0 + param_;
        return std::pow(-std::expm1(std::log1p(-p) / g1), g1);
      }
      case Family::exponential:
        // e^{-a} (e^{a p} - 1) / (1 - e^{-a})
        return std::exp(-param_) * std::expm1(param_ * p) / (-std::expm1(-param_));
      case Family::piecewise: {
        // interpolate on the reflected knots (1 - p_i, 1 - D_i)
        const auto& kn = *knots_;
        const double q = 1.0 - p;
        auto it = std::upper_bound(kn.begin(), kn.end(), std::make_pair(q, kInf));
        if (it == kn.begin()) return 1.0;
        if (it == kn.end()) --it;
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double slope = (hi.second - lo.second) / (hi.first - lo.first);
        // 1 - [lo.D + slope (q - lo.p)] = (1 - lo.D) - slope (q - lo.p)
        return (1.0 - lo.second) - slope * (q - lo.first);
      }
      case Family::composite: {
        double s = 0.0;
        for (const auto& [w, psi] : *parts_) s += w * psi.dual(p);
        return s;
      }
    }
    return p;
  }

  // Behaviour D(p) ~ c p^s as p -> 0+; s decides K_D integrability.
  double small_p_exponent() const {
    switch (family_) {
      case Family::linear:
      case Family::exponential:
      case Family::piecewise:
        return 1.0;
      case Family::minmaxvar:
        return 1.0 / (1.0 + param_);
      case Family::composite: {
        double s = kInf;
        for (const auto& [w, psi] : *parts_) s = std::min(s, psi.small_p_exponent());
        return s;
      }
    }
    return 1.0;
  }

  // K_D = int_0^1 [D(y) + dual(y)] y^{-3/2} dy; +inf when the integral
  // diverges. Divergence is decided from the family's small-p exponent,
  // never from quadrature blow-up.
  double kd_constant() const {
    if (small_p_exponent() <= 0.5) return kInf;
    // Substitute y = u^2: [D + dual](y) y^{-3/2} dy = 2 [D + dual](u^2) u^{-2} du.
    boost::math::quadrature::tanh_sinh<double> integrator;
    const auto integrand = [this](double u) -> double {
      const double y = std::max(u * u, 1e-280);
      return 2.0 * ((*this)(y) + dual(y)) / y;
    };
    return integrator.integrate(integrand, 0.0, 1.0);
  }

 private:
  explicit ProbabilityDistortion(Family f) : family_(f) {}

  Family family_;
  double param_ = 0.0;
  std::shared_ptr<const std::vector<std::pair<double, double>>> knots_;
  std::shared_ptr<const std::vector<std::pair<double, ProbabilityDistortion>>> parts_;
};

enum class TiltSide { upper, lower };

// One side of a jump-rate distortion: Gamma_+ (upper) or Gamma_- (lower).
// The family parameterizes the difference d = |Gamma - id|, which is itself a
// measure distortion (increasing, 0 at 0). The lower map is clamped at zero,
// so id - Gamma_- = min(d(lambda), lambda).
class MeasureDistortion {
 public:
  enum class Family { identity, power_shift, exp_cap, tabulated };

  static MeasureDistortion identity(TiltSide side = TiltSide::upper) {
    return MeasureDistortion(Family::identity, side);
  }

  // d(lambda) = gamma * lambda^{1/(1+gamma)}.
  static MeasureDistortion power_shift(double gamma, TiltSide side = TiltSide::upper) {
    if (gamma <= 0.0) throw ConfigError("power_shift requires gamma > 0");
    MeasureDistortion m(Family::power_shift, side);
    m.gamma_ = gamma;
    return m;
  }

  // d(lambda) = Psi(1 - e^{-lambda}) for a probability distortion Psi.
  static MeasureDistortion exp_cap(ProbabilityDistortion psi, TiltSide side = TiltSide::upper) {
    MeasureDistortion m(Family::exp_cap, side);
    m.psi_ = std::make_shared<const ProbabilityDistortion>(std::move(psi));
    return m;
  }

  // d given by piecewise-linear knots (lambda_i, d_i), constant beyond the
  // last knot; must start at (0,0), be nondecreasing.
  static MeasureDistortion tabulated(std::vector<std::pair<double, double>> knots,
                                     TiltSide side = TiltSide::upper) {
    if (knots.empty() || knots.front() != std::make_pair(0.0, 0.0))
      throw ConfigError("tabulated measure distortion must start at (0,0)");
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (knots[i].first <= knots[i - 1].first || knots[i].second < knots[i - 1].second)
        throw ConfigError("tabulated measure distortion must be increasing");
    }
    MeasureDistortion m(Family::tabulated, side);
    m.knots_ = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(knots));
    return m;
  }

  Family family() const { return family_; }
  TiltSide side() const { return side_; }
  bool is_identity() const { return family_ == Family::identity; }
  double power_gamma() const { return gamma_; }

  // Raw family difference d(lambda) >= 0.
  double diff_raw(double lam) const {
    if (lam < 0.0) throw std::domain_error("measure distortion argument must be >= 0");
    switch (family_) {
      case Family::identity:
        return 0.0;
      case Family::power_shift:
        return lam == 0.0 ? 0.0 : gamma_ * std::pow(lam, 1.0 / (1.0 + gamma_));
      case Family::exp_cap:
        return (*psi_)(-std::expm1(-lam));
      case Family::tabulated: {
        const auto& kn = *knots_;
        if (lam >= kn.back().first) return kn.back().second;
        auto it = std::upper_bound(kn.begin(), kn.end(), std::make_pair(lam, kInf));
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double t = (lam - lo.first) / (hi.first - lo.first);
        return lo.second + t * (hi.second - lo.second);
      }
    }
    return 0.0;
  }

  // Effective difference entering Choquet terms: for the lower side the raw
  // difference is capped at lambda so that Gamma_- stays nonnegative.
  double diff(double lam) const {
    const double d = diff_raw(lam);
    return side_ == TiltSide::lower ? std::min(d, lam) : d;
  }

  // The tilted rate Gamma(lambda).
  double gamma_map(double lam) const {
    return side_ == TiltSide::upper ? lam + diff(lam) : lam - diff(lam);
  }

  // Small-lambda and large-lambda growth exponents of d.
  double exponent_origin() const {
    switch (family_) {
      case Family::identity: return kInf;
      case Family::power_shift: return 1.0 / (1.0 + gamma_);
      case Family::exp_cap: return psi_->small_p_exponent();
      case Family::tabulated: return 1.0;
    }
    return 1.0;
  }
  double exponent_tail() const {
    switch (family_) {
      case Family::identity: return -kInf;
      case Family::power_shift: return 1.0 / (1.0 + gamma_);
      case Family::exp_cap: return 0.0;   // saturates at Psi(1) = 1
      case Family::tabulated: return 0.0; // constant beyond the grid
    }
    return 0.0;
  }

  // K_D = int_0^inf d(y) y^{-3/2} dy of the (effective) difference;
  // +inf when it diverges at either end, decided analytically.
  double kd_constant() const {
    if (family_ == Family::identity) return 0.0;
    const bool lower = side_ == TiltSide::lower;
    // Effective origin exponent: the lower side is capped by id.
    const double s0 = lower ? std::max(exponent_origin(), 1.0) : exponent_origin();
    const double sT = lower ? std::min(exponent_tail(), 0.0) : exponent_tail();
    if (s0 <= 0.5 || sT >= 0.5) return kInf;
    boost::math::quadrature::tanh_sinh<double> integrator;
    // (0,1]: substitute y = u^2.
    const auto near0 = [this](double u) -> double {
      const double y = std::max(u * u, 1e-280);
      return 2.0 * diff(y) / y;
    };
    // [1,inf): substitute y = 1/v^2, dy = -2 v^{-3} dv, y^{-3/2} = v^3.
    const auto far = [this](double v) -> double {
      if (v < 1e-150) v = 1e-150;
      return 2.0 * diff(1.0 / (v * v));
    };
    return integrator.integrate(near0, 0.0, 1.0) + integrator.integrate(far, 0.0, 1.0);
  }

 private:
  MeasureDistortion(Family f, TiltSide s) : family_(f), side_(s) {}

  Family family_;
  TiltSide side_;
  double gamma_ = 0.0;
  std::shared_ptr<const ProbabilityDistortion> psi_;
  std::shared_ptr<const std::vector<std::pair<double, double>>> knots_;
};

struct DriftShift {
  double plus = 0.0;
  double minus = 0.0;
  DriftShift() = default;
  DriftShift(double p, double m) : plus(p), minus(m) {
    if (p < 0.0 || m < 0.0) throw ConfigError("drift shift components must be nonnegative");
  }
};

struct ExtrapolationResult {
  double value = 0.0;
  bool converged = false;
  double spread = 0.0;  // |last - previous| of the accelerated sequence
};

// delta-indexed family of concave distortions with scaling limits
// (xi, Gamma_+, Gamma_-).
class ScalingFamily {
 public:
  enum class Variant { sqrt_brownian, general_example, convex_cgmy };

  // Psi(p, delta) = p + sqrt(delta) (Psi1(p) - p), delta capped at 1.
  // sigma is carried for the xi normalization only.
  static ScalingFamily sqrt_brownian(ProbabilityDistortion psi1, double sigma) {
    if (sigma <= 0.0) throw ConfigError("sqrt_brownian family requires sigma > 0");
    ScalingFamily f(Variant::sqrt_brownian);
    f.psi1_ = std::make_shared<const ProbabilityDistortion>(std::move(psi1));
    f.sigma_ = sigma;
    f.delta0_ = 1.0;
    return f;
  }

  // Psi(p,delta) = C0 p + sqrt(delta) sigma (Psi1(p)-p)
  //              + delta Psi2(1-e^{-p/delta})
  //              + delta [Psi3(1-e^{-(1-p)/delta}) - Psi3(1-e^{-1/delta})],
  // clamped into [p, 1]. delta0 is the largest 2^{-k} with C0 > 0.
  static ScalingFamily general_example(ProbabilityDistortion psi1, ProbabilityDistortion psi2,
                                       ProbabilityDistortion psi3, double sigma) {
    if (sigma < 0.0) throw ConfigError("general_example family requires sigma >= 0");
    ScalingFamily f(Variant::general_example);
    f.psi1_ = std::make_shared<const ProbabilityDistortion>(std::move(psi1));
    f.psi2_ = std::make_shared<const ProbabilityDistortion>(std::move(psi2));
    f.psi3_ = std::make_shared<const ProbabilityDistortion>(std::move(psi3));
    f.sigma_ = sigma;
    f.delta0_ = 0.0;
    for (int k = 0; k <= 60; ++k) {
      const double d = std::ldexp(1.0, -k);
      if (f.c0(d) > 0.0) {
        f.delta0_ = d;
        break;
      }
    }
    if (f.delta0_ == 0.0) throw InfeasibleError("general_example family has no positive C0(delta)");
    return f;
  }

  // Psi(p,delta) = (1 - C_g(delta)) p + C_g(delta) Psi_gamma(p),
  // C_g(delta) = gamma/(1+gamma) delta^{gamma/(1+gamma)}, delta capped at 1.
  static ScalingFamily convex_cgmy(double gamma) {
    if (gamma <= 0.0) throw ConfigError("convex_cgmy family requires gamma > 0");
    ScalingFamily f(Variant::convex_cgmy);
    f.gamma_ = gamma;
    f.delta0_ = 1.0;
    return f;
  }

  Variant variant() const { return variant_; }
  double delta0() const { return delta0_; }
  double sigma() const { return sigma_; }
  double cgmy_gamma() const { return gamma_; }

  // Psi(p, delta). delta is clamped to (0, delta0].
  double operator()(double p, double delta) const {
    if (p < -1e-12 || p > 1.0 + 1e-12)
      throw std::domain_error("distortion argument outside [0,1]");
    if (delta <= 0.0) throw std::domain_error("scaled distortion needs delta > 0");
    p = std::clamp(p, 0.0, 1.0);
    delta = std::min(delta, delta0_);
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    switch (variant_) {
      case Variant::sqrt_brownian: {
        const double s = std::sqrt(delta);
        return p + s * ((*psi1_)(p)-p);
      }
      case Variant::general_example: {
        const double x1 = -std::expm1(-1.0 / delta);
        const double raw = c0(delta) * p + std::sqrt(delta) * sigma_ * ((*psi1_)(p)-p) +
                           delta * (*psi2_)(-std::expm1(-p / delta)) +
                           delta * ((*psi3_)(-std::expm1(-(1.0 - p) / delta)) - (*psi3_)(x1));
        // The raw formula can exceed 1 within O(delta^{3/2}) of p = 1; the cap
        // keeps the family a valid (concave, nondecreasing) distortion with
        // the same scaling limits.
        return std::clamp(raw, p, 1.0);
      }
      case Variant::convex_cgmy: {
        const double cg = cgamma(delta);
        const double g1 = 1.0 + gamma_;
        const double mmv = 1.0 - std::pow(1.0 - std::pow(p, 1.0 / g1), g1);
        return (1.0 - cg) * p + cg * mmv;
      }
    }
    return p;
  }

  double dual(double p, double delta) const { return 1.0 - (*this)(1.0 - p, delta); }

  // Closed-form scaling limits where the family has them.
  double xi_target(double p) const {
    switch (variant_) {
      case Variant::sqrt_brownian:
        return 2.0 * std::sqrt(3.0) * ((*psi1_)(p)-p) / sigma_;
      case Variant::general_example:
        return 2.0 * std::sqrt(3.0) * ((*psi1_)(p)-p);
      case Variant::convex_cgmy:
        return 0.0;
    }
    return 0.0;
  }

  MeasureDistortion gamma_plus() const {
    switch (variant_) {
      case Variant::sqrt_brownian:
        return MeasureDistortion::identity(TiltSide::upper);
      case Variant::general_example:
        return MeasureDistortion::exp_cap(*psi2_, TiltSide::upper);
      case Variant::convex_cgmy:
        return MeasureDistortion::power_shift(gamma_, TiltSide::upper);
    }
    return MeasureDistortion::identity(TiltSide::upper);
  }

  MeasureDistortion gamma_minus() const {
    switch (variant_) {
      case Variant::sqrt_brownian:
        return MeasureDistortion::identity(TiltSide::lower);
      case Variant::general_example:
        return MeasureDistortion::exp_cap(*psi3_, TiltSide::lower);
      case Variant::convex_cgmy:
        return MeasureDistortion::identity(TiltSide::lower);
    }
    return MeasureDistortion::identity(TiltSide::lower);
  }

 private:
  explicit ScalingFamily(Variant v) : variant_(v) {}

  double c0(double delta) const {
    const double x1 = -std::expm1(-1.0 / delta);
    return 1.0 - delta * (*psi2_)(x1) + delta * (*psi3_)(x1);
  }
  double cgamma(double delta) const {
    return gamma_ / (1.0 + gamma_) * std::pow(delta, gamma_ / (1.0 + gamma_));
  }

  Variant variant_;
  std::shared_ptr<const ProbabilityDistortion> psi1_, psi2_, psi3_;
  double sigma_ = 0.0;
  double gamma_ = 0.0;
  double delta0_ = 1.0;
};

namespace detail {

// Aitken delta-squared acceleration of f_k sampled on a geometric delta grid.
// Recovers the constant term of sequences f_k = A + B rho^k, including
// divergent ones (rho > 1), which appear for slowly scaled families.
inline ExtrapolationResult aitken_limit(const std::vector<double>& f) {
  const double tiny = 1e-12;
  auto accelerate = [&](const std::vector<double>& x) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 2 < x.size(); ++i) {
      const double d1 = x[i + 1] - x[i];
      const double d2 = x[i + 2] - x[i + 1];
      const double den = d2 - d1;
      const double scale = std::max({1.0, std::fabs(x[i]), std::fabs(x[i + 2])});
      if (std::fabs(den) <= tiny * scale) {
        out.push_back(x[i + 2]);
      } else {
        out.push_back(x[i + 2] - d2 * d2 / den);
      }
    }
    return out;
  };
  // Constant sequence short-circuit.
  bool constant = true;
  for (std::size_t i = 1; i < f.size(); ++i)
    if (std::fabs(f[i] - f[i - 1]) > tiny * std::max(1.0, std::fabs(f[i]))) constant = false;
  if (constant) return {f.back(), true, 0.0};

  const auto g = accelerate(f);
  const auto h = accelerate(g);
  ExtrapolationResult r;
  if (h.size() >= 2) {
    r.value = h.back();
    r.spread = std::fabs(h.back() - h[h.size() - 2]);
  } else if (!g.empty()) {
    r.value = g.back();
    r.spread = g.size() >= 2 ? std::fabs(g.back() - g[g.size() - 2]) : kInf;
  } else {
    r.value = f.back();
    r.spread = kInf;
  }
  r.converged = r.spread <= 1e-4 * std::max(1.0, std::fabs(r.value));
  return r;
}

}  // namespace detail

// Numeric extraction of xi(p) = lim (Psi(p,delta) - p) / (sqrt(delta) sigma*),
// sigma* = sigma / (2 sqrt 3), over the grid delta = 4^{-k}, k = 4..12.
inline ExtrapolationResult estimate_xi(const ScalingFamily& f, double p, double sigma) {
  if (sigma <= 0.0) throw ConfigError("estimate_xi requires sigma > 0");
  const double sigma_star = sigma / (2.0 * std::sqrt(3.0));
  std::vector<double> vals;
  for (int k = 4; k <= 12; ++k) {
    const double d = std::pow(4.0, -k);
    vals.push_back((f(p, d) - p) / (std::sqrt(d) * sigma_star));
  }
  return detail::aitken_limit(vals);
}

// Numeric extraction of Gamma_+(lambda) = lim Psi(delta lambda, delta)/delta
// (plus side) or Gamma_-(lambda) = lim dual(delta lambda, delta)/delta.
inline ExtrapolationResult estimate_gamma(const ScalingFamily& f, double lam, TiltSide side) {
  if (lam < 0.0) throw ConfigError("estimate_gamma requires lambda >= 0");
  if (lam == 0.0) return {0.0, true, 0.0};
  std::vector<double> vals;
  for (int k = 4; k <= 12; ++k) {
    const double d = std::pow(4.0, -k);
    if (lam > 1.0 / d) continue;
    const double q = d * lam;
    vals.push_back((side == TiltSide::upper ? f(q, d) : f.dual(q, d)) / d);
  }
  return detail::aitken_limit(vals);
}

}  // namespace distlat

#endif  // DISTLAT_DISTORTION_HPP
