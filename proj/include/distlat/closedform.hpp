#ifndef DISTLAT_CLOSEDFORM_HPP
#define DISTLAT_CLOSEDFORM_HPP

#include <cmath>

#include "distlat/common.hpp"

namespace distlat {

// Standard normal distribution function; |error| well below 1e-12.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

// Geometric Brownian motion S_t = S0 exp(X_t), X_t = (mu - sigma^2/2) t + sigma B_t,
// valued under the tilted measure with drift shift Delta_+.
struct GbmSpec {
  double S0 = 100.0;
  double mu = 0.0;
  double sigma = 0.2;
  double T = 1.0;
  double delta_plus = 0.0;

  GbmSpec() = default;
  GbmSpec(double s0, double mu_, double sig, double t, double dp)
      : S0(s0), mu(mu_), sigma(sig), T(t), delta_plus(dp) {
    if (S0 <= 0.0 || sigma <= 0.0 || T <= 0.0)
      throw ConfigError("gbm spec requires S0 > 0, sigma > 0, T > 0");
  }

  double c_sharp() const { return delta_plus * sigma * sigma + mu; }
};

// Call value under the shifted drift:
//   S0 e^{c# T} Phi(d+) - K Phi(d-),  a = c# + sigma^2/2,
//   d+ = (log(S0/K) + a T) / (sigma sqrt T), d- = d+ - sigma sqrt T.
inline double gbm_call(const GbmSpec& g, double K) {
  if (K <= 0.0) throw ConfigError("gbm_call requires K > 0");
  const double cs = g.c_sharp();
  const double a = cs + 0.5 * g.sigma * g.sigma;
  const double st = g.sigma * std::sqrt(g.T);
  const double dp = (std::log(g.S0 / K) + a * g.T) / st;
  const double dm = dp - st;
  return g.S0 * std::exp(cs * g.T) * normal_cdf(dp) - K * normal_cdf(dm);
}

// Reflection-principle value of the up-and-in digital (continuous monitoring):
//   nu = c# - sigma^2/2, b = log(H/S0),
//   P(sup S >= H) = PhiBar((b - nu T)/(sigma sqrt T))
//                 + e^{2 nu b / sigma^2} PhiBar((b + nu T)/(sigma sqrt T)).
// This is the trusted oracle for barrier checks.
inline double gbm_upin_digital_reflection(const GbmSpec& g, double H) {
  if (H <= g.S0) throw ConfigError("up-in digital requires H > S0");
  const double nu = g.c_sharp() - 0.5 * g.sigma * g.sigma;
  const double b = std::log(H / g.S0);
  const double st = g.sigma * std::sqrt(g.T);
  return normal_sf((b - nu * g.T) / st) +
         std::exp(2.0 * nu * b / (g.sigma * g.sigma)) * normal_sf((b + nu * g.T) / st);
}

// Alternative digital closed form, shipped for comparison only; it disagrees
// with the reflection value and is never used as an oracle (see README):
//   a = c# + sigma^2/2, e+ = (log(H/S0) + a T)/(sigma sqrt T),
//   e- = e+ - 2 a sqrt(T)/sigma, value = (H/S0)^{2a} PhiBar(e+) + PhiBar(e-).
inline double gbm_upin_digital_alt(const GbmSpec& g, double H) {
  if (H <= g.S0) throw ConfigError("up-in digital requires H > S0");
  const double a = g.c_sharp() + 0.5 * g.sigma * g.sigma;
  const double st = g.sigma * std::sqrt(g.T);
  if (!(st > 0.0) || !std::isfinite(st)) return H > g.S0 ? 0.0 : 1.0;
  const double ep = (std::log(H / g.S0) + a * g.T) / st;
  const double em = ep - 2.0 * a * std::sqrt(g.T) / g.sigma;
  return std::pow(H / g.S0, 2.0 * a) * normal_sf(ep) + normal_sf(em);
}

}  // namespace distlat

#endif  // DISTLAT_CLOSEDFORM_HPP
