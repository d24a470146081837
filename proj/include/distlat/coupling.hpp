#ifndef DISTLAT_COUPLING_HPP
#define DISTLAT_COUPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "distlat/common.hpp"

namespace distlat {

// Finite-activity subordinator jump measure given by its tail nu((x, inf)).
class SubordinatorSpec {
 public:
  enum class Kind { scaled_exponential, tabulated, null };

  // tail(x) = mass * exp(-rate x).
  static SubordinatorSpec scaled_exponential(double rate, double mass) {
    if (rate <= 0.0 || mass < 0.0)
      throw ConfigError("scaled exponential subordinator requires rate > 0, mass >= 0");
    SubordinatorSpec s(Kind::scaled_exponential);
    s.rate_ = rate;
    s.mass_ = mass;
    return s;
  }

  // Piecewise log-linear tail on knots (x_i, tail_i), zero beyond the grid.
  static SubordinatorSpec tabulated(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw ConfigError("tabulated subordinator needs at least two knots");
    for (std::size_t i = 0; i < knots.size(); ++i) {
      if (knots[i].second <= 0.0) throw ConfigError("tabulated tail values must be positive");
      if (i > 0 && (knots[i].first <= knots[i - 1].first || knots[i].second > knots[i - 1].second))
        throw ConfigError("tabulated tail must be nonincreasing on an increasing grid");
    }
    if (knots.front().first != 0.0)
      throw ConfigError("tabulated subordinator tail grid must start at x = 0");
    SubordinatorSpec s(Kind::tabulated);
    s.knots_ = std::move(knots);
    return s;
  }

  static SubordinatorSpec null() { return SubordinatorSpec(Kind::null); }

  double total_mass() const {
    switch (kind_) {
      case Kind::scaled_exponential: return mass_;
      case Kind::tabulated: return knots_.front().second;
      case Kind::null: return 0.0;
    }
    return 0.0;
  }

  double tail(double x) const {
    if (x < 0.0) throw std::domain_error("subordinator tail requires x >= 0");
    switch (kind_) {
      case Kind::null:
        return 0.0;
      case Kind::scaled_exponential:
        return mass_ * std::exp(-rate_ * x);
      case Kind::tabulated: {
        if (x >= knots_.back().first) return 0.0;
        if (x <= knots_.front().first) return knots_.front().second;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), std::make_pair(x, kInf));
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double t = (x - lo.first) / (hi.first - lo.first);
        return std::exp(std::log(lo.second) + t * (std::log(hi.second) - std::log(lo.second)));
      }
    }
    return 0.0;
  }

  // int_0^inf x nu(dx) = int_0^inf tail(x) dx.
  double mean() const {
    switch (kind_) {
      case Kind::null: return 0.0;
      case Kind::scaled_exponential: return mass_ / rate_;
      case Kind::tabulated: {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
          const double dx = knots_[i + 1].first - knots_[i].first;
          const double m = std::log(knots_[i].second / knots_[i + 1].second) / dx;
          s += std::fabs(m) < 1e-14 ? knots_[i].second * dx
                                    : knots_[i].second / m * (1.0 - std::exp(-m * dx));
        }
        return s;
      }
    }
    return 0.0;
  }

  // int_0^inf x^2 nu(dx) = 2 int_0^inf x tail(x) dx.
  double second_moment() const {
    switch (kind_) {
      case Kind::null: return 0.0;
      case Kind::scaled_exponential: return 2.0 * mass_ / (rate_ * rate_);
      case Kind::tabulated: {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
          const double a = knots_[i].first, b = knots_[i + 1].first;
          const double m = std::log(knots_[i].second / knots_[i + 1].second) / (b - a);
          const double ta = knots_[i].second;
          if (std::fabs(m) < 1e-14) {
            s += ta * 0.5 * (b * b - a * a);
          } else {
            const double em = std::exp(-m * (b - a));
            s += ta * ((a / m + 1.0 / (m * m)) - em * (b / m + 1.0 / (m * m)));
          }
        }
        return 2.0 * s;
      }
    }
    return 0.0;
  }

 private:
  explicit SubordinatorSpec(Kind k) : kind_(k) {}
  Kind kind_;
  double rate_ = 1.0;
  double mass_ = 0.0;
  std::vector<std::pair<double, double>> knots_;
};

struct CoupledPaths {
  std::vector<double> z1_T, z2_T;     // terminal values per path
  std::vector<std::uint32_t> jumps;   // shared Poisson arrivals per path
  std::vector<std::uint8_t> dominated;  // Z1 >= Z2 at every arrival
  double horizon = 0.0;
  std::size_t n_dominated() const {
    std::size_t c = 0;
    for (auto f : dominated) c += f;
    return c;
  }
};

namespace detail {

// Right-inverse of F(x) = [nu((0,x]) + c] / C by bisection; the atom at zero
// has size c / C.
inline double right_inverse(const SubordinatorSpec& nu, double c_defect, double big_c, double u) {
  if (u <= c_defect / big_c) return 0.0;
  const double target = u * big_c - c_defect;  // need nu((0,x]) >= target
  const double m = nu.total_mass();
  // nu((0,x]) = m - tail(x)
  double hi = 1.0;
  for (int it = 0; it < 200 && m - nu.tail(hi) < target; ++it) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (m - nu.tail(mid) >= target)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
  }
  return hi;
}

inline std::uint32_t sample_poisson(SplitMix64& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  const double u = rng.next_open_double();
  double p = std::exp(-lambda);
  double cdf = p;
  std::uint32_t k = 0;
  const std::uint32_t cap = static_cast<std::uint32_t>(10.0 * lambda + 200.0);
  while (u > cdf && k < cap) {
    ++k;
    p *= lambda / k;
    cdf += p;
  }
  return k;
}

}  // namespace detail

// Couples two finite-activity subordinators on one Poisson clock of rate
// C = max total mass; each arrival draws one shared uniform mapped through
// both right-inverses. Requires tail dominance nu1 >= nu2, checked on a grid.
inline CoupledPaths couple_subordinators(const SubordinatorSpec& nu1, const SubordinatorSpec& nu2,
                                         double T, std::size_t n_paths, std::uint64_t seed) {
  if (T <= 0.0) throw ConfigError("coupling requires T > 0");
  const double m1 = nu1.total_mass();
  const double m2 = nu2.total_mass();
  const double C = std::max(m1, m2);
  if (C <= 0.0) throw ConfigError("coupling requires at least one nonzero measure");
  // Precondition: pointwise tail dominance on a grid.
  for (int i = 0; i <= 400; ++i) {
    const double x = 1e-6 * std::pow(2e7, i / 400.0);
    if (nu1.tail(x) < nu2.tail(x) - 1e-12)
      throw InfeasibleError("tail dominance nu1 >= nu2 fails; coupling undefined");
  }
  const double c1 = C - m1;
  const double c2 = C - m2;

  CoupledPaths out;
  out.horizon = T;
  out.z1_T.resize(n_paths);
  out.z2_T.resize(n_paths);
  out.jumps.resize(n_paths);
  out.dominated.resize(n_paths);

  for (std::size_t path = 0; path < n_paths; ++path) {
    SplitMix64 rng(SplitMix64::mix(seed, path));
    const std::uint32_t n = detail::sample_poisson(rng, C * T);
    double z1 = 0.0, z2 = 0.0;
    bool dom = true;
    for (std::uint32_t j = 0; j < n; ++j) {
      const double u = rng.next_double();
      const double y1 = detail::right_inverse(nu1, c1, C, u);
      const double y2 = detail::right_inverse(nu2, c2, C, u);
      z1 += y1;
      z2 += y2;
      if (y1 < y2) dom = false;
    }
    out.z1_T[path] = z1;
    out.z2_T[path] = z2;
    out.jumps[path] = n;
    out.dominated[path] = dom ? 1 : 0;
  }
  return out;
}

struct MarginalReport {
  double sample_mean = 0.0;
  double expected_mean = 0.0;
  double mean_z = 0.0;  // z-score of the mean against the analytic moments
  double sample_second_central = 0.0;
  double expected_variance = 0.0;
  bool pass = false;    // two-sided 3-sigma test on the mean
};

// Compares empirical mean/variance of Z^i_T against T int x nu(dx) and
// T int x^2 nu(dx).
inline MarginalReport marginal_check(const CoupledPaths& paths, int which,
                                     const SubordinatorSpec& nu) {
  const auto& z = which == 1 ? paths.z1_T : paths.z2_T;
  if (z.empty()) throw ConfigError("marginal_check needs simulated paths");
  MarginalReport rep;
  const double n = static_cast<double>(z.size());
  KahanSum s;
  for (double v : z) s.add(v);
  rep.sample_mean = s.value() / n;
  rep.expected_mean = paths.horizon * nu.mean();
  rep.expected_variance = paths.horizon * nu.second_moment();
  KahanSum s2;
  for (double v : z) s2.add((v - rep.sample_mean) * (v - rep.sample_mean));
  rep.sample_second_central = s2.value() / n;
  const double se = std::sqrt(rep.expected_variance / n);
  rep.mean_z = se > 0.0 ? (rep.sample_mean - rep.expected_mean) / se : 0.0;
  rep.pass = std::fabs(rep.mean_z) <= 3.0;
  return rep;
}

}  // namespace distlat

#endif  // DISTLAT_COUPLING_HPP
