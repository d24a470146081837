#ifndef DISTLAT_CHOQUET_HPP
#define DISTLAT_CHOQUET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "distlat/common.hpp"
#include "distlat/distortion.hpp"

namespace distlat {

// Finite distribution with atoms (value, prob). On construction the atoms are
// sorted by value, exact ties merged, and probabilities normalized; the input
// must already sum to 1 within 1e-12.
class DiscreteDistribution {
 public:
  struct Atom {
    double value;
    double prob;
  };

  explicit DiscreteDistribution(std::vector<Atom> atoms) {
    if (atoms.empty()) throw ConfigError("distribution needs at least one atom");
    double sum = 0.0;
    for (const auto& a : atoms) {
      if (!std::isfinite(a.value)) throw ConfigError("distribution values must be finite");
      if (a.prob <= 0.0) throw ConfigError("distribution probabilities must be positive");
      sum += a.prob;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw ConfigError("distribution probabilities must sum to 1 within 1e-12");
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.value < b.value; });
    for (const auto& a : atoms) {
      if (!atoms_.empty() && atoms_.back().value == a.value)
        atoms_.back().prob += a.prob;
      else
        atoms_.push_back(a);
    }
    for (auto& a : atoms_) a.prob /= sum;
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

 private:
  std::vector<Atom> atoms_;
};

// Comonotone evaluation of the Choquet integral: with values sorted in
// descending order and Fbar_j the cumulative probability of the top j values,
//   C[X] = sum_j v_(j) [Psi(Fbar_j) - Psi(Fbar_{j-1})].
// Negative values are covered by the same formula.
template <typename Distortion>
double choquet_probability_with(const DiscreteDistribution& dist, const Distortion& psi) {
  const auto& atoms = dist.atoms();
  double total = 0.0;
  double cum = 0.0;
  double prev = 0.0;
  const std::size_t m = atoms.size();
  for (std::size_t j = 0; j < m; ++j) {
    const auto& a = atoms[m - 1 - j];
    cum = (j + 1 == m) ? 1.0 : cum + a.prob;
    const double cur = psi(cum);
    total += a.value * (cur - prev);
    prev = cur;
  }
  return total;
}

inline double choquet_probability(const DiscreteDistribution& dist,
                                  const ProbabilityDistortion& psi) {
  return choquet_probability_with(dist, psi);
}

// Simple nonnegative function against a jump measure: pieces (mass, level)
// with mass > 0 and level the value taken on a set of that measure-mass.
struct StepFunctionOnMeasure {
  struct Piece {
    double mass;
    double level;
  };
  std::vector<Piece> pieces;
};

// Choquet integral against the distorted measure capacity:
//   int_0^inf D(mass(u > x)) dx = sum_j (l_(j) - l_(j+1)) D(m_j)
// with levels sorted descending, m_j the cumulative mass of the top j levels.
// D is the (nonnegative) measure-distortion difference.
inline double choquet_measure(const StepFunctionOnMeasure& u, const MeasureDistortion& d) {
  std::vector<StepFunctionOnMeasure::Piece> ps;
  for (const auto& p : u.pieces) {
    if (p.level < 0.0) throw ConfigError("choquet_measure requires nonnegative levels");
    if (p.mass <= 0.0 || !std::isfinite(p.mass)) throw ConfigError("piece masses must be positive and finite");
    if (p.level == 0.0) continue;
    if (!ps.empty() && ps.back().level == p.level)
      ps.back().mass += p.mass;
    else
      ps.push_back(p);
  }
  std::sort(ps.begin(), ps.end(),
            [](const auto& a, const auto& b) { return a.level > b.level; });
  // merge ties after sorting
  std::vector<StepFunctionOnMeasure::Piece> merged;
  for (const auto& p : ps) {
    if (!merged.empty() && merged.back().level == p.level)
      merged.back().mass += p.mass;
    else
      merged.push_back(p);
  }
  double total = 0.0;
  double cum_mass = 0.0;
  for (std::size_t j = 0; j < merged.size(); ++j) {
    cum_mass += merged[j].mass;
    const double next_level = (j + 1 < merged.size()) ? merged[j + 1].level : 0.0;
    total += (merged[j].level - next_level) * d.diff(cum_mass);
  }
  return total;
}

// Radon-Nikodym weights of the maximizing measure: on the atom with value x,
//   phi = [Psi(Fbar(x)) - Psi(Fbar(x-))] / [Fbar(x) - Fbar(x-)],
// with Fbar the survival function. Weights are stored in the order of the
// distribution's (ascending) atoms.
struct MaximizingDensity {
  std::vector<double> weights;  // phi on each atom, ascending value order
  double attained;              // m_X[X] = sum phi_i p_i v_i
  double total_mass;            // sum phi_i p_i (should be 1)
};

inline MaximizingDensity maximizing_density(const DiscreteDistribution& dist,
                                            const ProbabilityDistortion& psi) {
  const auto& atoms = dist.atoms();
  const std::size_t m = atoms.size();
  MaximizingDensity out;
  out.weights.assign(m, 0.0);
  double cum = 0.0, prev = 0.0;
  double attained = 0.0, mass = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t i = m - 1 - j;  // descending values
    cum = (j + 1 == m) ? 1.0 : cum + atoms[i].prob;
    const double cur = psi(cum);
    const double phi = (cur - prev) / atoms[i].prob;
    out.weights[i] = phi;
    attained += phi * atoms[i].prob * atoms[i].value;
    mass += phi * atoms[i].prob;
    prev = cur;
  }
  out.attained = attained;
  out.total_mass = mass;
  return out;
}

// Brute-force check of the sup-over-measures representation. Feasibility
// q(A) <= Psi(p(A)) is verified over all 2^n subsets; candidates are the
// comonotone maximizer plus `trials` random vectors projected into the
// feasible set by shrinking toward the maximizer.
inline double bruteforce_sup(const DiscreteDistribution& dist, const ProbabilityDistortion& psi,
                             int trials, std::uint64_t seed = 1234567ULL) {
  const auto& atoms = dist.atoms();
  const std::size_t n = atoms.size();
  if (n > 12) throw ConfigError("bruteforce_sup supports at most 12 atoms");
  const std::size_t nmask = std::size_t{1} << n;

  std::vector<double> psi_of_p(nmask, 0.0);
  for (std::size_t mask = 1; mask < nmask; ++mask) {
    double pa = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) pa += atoms[i].prob;
    psi_of_p[mask] = psi(std::min(pa, 1.0));
  }

  const auto feasible = [&](const std::vector<double>& q) {
    for (std::size_t mask = 1; mask < nmask; ++mask) {
      double qa = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (std::size_t{1} << i)) qa += q[i];
      if (qa > psi_of_p[mask] + 1e-12) return false;
    }
    return true;
  };
  const auto objective = [&](const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += q[i] * atoms[i].value;
    return s;
  };

  const MaximizingDensity md = maximizing_density(dist, psi);
  std::vector<double> qstar(n);
  for (std::size_t i = 0; i < n; ++i) qstar[i] = md.weights[i] * atoms[i].prob;

  double best = objective(qstar);
  SplitMix64 rng(seed);
  std::vector<double> q(n), qt(n);
  for (int t = 0; t < trials; ++t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = -std::log(rng.next_open_double());
      sum += q[i];
    }
    for (std::size_t i = 0; i < n; ++i) q[i] /= sum;
    double step = 1.0;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      for (std::size_t i = 0; i < n; ++i) qt[i] = qstar[i] + step * (q[i] - qstar[i]);
      if (feasible(qt)) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) continue;  // shrunk to the maximizer itself
    best = std::max(best, objective(qt));
  }
  return best;
}

// Step function with signed levels (the jump exposure u in the driver).
struct SignedStepFunction {
  struct Piece {
    double mass;
    double level;  // may be negative
  };
  std::vector<Piece> pieces;
};

// Driver of the limiting g-expectation:
//   g(h, u) = h+ D+ s2 + h- D- s2 + C^{G+ - id}(u+) + C^{id - G-}(u-).
inline double driver_g(double h, const SignedStepFunction& u, const DriftShift& shift,
                       const MeasureDistortion& gamma_plus, const MeasureDistortion& gamma_minus,
                       double sigma2) {
  if (gamma_plus.side() != TiltSide::upper || gamma_minus.side() != TiltSide::lower)
    throw ConfigError("driver_g expects an (upper, lower) jump-rate distortion pair");
  StepFunctionOnMeasure up, dn;
  for (const auto& p : u.pieces) {
    if (p.level > 0.0)
      up.pieces.push_back({p.mass, p.level});
    else if (p.level < 0.0)
      dn.pieces.push_back({p.mass, -p.level});
  }
  const double hp = std::max(h, 0.0);
  const double hm = std::max(-h, 0.0);
  return hp * shift.plus * sigma2 + hm * shift.minus * sigma2 +
         choquet_measure(up, gamma_plus) + choquet_measure(dn, gamma_minus);
}

}  // namespace distlat

#endif  // DISTLAT_CHOQUET_HPP
