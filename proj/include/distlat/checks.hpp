#ifndef DISTLAT_CHECKS_HPP
#define DISTLAT_CHECKS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "distlat/choquet.hpp"
#include "distlat/closedform.hpp"
#include "distlat/common.hpp"
#include "distlat/coupling.hpp"
#include "distlat/distortion.hpp"
#include "distlat/lattice.hpp"
#include "distlat/levy.hpp"
#include "distlat/valuation.hpp"

namespace distlat {

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace checks {

inline std::vector<ProbabilityDistortion> builtin_distortions() {
  return {ProbabilityDistortion::linear(), ProbabilityDistortion::minmaxvar(0.4),
          ProbabilityDistortion::minmaxvar(1.0), ProbabilityDistortion::exponential(0.9),
          ProbabilityDistortion::piecewise_linear({{0.0, 0.0}, {0.25, 0.5}, {1.0, 1.0}}),
          ProbabilityDistortion::composite({{0.5, ProbabilityDistortion::linear()},
                                            {0.5, ProbabilityDistortion::minmaxvar(0.4)}})};
}

// Monotonicity and midpoint concavity on a 1025-point grid plus seeded
// random pairs, tolerance 1e-12.
template <typename Eval>
inline bool distortion_shape_ok(const Eval& d, std::uint64_t seed, std::string* why) {
  const int grid_n = 1024;
  double prev = 0.0;
  for (int i = 0; i <= grid_n; ++i) {
    const double p = static_cast<double>(i) / grid_n;
    const double v = d(p);
    if (v < prev - 1e-12) {
      if (why) *why = "monotonicity fails near p = " + std::to_string(p);
      return false;
    }
    prev = std::max(prev, v);
    if (v < -1e-12 || v > 1.0 + 1e-12) {
      if (why) *why = "range violation at p = " + std::to_string(p);
      return false;
    }
  }
  if (std::fabs(d(0.0)) > 0.0 || std::fabs(d(1.0) - 1.0) > 0.0) {
    if (why) *why = "endpoints not exact";
    return false;
  }
  SplitMix64 rng(seed);
  for (int t = 0; t < 1000; ++t) {
    double p = rng.next_double(), q = rng.next_double();
    if (p > q) std::swap(p, q);
    if (d(p) > d(q) + 1e-12) {
      if (why) *why = "random monotonicity fails";
      return false;
    }
    if (d(0.5 * (p + q)) < 0.5 * (d(p) + d(q)) - 1e-12) {
      if (why) *why = "midpoint concavity fails";
      return false;
    }
  }
  return true;
}

inline PropertyResult distortion_invariants(std::uint64_t seed) {
  PropertyResult r{"distortion: shape invariants (all built-in families)", true, ""};
  for (const auto& d : builtin_distortions()) {
    std::string why;
    if (!distortion_shape_ok([&](double p) { return d(p); }, seed, &why)) {
      r.pass = false;
      r.detail = why;
      return r;
    }
  }
  return r;
}

inline PropertyResult scaling_family_invariants(std::uint64_t seed) {
  PropertyResult r{"distortion: scaled families are valid distortions with upward shift", true, ""};
  std::vector<ScalingFamily> fams = {
      ScalingFamily::sqrt_brownian(ProbabilityDistortion::exponential(0.9), 0.2),
      ScalingFamily::general_example(ProbabilityDistortion::exponential(0.9),
                                     ProbabilityDistortion::exponential(2.0),
                                     ProbabilityDistortion::linear(), 0.2),
      ScalingFamily::convex_cgmy(0.5)};
  for (const auto& f : fams) {
    for (int k = 2; k <= 10; k += 2) {
      const double delta = std::min(std::ldexp(1.0, -k), f.delta0());
      std::string why;
      if (!distortion_shape_ok([&](double p) { return f(p, delta); }, seed, &why)) {
        r.pass = false;
        r.detail = "family at delta = " + std::to_string(delta) + ": " + why;
        return r;
      }
      for (int i = 0; i <= 64; ++i) {
        const double p = i / 64.0;
        if (f(p, delta) < p - 1e-12) {
          r.pass = false;
          r.detail = "upward shift fails at p = " + std::to_string(p);
          return r;
        }
      }
    }
  }
  return r;
}

inline PropertyResult duality_involution(std::uint64_t) {
  PropertyResult r{"distortion: dual is an involution", true, ""};
  for (const auto& d : builtin_distortions()) {
    for (int i = 0; i <= 256; ++i) {
      const double p = i / 256.0;
      const double twice = 1.0 - (1.0 - d(p));  // dual of dual evaluated directly
      if (std::fabs(twice - d(p)) > 1e-14) {
        r.pass = false;
        r.detail = "involution off at p = " + std::to_string(p);
        return r;
      }
      // and through the API
      const double via = 1.0 - d.dual(1.0 - p);
      if (std::fabs(via - d(p)) > 1e-14) {
        r.pass = false;
        r.detail = "dual(dual) != id at p = " + std::to_string(p);
        return r;
      }
    }
  }
  return r;
}

inline PropertyResult kd_values(std::uint64_t) {
  PropertyResult r{"distortion: integrability constants (analytic cases)", true, ""};
  const double kd_lin = ProbabilityDistortion::linear().kd_constant();
  if (std::fabs(kd_lin - 4.0) > 1e-8) {
    r.pass = false;
    r.detail = "probability-case linear K_D != 4";
    return r;
  }
  const auto capped = MeasureDistortion::tabulated({{0.0, 0.0}, {1.0, 1.0}});
  if (std::fabs(capped.kd_constant() - 4.0) > 1e-8) {
    r.pass = false;
    r.detail = "measure-case min(y,1) K_D != 4";
    return r;
  }
  if (std::isfinite(MeasureDistortion::power_shift(0.5).kd_constant())) {
    r.pass = false;
    r.detail = "power tilt K_D should diverge";
    return r;
  }
  if (std::isfinite(ProbabilityDistortion::minmaxvar(1.0).kd_constant())) {
    r.pass = false;
    r.detail = "minmaxvar gamma=1 K_D should diverge";
    return r;
  }
  return r;
}

inline DiscreteDistribution random_distribution(SplitMix64& rng, int max_atoms) {
  const int n = 2 + static_cast<int>(rng.next_double() * (max_atoms - 1));
  std::vector<DiscreteDistribution::Atom> atoms;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = rng.next_open_double();
    atoms.push_back({-2.0 + 4.0 * rng.next_double(), w});
    sum += w;
  }
  for (auto& a : atoms) a.prob /= sum;
  return DiscreteDistribution(std::move(atoms));
}

inline PropertyResult choquet_comonotone_sup(std::uint64_t seed, int n_dists = 50, int trials = 400) {
  PropertyResult r{"choquet: brute-force sup equals the comonotone value", true, ""};
  SplitMix64 rng(seed ^ 0xc0ffee);
  const std::vector<ProbabilityDistortion> psis = {ProbabilityDistortion::minmaxvar(1.0),
                                                   ProbabilityDistortion::exponential(0.9),
                                                   ProbabilityDistortion::minmaxvar(0.4)};
  for (int t = 0; t < n_dists; ++t) {
    const auto dist = random_distribution(rng, 6);
    for (const auto& psi : psis) {
      const double cv = choquet_probability(dist, psi);
      const double bf = bruteforce_sup(dist, psi, trials, rng.next_u64());
      if (bf > cv + 1e-9 || cv - bf > 1e-9) {
        r.pass = false;
        std::ostringstream os;
        os << "mismatch " << cv << " vs " << bf << " at instance " << t;
        r.detail = os.str();
        return r;
      }
    }
  }
  return r;
}

inline PropertyResult choquet_maximizer(std::uint64_t seed) {
  PropertyResult r{"choquet: maximizing density attains the value and is feasible", true, ""};
  SplitMix64 rng(seed ^ 0xabcdef);
  for (int t = 0; t < 50; ++t) {
    const auto dist = random_distribution(rng, 6);
    const auto psi = ProbabilityDistortion::minmaxvar(1.0);
    const auto md = maximizing_density(dist, psi);
    const double cv = choquet_probability(dist, psi);
    if (std::fabs(md.attained - cv) > 1e-12 || std::fabs(md.total_mass - 1.0) > 1e-12) {
      r.pass = false;
      r.detail = "attainment or mass off";
      return r;
    }
    const auto& atoms = dist.atoms();
    const std::size_t nmask = std::size_t{1} << atoms.size();
    for (std::size_t mask = 1; mask < nmask; ++mask) {
      double qa = 0.0, pa = 0.0;
      for (std::size_t i = 0; i < atoms.size(); ++i)
        if (mask & (std::size_t{1} << i)) {
          qa += md.weights[i] * atoms[i].prob;
          pa += atoms[i].prob;
        }
      if (qa > psi(std::min(pa, 1.0)) + 1e-12) {
        r.pass = false;
        r.detail = "maximizer violates a capacity constraint";
        return r;
      }
    }
  }
  return r;
}

inline PropertyResult choquet_lipschitz(std::uint64_t seed) {
  PropertyResult r{"choquet: value bounded by K_D sqrt(E[X^2]) for integrable distortions",
                   true, ""};
  SplitMix64 rng(seed ^ 0x5eed);
  const auto psi = ProbabilityDistortion::minmaxvar(0.4);
  const double kd = psi.kd_constant();
  for (int t = 0; t < 100; ++t) {
    auto dist = random_distribution(rng, 6);
    // shift to nonnegative values
    std::vector<DiscreteDistribution::Atom> atoms = dist.atoms();
    for (auto& a : atoms) a.value = std::fabs(a.value);
    const DiscreteDistribution nn(std::move(atoms));
    double ex2 = 0.0;
    for (const auto& a : nn.atoms()) ex2 += a.prob * a.value * a.value;
    if (choquet_probability(nn, psi) > kd * std::sqrt(ex2) + 1e-9) {
      r.pass = false;
      r.detail = "bound violated";
      return r;
    }
  }
  return r;
}

inline PropertyResult choquet_cash_homogeneity(std::uint64_t seed) {
  PropertyResult r{"choquet: positive homogeneity and translation", true, ""};
  SplitMix64 rng(seed ^ 0x77);
  const auto psi = ProbabilityDistortion::exponential(0.9);
  for (int t = 0; t < 100; ++t) {
    const auto dist = random_distribution(rng, 6);
    const double c = 2.0 * rng.next_double();
    const double d = -1.0 + 2.0 * rng.next_double();
    std::vector<DiscreteDistribution::Atom> atoms = dist.atoms();
    for (auto& a : atoms) a.value = c * a.value + d;
    const double lhs = choquet_probability(DiscreteDistribution(std::move(atoms)), psi);
    const double rhs = c * choquet_probability(dist, psi) + d;
    if (std::fabs(lhs - rhs) > 1e-12) {
      r.pass = false;
      r.detail = "affine equivariance off by " + std::to_string(lhs - rhs);
      return r;
    }
  }
  return r;
}

inline PropertyResult levy_tails(std::uint64_t) {
  PropertyResult r{"levy: tails monotone and interval masses additive", true, ""};
  const auto m = LevyModel::tail_cgmy(0.0, 0.0, 1.0, 5.0, 5.0, 0.5);
  double prev = kInf;
  for (double x = 0.01; x <= 5.0; x += 0.01) {
    const double t = m.tail_plus(x);
    if (t > prev + 1e-15) {
      r.pass = false;
      r.detail = "tail not nonincreasing";
      return r;
    }
    prev = t;
  }
  for (double c = 0.25; c <= 2.0; c += 0.25) {
    const double whole = m.sigma2_interval(-c, c);
    const double parts = m.sigma2_interval(-c, -0.01) + m.sigma2_interval(-0.01, 0.01) +
                         m.sigma2_interval(0.01, c);
    if (std::fabs(whole - parts) > 1e-10) {
      r.pass = false;
      r.detail = "interval additivity off";
      return r;
    }
  }
  return r;
}

inline PropertyResult levy_closed_forms(std::uint64_t) {
  PropertyResult r{"levy: closed-form moments match quadrature", true, ""};
  const auto m = LevyModel::tail_cgmy(0.0, 0.0, 1.0, 5.0, 5.0, 0.5);
  const double closed = m.sigma2_total();
  const double quad = m.sigma2_interval(-40.0, 40.0);
  if (std::fabs(closed - quad) > 1e-8) {
    r.pass = false;
    r.detail = "Sigma^2 closed vs quadrature gap " + std::to_string(closed - quad);
    return r;
  }
  return r;
}

inline PropertyResult levy_tilt_identity(std::uint64_t) {
  PropertyResult r{"levy: power tilt of an exponential-power tail is exact", true, ""};
  const auto m = LevyModel::tail_cgmy(0.0, 0.0, 1.0, 5.0, 5.0, 0.5);
  const auto q = tilt_qsharp(m, 0.0, MeasureDistortion::power_shift(0.5),
                             MeasureDistortion::identity(TiltSide::lower));
  const double g = 0.5;
  for (double x = 0.01; x <= 5.0; x += 0.0499) {
    const double lam = m.tail_plus(x);
    const double direct = lam + g * std::pow(lam, 1.0 / (1.0 + g));
    const double via = q.tilted.tail_plus(x);
    if (std::fabs(direct - via) > 1e-12) {
      r.pass = false;
      r.detail = "tilted tail mismatch at x = " + std::to_string(x);
      return r;
    }
  }
  return r;
}

inline PropertyResult lattice_gbm_exact(std::uint64_t) {
  PropertyResult r{"lattice: jump-free weights are exactly (1/6, 2/3, 1/6)", true, ""};
  const auto m = LevyModel::brownian(-0.02, 0.2);
  for (int n : {16, 250, 1024}) {
    const auto g = make_grid(m, 1.0, n);
    const auto sd = build_step_distribution(m, g);
    if (sd.p1 != 1.0 / 6.0 || sd.pm1 != 1.0 / 6.0 || std::fabs(sd.p0 - 2.0 / 3.0) > 1e-15) {
      r.pass = false;
      r.detail = "weights off at n = " + std::to_string(n);
      return r;
    }
  }
  return r;
}

inline PropertyResult lattice_bound_chain(std::uint64_t) {
  PropertyResult r{"lattice: solvability chain |beta|/h <= gamma/h^2 <= alpha <= 1", true, ""};
  std::vector<LevyModel> models = {
      LevyModel::brownian(0.0, 0.2), LevyModel::tail_cgmy(0.0, 0.2, 0.01, 25.0, 5.0, 0.5),
      LevyModel::tail_cgmy(0.0, 0.0, 1.0, 5.0, 5.0, 0.5),
      LevyModel::tail_cgmy(0.0, 0.25, 0.02, 10.0, 6.0, 1.0)};
  for (const auto& m : models) {
    for (int n : {64, 256, 1024}) {
      const auto g = make_grid(m, 1.0, n);
      const auto rep = validate_conditions(m, g);
      for (const auto& item : rep.items) {
        if (!item.pass) {
          r.pass = false;
          r.detail = item.name + " fails at n = " + std::to_string(n);
          return r;
        }
      }
    }
  }
  return r;
}

inline PropertyResult lattice_moments(std::uint64_t) {
  PropertyResult r{"lattice: step mean zero and variance delta(sigma^2+Sigma^2)/h^2", true, ""};
  std::vector<LevyModel> models = {LevyModel::brownian(0.0, 0.2),
                                   LevyModel::tail_cgmy(0.0, 0.2, 0.01, 25.0, 5.0, 0.5),
                                   LevyModel::tail_cgmy(0.0, 0.0, 1.0, 5.0, 5.0, 0.5)};
  for (const auto& m : models) {
    const auto g = make_grid(m, 1.0, 500);
    const auto sd = build_step_distribution(m, g);
    const double target_var = g.delta * (m.sigma2() + m.sigma2_total()) / (g.h * g.h);
    if (std::fabs(sd.mean_k()) > 1e-10 ||
        std::fabs(sd.second_moment_k() - target_var) > 1e-10 * std::max(1.0, target_var)) {
      r.pass = false;
      r.detail = "moment mismatch";
      return r;
    }
  }
  return r;
}

inline PropertyResult valuation_tiny_oracle(std::uint64_t) {
  PropertyResult r{"valuation: recursion equals the path-tree oracle on tiny instances", true, ""};
  const auto m = LevyModel::brownian(-0.02, 0.2);
  const auto psi = ProbabilityDistortion::minmaxvar(0.5);
  for (int n : {1, 2, 3, 4}) {
    const auto g = make_grid(m, 0.1, n);
    for (const Payoff& p : {Payoff::terminal_call(100.0, 100.0),
                            Payoff::up_in_digital(100.0, 100.5)}) {
      const double oracle = enumerate_paths_value(m, psi, p, g);
      const double fast = distorted_value(m, psi, p, g).value;
      if (std::fabs(oracle - fast) > 1e-12) {
        r.pass = false;
        r.detail = "oracle gap " + std::to_string(oracle - fast);
        return r;
      }
    }
  }
  return r;
}

inline PropertyResult valuation_structural(std::uint64_t) {
  PropertyResult r{"valuation: linear reduction, constants, monotone and distorted >= linear",
                   true, ""};
  const auto m = LevyModel::brownian(-0.02, 0.2);
  const auto g = make_grid(m, 0.5, 64);
  const auto call = Payoff::terminal_call(100.0, 100.0);
  const auto lin = linear_value(m, call, g);
  const auto lin2 = distorted_value(m, ProbabilityDistortion::linear(), call, g);
  if (lin.value != lin2.value) {
    r.pass = false;
    r.detail = "linear reduction not bitwise";
    return r;
  }
  const auto psi = ProbabilityDistortion::exponential(0.9);
  const auto dis = distorted_value(m, psi, call, g);
  if (dis.value < lin.value - 1e-12) {
    r.pass = false;
    r.detail = "distorted < linear for an upward-shifting distortion";
    return r;
  }
  const auto table = Payoff::terminal_table({{0, 1.0}});
  const auto cst = distorted_value(m, psi, table, g);
  if (std::fabs(cst.value - 1.0) > 1e-12) {
    r.pass = false;
    r.detail = "constants not preserved";
    return r;
  }
  return r;
}

inline PropertyResult valuation_splice(std::uint64_t) {
  PropertyResult r{"valuation: splicing an intermediate slice reproduces the value", true, ""};
  const auto m = LevyModel::tail_cgmy(0.0, 0.2, 0.01, 25.0, 8.0, 0.5);
  const auto psi = ProbabilityDistortion::exponential(0.9);
  const auto call = Payoff::terminal_call(100.0, 100.0);
  const int n = 48, k = 16;
  const auto g = make_grid(m, 0.25, n);
  std::map<long, double> slice;
  const auto full = distorted_value(m, psi, call, g, &slice, k);
  GridSpec g2 = g;
  g2.n_steps = k;
  g2.T = k * g.delta;
  const auto spliced = distorted_value(m, psi, Payoff::terminal_table(std::move(slice)), g2);
  if (std::fabs(full.value - spliced.value) > 1e-12) {
    r.pass = false;
    r.detail = "splice gap " + std::to_string(full.value - spliced.value);
    return r;
  }
  return r;
}

inline PropertyResult coupling_check(std::uint64_t seed) {
  PropertyResult r{"coupling: pathwise domination and analytic marginals", true, ""};
  const auto nu1 = SubordinatorSpec::scaled_exponential(1.0, 2.0);
  const auto nu2 = SubordinatorSpec::scaled_exponential(2.0, 1.0);
  const auto paths = couple_subordinators(nu1, nu2, 1.0, 5000, seed);
  if (paths.n_dominated() != paths.z1_T.size()) {
    r.pass = false;
    r.detail = "domination fails on some path";
    return r;
  }
  const auto m1 = marginal_check(paths, 1, nu1);
  const auto m2 = marginal_check(paths, 2, nu2);
  if (!m1.pass || !m2.pass) {
    r.pass = false;
    r.detail = "marginal z-scores " + std::to_string(m1.mean_z) + ", " + std::to_string(m2.mean_z);
    return r;
  }
  return r;
}

}  // namespace checks

inline std::vector<PropertyResult> run_all_checks(std::uint64_t seed) {
  using Fn = std::function<PropertyResult(std::uint64_t)>;
  const std::vector<Fn> fns = {
      checks::distortion_invariants, checks::scaling_family_invariants,
      checks::duality_involution,    checks::kd_values,
      [](std::uint64_t s) { return checks::choquet_comonotone_sup(s, 50, 400); },
      checks::choquet_maximizer,
      checks::choquet_lipschitz,     checks::choquet_cash_homogeneity,
      checks::levy_tails,            checks::levy_closed_forms,
      checks::levy_tilt_identity,    checks::lattice_gbm_exact,
      checks::lattice_bound_chain,   checks::lattice_moments,
      checks::valuation_tiny_oracle, checks::valuation_structural,
      checks::valuation_splice,      checks::coupling_check};
  std::vector<PropertyResult> out;
  out.reserve(fns.size());
  for (const auto& f : fns) out.push_back(f(seed));
  return out;
}

}  // namespace distlat

#endif  // DISTLAT_CHECKS_HPP
