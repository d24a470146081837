#ifndef DISTLAT_VALUATION_HPP
#define DISTLAT_VALUATION_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "distlat/choquet.hpp"
#include "distlat/common.hpp"
#include "distlat/distortion.hpp"
#include "distlat/lattice.hpp"
#include "distlat/levy.hpp"

namespace distlat {

// Claim on lattice paths, evaluated on S = S0 exp(X). Up-and-in variants
// carry a barrier H > S0 monitored at slice times.
class Payoff {
 public:
  enum class Kind { terminal_call, terminal_digital, terminal_table, up_in_digital, up_in_call };

  static Payoff terminal_call(double S0, double K) {
    Payoff p(Kind::terminal_call);
    p.S0_ = require_pos(S0, "S0");
    p.K_ = require_pos(K, "K");
    return p;
  }
  static Payoff terminal_digital(double S0, double K) {
    Payoff p(Kind::terminal_digital);
    p.S0_ = require_pos(S0, "S0");
    p.K_ = require_pos(K, "K");
    return p;
  }
  // Table keyed by terminal lattice position; positions outside the table
  // clamp to the nearest key.
  static Payoff terminal_table(std::map<long, double> table) {
    if (table.empty()) throw ConfigError("terminal table payoff needs at least one entry");
    Payoff p(Kind::terminal_table);
    p.table_ = std::make_shared<const std::map<long, double>>(std::move(table));
    return p;
  }
  static Payoff up_in_digital(double S0, double H) {
    Payoff p(Kind::up_in_digital);
    p.S0_ = require_pos(S0, "S0");
    p.H_ = require_pos(H, "H");
    if (H <= S0) throw ConfigError("up-and-in payoff requires H > S0");
    return p;
  }
  static Payoff up_in_call(double S0, double H, double K) {
    Payoff p(Kind::up_in_call);
    p.S0_ = require_pos(S0, "S0");
    p.H_ = require_pos(H, "H");
    p.K_ = require_pos(K, "K");
    if (H <= S0) throw ConfigError("up-and-in payoff requires H > S0");
    return p;
  }

  // Affine image c F + d (c >= 0); used by homogeneity/translation checks.
  Payoff affine(double c, double d) const {
    if (c < 0.0) throw ConfigError("affine payoff scale must be nonnegative");
    Payoff p(*this);
    p.scale_ *= c;
    p.offset_ = c * p.offset_ + d;
    return p;
  }

  Kind kind() const { return kind_; }
  bool is_barrier() const { return kind_ == Kind::up_in_digital || kind_ == Kind::up_in_call; }
  double S0() const { return S0_; }
  double strike() const { return K_; }
  double barrier() const { return H_; }
  double log_barrier() const { return std::log(H_ / S0_); }

  double terminal_value(double x, long k, bool hit) const {
    const double S = S0_ * std::exp(std::min(x, 700.0));
    double v = 0.0;
    switch (kind_) {
      case Kind::terminal_call:
        v = std::max(S - K_, 0.0);
        break;
      case Kind::terminal_digital:
        v = S >= K_ ? 1.0 : 0.0;
        break;
      case Kind::terminal_table: {
        const auto& t = *table_;
        auto it = t.lower_bound(k);
        if (it == t.end())
          v = std::prev(t.end())->second;
        else if (it->first == k || it == t.begin())
          v = it->second;
        else
          v = (k - std::prev(it)->first <= it->first - k) ? std::prev(it)->second : it->second;
        break;
      }
      case Kind::up_in_digital:
        v = hit ? 1.0 : 0.0;
        break;
      case Kind::up_in_call:
        v = hit ? std::max(S - K_, 0.0) : 0.0;
        break;
    }
    return scale_ * v + offset_;
  }

 private:
  explicit Payoff(Kind k) : kind_(k) {}
  static double require_pos(double v, const char* name) {
    if (v <= 0.0) throw ConfigError(std::string(name) + " must be positive");
    return v;
  }

  Kind kind_;
  double S0_ = 1.0, K_ = 1.0, H_ = 0.0;
  double scale_ = 1.0, offset_ = 0.0;
  std::shared_ptr<const std::map<long, double>> table_;
};

struct SliceDiagnostics {
  double vmin = 0.0;
  double vmax = 0.0;
};

struct ValuationResult {
  double value = 0.0;
  std::vector<SliceDiagnostics> slices;  // index i = slice i, 0..n
  double truncated_mass = 0.0;
  double runtime_ms = 0.0;
};

namespace detail {

// One-step distortion applied per slice; identity marks the linear case.
struct StepDistortion {
  std::function<double(double)> psi;
  bool linear = false;
};

inline long poisson_quantile(double lambda, double tail_tol) {
  if (lambda <= 0.0) return 1;
  if (lambda > 100.0)
    return static_cast<long>(std::ceil(lambda + 12.0 * std::sqrt(lambda))) + 1;
  double p = std::exp(-lambda);
  double cdf = p;
  long m = 0;
  while (1.0 - cdf > tail_tol && m < 4000) {
    ++m;
    p *= lambda / m;
    cdf += p;
  }
  return std::max<long>(m + 1, 1);
}

// Lattice position cap: enough room for the diffusive spread plus the number
// of large jumps whose Poisson tail is negligible, widened to cover barriers.
inline long position_cap(const StepDistribution& sd, const GridSpec& g, const Payoff& payoff) {
  const double var1 = sd.second_moment_k();
  const long k_diff = static_cast<long>(std::ceil(12.0 * std::sqrt(g.n_steps * var1))) + 2;
  const double big_mass = std::max(0.0, 1.0 - (sd.p1 + sd.p0 + sd.pm1));
  const long k_jump = poisson_quantile(big_mass * g.n_steps, 1e-14);
  long cap = k_jump * g.k_max + k_diff;
  if (payoff.is_barrier()) {
    const long kb = static_cast<long>(std::ceil(payoff.log_barrier() / g.h)) + 2;
    cap = std::max(cap, kb + k_diff);
  }
  return std::min<long>(cap, static_cast<long>(g.n_steps) * g.k_max);
}

inline long drift_span(const GridSpec& g, double drift) {
  return static_cast<long>(std::ceil(std::fabs(drift) * g.T / g.h)) + 1;
}

// Comonotone one-step weights for a monotone value vector: Psi increments of
// the cumulative step probabilities in the given position order. The final
// cumulative is pinned to 1 so constants are preserved.
inline std::vector<double> comonotone_increments(const StepDistribution& sd,
                                                 const StepDistortion& psi, bool descending) {
  const long K = sd.k_max;
  const std::size_t W = static_cast<std::size_t>(2 * K + 1);
  std::vector<double> incr(W);
  if (psi.linear) {
    for (std::size_t j = 0; j < W; ++j) {
      const long k = descending ? K - static_cast<long>(j) : -K + static_cast<long>(j);
      incr[j] = sd.prob(k);
    }
  } else {
    KahanSum cum;
    double prev = 0.0;
    for (std::size_t j = 0; j < W; ++j) {
      const long k = descending ? K - static_cast<long>(j) : -K + static_cast<long>(j);
      cum.add(sd.prob(k));
      const double F = (j + 1 == W) ? 1.0 : std::min(cum.value(), 1.0);
      const double cur = psi.psi(F);
      incr[j] = std::max(cur - prev, 0.0);
      prev = cur;
    }
  }
  // Pin the total weight to one (two correction passes).
  for (int pass = 0; pass < 2; ++pass) {
    KahanSum s;
    for (double w : incr) s.add(w);
    const double err = 1.0 - s.value();
    if (err == 0.0) break;
    auto it = std::max_element(incr.begin(), incr.end());
    *it += err;
  }
  return incr;
}

enum class Monotonicity { constant, nondecreasing, nonincreasing, none };

inline Monotonicity scan_monotonicity(const std::vector<double>& v, std::size_t lo,
                                      std::size_t hi) {
  bool up = true, down = true;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    if (v[i] < v[i - 1]) up = false;
    if (v[i] > v[i - 1]) down = false;
    if (!up && !down) return Monotonicity::none;
  }
  if (up && down) return Monotonicity::constant;
  return up ? Monotonicity::nondecreasing : Monotonicity::nonincreasing;
}

struct Engine {
  const LevyModel& model;
  const StepDistribution& sd;
  const GridSpec& grid;
  const Payoff& payoff;
  StepDistortion psi;

  long cap = 0;   // interior positions: k in [-cap, cap]
  long pad = 0;   // one-step reach
  std::size_t W = 0;

  std::vector<double> incr_desc, incr_asc;
  bool have_desc = false, have_asc = false;

  const std::vector<double>& increments(bool descending) {
    if (descending) {
      if (!have_desc) {
        incr_desc = comonotone_increments(sd, psi, true);
        have_desc = true;
      }
      return incr_desc;
    }
    if (!have_asc) {
      incr_asc = comonotone_increments(sd, psi, false);
      have_asc = true;
    }
    return incr_asc;
  }

  std::size_t index(long k) const { return static_cast<std::size_t>(k + cap + pad); }

  void refresh_padding(std::vector<double>& v) const {
    const double lo = v[index(-cap)];
    const double hi = v[index(cap)];
    for (long k = -cap - pad; k < -cap; ++k) v[index(k)] = lo;
    for (long k = cap + 1; k <= cap + pad; ++k) v[index(k)] = hi;
  }

  // next: padded values at slice i+1; out: values at slice i (interior only).
  void apply_step(const std::vector<double>& next, std::vector<double>& out) {
    const Monotonicity mono =
        psi.linear ? Monotonicity::nondecreasing
                   : scan_monotonicity(next, index(-cap), index(cap) + 1);
    const long K = sd.k_max;
    if (mono != Monotonicity::none) {
      const bool descending = (mono != Monotonicity::nonincreasing);
      const auto& w = increments(descending);
      const long start = descending ? K : -K;
      const long step = descending ? -1 : 1;
      for (long k = -cap; k <= cap; ++k) {
        const std::size_t base = index(k);
        double acc = 0.0;
        long s = start;
        for (std::size_t j = 0; j < w.size(); ++j, s += step) acc += w[j] * next[base + s];
        out[index(k)] = acc;
      }
      return;
    }
    // General path: per-node comonotone evaluation with exact tie merging.
    std::vector<std::pair<double, double>> vp;
    vp.reserve(static_cast<std::size_t>(2 * K + 1));
    for (long k = -cap; k <= cap; ++k) {
      vp.clear();
      for (long s = -K; s <= K; ++s) {
        const double p = sd.prob(s);
        if (p > 0.0) vp.emplace_back(next[index(k) + s], p);
      }
      std::sort(vp.begin(), vp.end(),
                [](const auto& a, const auto& b) { return a.first > b.first; });
      double total = 0.0, cum = 0.0, prev = 0.0;
      std::size_t j = 0;
      while (j < vp.size()) {
        double v = vp[j].first;
        double pr = 0.0;
        while (j < vp.size() && vp[j].first == v) pr += vp[j++].second;
        cum += pr;
        const double F = (j == vp.size()) ? 1.0 : std::min(cum, 1.0);
        const double cur = psi.linear ? F : psi.psi(F);
        total += v * (cur - prev);
        prev = cur;
      }
      out[index(k)] = total;
    }
  }

  ValuationResult run(std::map<long, double>* capture, int capture_slice) {
    const auto t0 = std::chrono::steady_clock::now();
    cap = position_cap(sd, grid, payoff) + drift_span(grid, model.drift());
    pad = sd.k_max;
    W = static_cast<std::size_t>(2 * (cap + pad) + 1);
    const int n = grid.n_steps;
    const double d = model.drift();
    const double b = payoff.is_barrier() ? payoff.log_barrier() : 0.0;
    const bool barrier = payoff.is_barrier();

    std::vector<double> v0(W), v1, n0(W), n1, w0, w1;
    for (long k = -cap; k <= cap; ++k) {
      const double x = d * grid.T + grid.h * static_cast<double>(k);
      v0[index(k)] = payoff.terminal_value(x, k, false);
    }
    if (barrier) {
      v1.assign(W, 0.0);
      n1.assign(W, 0.0);
      w0.assign(W, 0.0);
      for (long k = -cap; k <= cap; ++k) {
        const double x = d * grid.T + grid.h * static_cast<double>(k);
        v1[index(k)] = payoff.terminal_value(x, k, true);
      }
      // splice terminal no-hit plane: positions at or above the barrier at T
      // are flagged by the transition into slice n
      for (long k = -cap; k <= cap; ++k) {
        const double x = d * grid.T + grid.h * static_cast<double>(k);
        if (x >= b) v0[index(k)] = v1[index(k)];
      }
    }

    ValuationResult res;
    res.slices.assign(static_cast<std::size_t>(n) + 1, SliceDiagnostics{});
    const auto record = [&](int slice, const std::vector<double>& v) {
      double lo = v[index(-cap)], hi = lo;
      for (long k = -cap; k <= cap; ++k) {
        lo = std::min(lo, v[index(k)]);
        hi = std::max(hi, v[index(k)]);
      }
      res.slices[static_cast<std::size_t>(slice)] = {lo, hi};
    };
    record(n, v0);
    if (capture && capture_slice == n)
      for (long k = -cap; k <= cap; ++k) (*capture)[k] = v0[index(k)];

    for (int i = n - 1; i >= 0; --i) {
      if (barrier) {
        // effective continuation seen from a not-yet-hit state
        const double tn = (i + 1) * grid.delta;
        for (long k = -cap - pad; k <= cap + pad; ++k) {
          const long kc = std::clamp(k, -cap, cap);
          const double x = d * tn + grid.h * static_cast<double>(kc);
          w0[index(k)] = (x >= b) ? v1[index(kc)] : v0[index(kc)];
        }
        refresh_padding(v1);
        apply_step(w0, n0);
        apply_step(v1, n1);
        v1.swap(n1);
      } else {
        refresh_padding(v0);
        apply_step(v0, n0);
      }
      v0.swap(n0);
      record(i, v0);
      if (capture && capture_slice == i)
        for (long k = -cap; k <= cap; ++k) (*capture)[k] = v0[index(k)];
    }
    res.value = v0[index(0)];
    res.truncated_mass = sd.residual_mass;
    res.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
  }
};

inline ValuationResult value_with(const LevyModel& m, StepDistortion psi, const Payoff& payoff,
                                  const GridSpec& g, std::map<long, double>* capture = nullptr,
                                  int capture_slice = -1) {
  const StepDistribution sd = build_step_distribution(m, g);
  Engine eng{m, sd, g, payoff, std::move(psi)};
  return eng.run(capture, capture_slice);
}

}  // namespace detail

// Backward recursion of one-step distorted expectations with a fixed
// distortion applied at every step.
inline ValuationResult distorted_value(const LevyModel& m, const ProbabilityDistortion& psi,
                                       const Payoff& payoff, const GridSpec& g,
                                       std::map<long, double>* capture = nullptr,
                                       int capture_slice = -1) {
  detail::StepDistortion sp;
  sp.linear = psi.is_linear();
  sp.psi = [psi](double q) { return psi(q); };
  return detail::value_with(m, std::move(sp), payoff, g, capture, capture_slice);
}

// Same recursion with the delta-scaled member Psi(., delta) of a family.
inline ValuationResult distorted_value(const LevyModel& m, const ScalingFamily& family,
                                       const Payoff& payoff, const GridSpec& g,
                                       std::map<long, double>* capture = nullptr,
                                       int capture_slice = -1) {
  detail::StepDistortion sp;
  sp.linear = false;
  const double delta = g.delta;
  sp.psi = [family, delta](double q) { return family(q, delta); };
  return detail::value_with(m, std::move(sp), payoff, g, capture, capture_slice);
}

// Plain expectation recursion; bitwise identical to distorted_value with the
// linear distortion.
inline ValuationResult linear_value(const LevyModel& m, const Payoff& payoff, const GridSpec& g) {
  return distorted_value(m, ProbabilityDistortion::linear(), payoff, g);
}

// Linear recursion on the lattice rebuilt from the tilted triplet.
inline ValuationResult linear_value(const QSharpModel& q, const Payoff& payoff, double T,
                                    int n_steps, double eps_trunc = 1e-10) {
  const GridSpec g = make_grid(q.tilted, T, n_steps, eps_trunc);
  return linear_value(q.tilted, payoff, g);
}

// Exact oracle: expands the full non-recombining path tree and applies the
// one-step distorted expectation node by node. Tiny instances only.
inline double enumerate_paths_value(const LevyModel& m, const ProbabilityDistortion& psi,
                                    const Payoff& payoff, const GridSpec& g) {
  const StepDistribution sd = build_step_distribution(m, g);
  std::vector<std::pair<long, double>> support;
  for (long k = -sd.k_max; k <= sd.k_max; ++k)
    if (sd.prob(k) > 0.0) support.emplace_back(k, sd.prob(k));
  if (g.n_steps > 4 || support.size() > 7)
    throw ConfigError("enumerate_paths_value: instance too large (n <= 4, support <= 7)");

  const double b = payoff.is_barrier() ? payoff.log_barrier() : 0.0;
  const std::function<double(int, long, bool)> value = [&](int slice, long k, bool hit) -> double {
    if (slice == g.n_steps) {
      const double x = m.drift() * g.T + g.h * static_cast<double>(k);
      return payoff.terminal_value(x, k, hit);
    }
    std::vector<DiscreteDistribution::Atom> atoms;
    atoms.reserve(support.size());
    for (const auto& [s, p] : support) {
      const long k2 = k + s;
      bool hit2 = hit;
      if (payoff.is_barrier()) {
        const double x2 = m.drift() * (slice + 1) * g.delta + g.h * static_cast<double>(k2);
        hit2 = hit || (x2 >= b);
      }
      atoms.push_back({value(slice + 1, k2, hit2), p});
    }
    return choquet_probability(DiscreteDistribution(std::move(atoms)), psi);
  };
  bool hit0 = false;
  if (payoff.is_barrier()) hit0 = (0.0 >= b);
  return value(0, 0, hit0);
}

struct SweepRow {
  int n = 0;
  double delta = 0.0;
  double h = 0.0;
  int a = 0;
  double value = 0.0;
  double reference = 0.0;
  double gap = 0.0;
  double truncated_mass = 0.0;
  double runtime_ms = 0.0;
};

// Runs distorted_value over an increasing n-list; the gap column is filled
// against the supplied reference, or against the finest-grid value.
template <typename DistortionLike>
std::vector<SweepRow> convergence_sweep(const LevyModel& m, const DistortionLike& psi,
                                        const Payoff& payoff, const std::vector<int>& n_list,
                                        double T, double eps_trunc = 1e-10,
                                        std::optional<double> reference = std::nullopt) {
  if (n_list.empty()) throw ConfigError("convergence sweep needs a nonempty n list");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1]) throw ConfigError("convergence sweep needs increasing n");
  std::vector<SweepRow> rows;
  rows.reserve(n_list.size());
  for (int n : n_list) {
    const GridSpec g = make_grid(m, T, n, eps_trunc);
    const ValuationResult r = distorted_value(m, psi, payoff, g);
    SweepRow row;
    row.n = n;
    row.delta = g.delta;
    row.h = g.h;
    row.a = g.a;
    row.value = r.value;
    row.truncated_mass = r.truncated_mass;
    row.runtime_ms = r.runtime_ms;
    rows.push_back(row);
  }
  const double ref = reference.value_or(rows.back().value);
  for (auto& row : rows) {
    row.reference = ref;
    row.gap = std::fabs(row.value - ref);
  }
  return rows;
}

}  // namespace distlat

#endif  // DISTLAT_VALUATION_HPP
