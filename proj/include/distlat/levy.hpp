#ifndef DISTLAT_LEVY_HPP
#define DISTLAT_LEVY_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "distlat/common.hpp"
#include "distlat/distortion.hpp"

namespace distlat {

// One-sided jump tail of the form  coef * exp(-decay x) * x^(-power), x > 0.
struct TailComponent {
  double coef;   // > 0
  double decay;  // >= 0
  double power;  // in (0, 1]
};

namespace detail {

// Upper incomplete gamma, including the a = 0 edge (exponential integral).
inline double upper_gamma(double a, double z) {
  if (z <= 0.0) return a > 0.0 ? boost::math::tgamma(a) : kInf;
  if (a == 0.0) return boost::math::expint(1, z);
  return boost::math::tgamma(a, z);
}

inline double comp_tail(const TailComponent& c, double x) {
  return c.coef * std::exp(-c.decay * x) * std::pow(x, -c.power);
}

// int_c^inf tail(x) dx = coef decay^{power-1} Gamma(1-power, decay c).
inline double comp_tail_integral(const TailComponent& c, double lo) {
  if (c.decay <= 0.0) {
    // pure power tail: finite only if power > 1, which we exclude
    return kInf;
  }
  return c.coef * std::pow(c.decay, c.power - 1.0) * upper_gamma(1.0 - c.power, c.decay * lo);
}

// int_{x>=c} x dLambda = c tail(c) + int_c^inf tail.
inline double comp_mean_tail(const TailComponent& c, double lo) {
  return lo * comp_tail(c, lo) + comp_tail_integral(c, lo);
}

// int_{x>=c} x^2 dLambda = c^2 tail(c) + 2 coef decay^{power-2} Gamma(2-power, decay c).
inline double comp_second_tail(const TailComponent& c, double lo) {
  if (c.decay <= 0.0) return kInf;
  return lo * lo * comp_tail(c, lo) +
         2.0 * c.coef * std::pow(c.decay, c.power - 2.0) * upper_gamma(2.0 - c.power, c.decay * lo);
}

// int_0^inf x^2 dLambda = 2 coef Gamma(2-power) decay^{power-2}.
inline double comp_second_total(const TailComponent& c) {
  if (c.decay <= 0.0) return kInf;
  return 2.0 * c.coef * boost::math::tgamma(2.0 - c.power) * std::pow(c.decay, c.power - 2.0);
}

// Density of one component: coef (power + decay x) x^{-1-power} e^{-decay x}.
inline double comp_density(const TailComponent& c, double x) {
  return c.coef * (c.power + c.decay * x) * std::pow(x, -1.0 - c.power) * std::exp(-c.decay * x);
}

// x^2 * density with the exponents combined, safe near the origin.
inline double comp_x2_density(const TailComponent& c, double x) {
  if (x <= 0.0) return 0.0;
  return c.coef * (c.power + c.decay * x) * std::pow(x, 1.0 - c.power) * std::exp(-c.decay * x);
}

// Monotone log-linear interpolation of a tabulated tail; constant below the
// first knot, zero beyond the last.
struct TabulatedTail {
  std::vector<double> x;
  std::vector<double> logt;
  bool empty() const { return x.empty(); }

  double value(double xx) const {
    if (x.empty() || xx >= x.back()) return 0.0;
    if (xx <= x.front()) return std::exp(logt.front());
    const auto it = std::upper_bound(x.begin(), x.end(), xx);
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double t = (xx - x[i - 1]) / (x[i] - x[i - 1]);
    return std::exp(logt[i - 1] + t * (logt[i] - logt[i - 1]));
  }

  bool extrapolates(double xx) const { return !x.empty() && (xx < x.front() || xx >= x.back()); }

  // int_lo^inf tail, exact for the log-linear interpolant.
  double tail_integral(double lo) const {
    if (x.empty() || lo >= x.back()) return 0.0;
    double total = 0.0;
    double from = lo;
    if (from < x.front()) {
      total += (x.front() - from) * std::exp(logt.front());
      from = x.front();
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double a = std::max(from, x[i]);
      const double b = x[i + 1];
      if (a >= b) continue;
      const double m = (logt[i] - logt[i + 1]) / (x[i + 1] - x[i]);
      const double ta = value(a);
      if (std::fabs(m) < 1e-14) {
        total += ta * (b - a);
      } else {
        total += ta / m * (1.0 - std::exp(-m * (b - a)));
      }
    }
    return total;
  }

  // int_lo^inf x tail(x) dx, exact per segment.
  double x_tail_integral(double lo) const {
    if (x.empty() || lo >= x.back()) return 0.0;
    double total = 0.0;
    double from = lo;
    if (from < x.front()) {
      const double t0 = std::exp(logt.front());
      total += 0.5 * (x.front() * x.front() - from * from) * t0;
      from = x.front();
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double a = std::max(from, x[i]);
      const double b = x[i + 1];
      if (a >= b) continue;
      const double m = (logt[i] - logt[i + 1]) / (x[i + 1] - x[i]);
      const double ta = value(a);
      if (std::fabs(m) < 1e-14) {
        total += ta * 0.5 * (b * b - a * a);
      } else {
        // int_a^b x ta e^{-m (x-a)} dx
        const double em = std::exp(-m * (b - a));
        total += ta * ((a / m + 1.0 / (m * m)) - em * (b / m + 1.0 / (m * m)));
      }
    }
    return total;
  }
};

}  // namespace detail

// Levy triplet (drift, sigma^2, jump measure). The drift is the mean rate
// E[X_t]/t. Immutable; all queries are pure.
class LevyModel {
 public:
  enum class JumpKind { none, components, tabulated, tilted };

  static LevyModel brownian(double drift, double sigma) {
    LevyModel m;
    m.drift_ = drift;
    m.sigma_ = sigma;
    m.kind_ = JumpKind::none;
    return m;
  }

  // Tails C e^{-Mx} x^{-Y} (right) and C e^{-G|x|} |x|^{-Y} (left).
  static LevyModel tail_cgmy(double drift, double sigma, double C, double G, double M, double Y,
                             double q = 1.0) {
    if (C <= 0.0) throw ConfigError("tail_cgmy requires C > 0");
    if (M <= 1.0) throw ConfigError("tail_cgmy requires M > 1");
    if (G < 0.0) throw ConfigError("tail_cgmy requires G >= 0");
    if (Y <= 0.0 || Y > 1.0) throw ConfigError("tail_cgmy requires Y in (0,1]");
    return with_components(drift, sigma, {{C, M, Y}}, {{C, G, Y}}, q);
  }

  static LevyModel with_components(double drift, double sigma, std::vector<TailComponent> right,
                                   std::vector<TailComponent> left, double q = 1.0) {
    if (q < 1.0) throw ConfigError("exponential moment order q must be >= 1");
    for (const auto& c : right) {
      if (c.decay <= 2.0 * q)
        throw InfeasibleError(
            "exponential moment condition fails: right tail decay M must exceed 2q");
    }
    LevyModel m;
    m.drift_ = drift;
    m.sigma_ = sigma;
    m.q_ = q;
    m.kind_ = JumpKind::components;
    m.right_ = std::make_shared<const std::vector<TailComponent>>(std::move(right));
    m.left_ = std::make_shared<const std::vector<TailComponent>>(std::move(left));
    m.sigma2_jumps_ = m.compute_sigma2_total();
    return m;
  }

  // Monotone tail grids; log-linear interpolation, zero beyond the grid on
  // the right, constant below the first knot.
  static LevyModel tabulated_tails(double drift, double sigma, std::vector<double> xr,
                                   std::vector<double> tr, std::vector<double> xl,
                                   std::vector<double> tl, double q = 1.0) {
    auto build = [](std::vector<double> xs, std::vector<double> ts) {
      if (xs.size() != ts.size() || xs.size() < 2)
        throw ConfigError("tabulated tails need matching grids with at least two knots");
      detail::TabulatedTail tab;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0 && (xs[i] <= xs[i - 1] || ts[i] > ts[i - 1]))
          throw ConfigError("tabulated tails must have increasing x and nonincreasing values");
        if (ts[i] <= 0.0) throw ConfigError("tabulated tail values must be positive");
      }
      tab.x = std::move(xs);
      tab.logt.reserve(ts.size());
      for (double t : ts) tab.logt.push_back(std::log(t));
      return tab;
    };
    LevyModel m;
    m.drift_ = drift;
    m.sigma_ = sigma;
    m.q_ = q;
    m.kind_ = JumpKind::tabulated;
    m.tab_right_ = std::make_shared<const detail::TabulatedTail>(build(std::move(xr), std::move(tr)));
    m.tab_left_ = std::make_shared<const detail::TabulatedTail>(build(std::move(xl), std::move(tl)));
    m.sigma2_jumps_ = m.compute_sigma2_total();
    return m;
  }

  // Tilted jump measure: tail_plus -> gp(tail_plus), tail_minus -> gm(tail_minus).
  static LevyModel tilted(const LevyModel& base, MeasureDistortion gp, MeasureDistortion gm,
                          double drift) {
    if (gp.side() != TiltSide::upper || gm.side() != TiltSide::lower)
      throw ConfigError("tilt needs an (upper, lower) jump-rate distortion pair");
    if (gp.family() == MeasureDistortion::Family::power_shift) {
      // Tilted right decay is M/(1+gamma); revalidate the moment condition.
      const double g = gp.power_gamma();
      for (const auto& c : base.right_components()) {
        if (c.decay / (1.0 + g) <= 2.0 * base.q_)
          throw InfeasibleError("tilted right tail decay M/(1+gamma) must exceed 2q");
      }
    }
    LevyModel m;
    m.drift_ = drift;
    m.sigma_ = base.sigma_;
    m.q_ = base.q_;
    m.kind_ = JumpKind::tilted;
    m.base_ = std::make_shared<const LevyModel>(base);
    m.gp_ = std::make_shared<const MeasureDistortion>(std::move(gp));
    m.gm_ = std::make_shared<const MeasureDistortion>(std::move(gm));
    m.sigma2_jumps_ = m.compute_sigma2_total();
    return m;
  }

  double drift() const { return drift_; }
  double sigma() const { return sigma_; }
  double sigma2() const { return sigma_ * sigma_; }
  double q() const { return q_; }
  JumpKind jump_kind() const { return kind_; }
  bool has_jumps() const { return kind_ != JumpKind::none; }

  const std::vector<TailComponent>& right_components() const {
    static const std::vector<TailComponent> empty;
    if (kind_ == JumpKind::components) return *right_;
    if (kind_ == JumpKind::tilted) return base_->right_components();
    return empty;
  }
  const std::vector<TailComponent>& left_components() const {
    static const std::vector<TailComponent> empty;
    if (kind_ == JumpKind::components) return *left_;
    if (kind_ == JumpKind::tilted) return base_->left_components();
    return empty;
  }

  // Lambda((x, inf)) for x > 0.
  double tail_plus(double x) const {
    if (x <= 0.0) throw std::domain_error("tail query requires x > 0");
    switch (kind_) {
      case JumpKind::none:
        return 0.0;
      case JumpKind::components: {
        double t = 0.0;
        for (const auto& c : *right_) t += detail::comp_tail(c, x);
        return t;
      }
      case JumpKind::tabulated:
        return tab_right_->value(x);
      case JumpKind::tilted:
        return gp_->gamma_map(base_->tail_plus(x));
    }
    return 0.0;
  }

  // Lambda((-inf, -x)) for x > 0.
  double tail_minus(double x) const {
    if (x <= 0.0) throw std::domain_error("tail query requires x > 0");
    switch (kind_) {
      case JumpKind::none:
        return 0.0;
      case JumpKind::components: {
        double t = 0.0;
        for (const auto& c : *left_) t += detail::comp_tail(c, x);
        return t;
      }
      case JumpKind::tabulated:
        return tab_left_->value(x);
      case JumpKind::tilted:
        return gm_->gamma_map(base_->tail_minus(x));
    }
    return 0.0;
  }

  bool tabulated_extrapolates(double x) const {
    if (kind_ != JumpKind::tabulated) return false;
    return tab_right_->extrapolates(x) || tab_left_->extrapolates(x);
  }

  // int x^2 Lambda(dx) over the whole line; closed form for components.
  double sigma2_total() const { return sigma2_jumps_; }

  // int_{|x| >= c} x^2 Lambda(dx).
  double sigma2_outside(double c) const {
    switch (kind_) {
      case JumpKind::none:
        return 0.0;
      case JumpKind::components: {
        double t = 0.0;
        for (const auto& cc : *right_) t += detail::comp_second_tail(cc, c);
        for (const auto& cc : *left_) t += detail::comp_second_tail(cc, c);
        return t;
      }
      case JumpKind::tabulated:
        return c * c * (tab_right_->value(c) + tab_left_->value(c)) +
               2.0 * (tab_right_->x_tail_integral(c) + tab_left_->x_tail_integral(c));
      case JumpKind::tilted: {
        boost::math::quadrature::exp_sinh<double> integrator;
        const auto f = [this](double t) {
          const double x = t;
          return 2.0 * x * (tail_plus(x) + tail_minus(x));
        };
        const auto shifted = [&, c](double t) { return f(c + t); };
        return c * c * (tail_plus(c) + tail_minus(c)) + integrator.integrate(shifted);
      }
    }
    return 0.0;
  }

  // int_(a,b) x^2 Lambda(dx) by adaptive quadrature against the density
  // (segment-exact for tabulated tails); handles the origin singularity.
  double sigma2_interval(double a, double b) const {
    if (a >= b) throw ConfigError("sigma2_interval requires a < b");
    if (kind_ == JumpKind::none) return 0.0;
    double total = 0.0;
    if (a < 0.0) total += one_side_second_moment(std::max(-b, 0.0), -a, /*right=*/false);
    if (b > 0.0) total += one_side_second_moment(std::max(a, 0.0), b, /*right=*/true);
    return total;
  }

  // int_{x >= c} x Lambda(dx) and int_{x <= -c} |x| Lambda(dx), c > 0.
  double mean_tail_plus(double c) const {
    switch (kind_) {
      case JumpKind::none:
        return 0.0;
      case JumpKind::components: {
        double t = 0.0;
        for (const auto& cc : *right_) t += detail::comp_mean_tail(cc, c);
        return t;
      }
      case JumpKind::tabulated:
        return c * tab_right_->value(c) + tab_right_->tail_integral(c);
      case JumpKind::tilted: {
        boost::math::quadrature::exp_sinh<double> integrator;
        const auto shifted = [&, c](double t) { return tail_plus(c + t); };
        return c * tail_plus(c) + integrator.integrate(shifted);
      }
    }
    return 0.0;
  }
  double mean_tail_minus(double c) const {
    switch (kind_) {
      case JumpKind::none:
        return 0.0;
      case JumpKind::components: {
        double t = 0.0;
        for (const auto& cc : *left_) t += detail::comp_mean_tail(cc, c);
        return t;
      }
      case JumpKind::tabulated:
        return c * tab_left_->value(c) + tab_left_->tail_integral(c);
      case JumpKind::tilted: {
        boost::math::quadrature::exp_sinh<double> integrator;
        const auto shifted = [&, c](double t) { return tail_minus(c + t); };
        return c * tail_minus(c) + integrator.integrate(shifted);
      }
    }
    return 0.0;
  }

  // Largest small-x singularity exponent among components (used by the
  // cutoff rule); 0 when not applicable.
  double max_singularity_power() const {
    double y = 0.0;
    for (const auto& c : right_components()) y = std::max(y, c.power);
    for (const auto& c : left_components()) y = std::max(y, c.power);
    return y;
  }
  double singularity_coef_sum() const {
    const double y = max_singularity_power();
    double s = 0.0;
    for (const auto& c : right_components())
      if (c.power == y) s += c.coef;
    for (const auto& c : left_components())
      if (c.power == y) s += c.coef;
    return s;
  }

 private:
  LevyModel() = default;

  double compute_sigma2_total() const {
    switch (kind_) {
      case JumpKind::none:
        return 0.0;
      case JumpKind::components: {
        double t = 0.0;
        for (const auto& c : *right_) t += detail::comp_second_total(c);
        for (const auto& c : *left_) t += detail::comp_second_total(c);
        return t;
      }
      case JumpKind::tabulated:
        return sigma2_outside(0.0 + 1e-300);
      case JumpKind::tilted: {
        boost::math::quadrature::tanh_sinh<double> near;
        boost::math::quadrature::exp_sinh<double> far;
        const auto f = [this](double x) {
          return 2.0 * x * (tail_plus(x) + tail_minus(x));
        };
        const auto shifted = [&](double t) { return f(1.0 + t); };
        return near.integrate(f, 0.0, 1.0) + far.integrate(shifted);
      }
    }
    return 0.0;
  }

  // Second moment on one side over (lo, hi), 0 <= lo < hi.
  double one_side_second_moment(double lo, double hi, bool right) const {
    if (hi <= lo) return 0.0;
    switch (kind_) {
      case JumpKind::none:
        return 0.0;
      case JumpKind::components: {
        boost::math::quadrature::tanh_sinh<double> integrator;
        const auto& comps = right ? *right_ : *left_;
        const auto f = [&comps](double x) {
          double d = 0.0;
          for (const auto& c : comps) d += detail::comp_x2_density(c, x);
          return d;
        };
        return integrator.integrate(f, lo, hi);
      }
      case JumpKind::tabulated: {
        const auto& tab = right ? *tab_right_ : *tab_left_;
        const double thi = tab.value(hi);
        const double tlo = lo > 0.0 ? tab.value(lo) : tab.value(1e-300);
        return (lo * lo * tlo - hi * hi * thi) +
               2.0 * (tab.x_tail_integral(std::max(lo, 1e-300)) - tab.x_tail_integral(hi));
      }
      case JumpKind::tilted: {
        boost::math::quadrature::tanh_sinh<double> integrator;
        const auto tail = [&](double x) { return right ? tail_plus(x) : tail_minus(x); };
        const double lo_eff = std::max(lo, 1e-300);
        const auto f = [&](double x) { return 2.0 * x * tail(x); };
        const double parts = lo * lo * (lo > 0.0 ? tail(lo) : 0.0) - hi * hi * tail(hi);
        return parts + integrator.integrate(f, lo_eff, hi);
      }
    }
    return 0.0;
  }

  double drift_ = 0.0;
  double sigma_ = 0.0;
  double q_ = 1.0;
  JumpKind kind_ = JumpKind::none;
  double sigma2_jumps_ = 0.0;
  std::shared_ptr<const std::vector<TailComponent>> right_, left_;
  std::shared_ptr<const detail::TabulatedTail> tab_right_, tab_left_;
  std::shared_ptr<const LevyModel> base_;
  std::shared_ptr<const MeasureDistortion> gp_, gm_;
};

// Extremal tilted model: drift raised by sigma^2 Delta_+ plus the mean added
// by the jump tilt, tails Gamma_+(tail_plus) / Gamma_-(tail_minus).
struct QSharpModel {
  LevyModel base = LevyModel::brownian(0.0, 0.0);
  double delta_plus = 0.0;
  MeasureDistortion gamma_plus = MeasureDistortion::identity(TiltSide::upper);
  MeasureDistortion gamma_minus = MeasureDistortion::identity(TiltSide::lower);
  LevyModel tilted = LevyModel::brownian(0.0, 0.0);
  double jump_mean_shift = 0.0;
};

inline QSharpModel tilt_qsharp(const LevyModel& base, double delta_plus, MeasureDistortion gp,
                               MeasureDistortion gm) {
  if (gp.side() != TiltSide::upper || gm.side() != TiltSide::lower)
    throw ConfigError("tilt_qsharp needs an (upper, lower) jump-rate distortion pair");
  if (delta_plus < 0.0) throw ConfigError("tilt_qsharp requires delta_plus >= 0");

  QSharpModel out;
  out.base = base;
  out.delta_plus = delta_plus;
  out.gamma_plus = gp;
  out.gamma_minus = gm;

  // Mean added by the jump tilt: int (Gamma_+ o tail_plus - tail_plus)
  // plus int (tail_minus - Gamma_- o tail_minus), both over x > 0.
  double shift = 0.0;
  if (base.has_jumps() && !(gp.is_identity() && gm.is_identity())) {
    boost::math::quadrature::tanh_sinh<double> near;
    boost::math::quadrature::exp_sinh<double> far;
    const auto f = [&](double x) {
      return gp.diff(base.tail_plus(x)) + gm.diff(base.tail_minus(x));
    };
    const auto shifted = [&](double t) { return f(1.0 + t); };
    shift = near.integrate(f, 0.0, 1.0) + far.integrate(shifted);
  }
  out.jump_mean_shift = shift;

  const double new_drift = base.drift() + base.sigma2() * delta_plus + shift;

  // Exact component representation for a power tilt of a single right tail:
  // (C e^{-Mx} x^{-Y})^{1/(1+g)} = C^{1/(1+g)} e^{-Mx/(1+g)} x^{-Y/(1+g)}.
  if (base.jump_kind() == LevyModel::JumpKind::components &&
      gp.family() == MeasureDistortion::Family::power_shift && gm.is_identity() &&
      base.right_components().size() == 1) {
    const double g = gp.power_gamma();
    const TailComponent& rc = base.right_components().front();
    std::vector<TailComponent> right = {rc,
                                        {g * std::pow(rc.coef, 1.0 / (1.0 + g)),
                                         rc.decay / (1.0 + g), rc.power / (1.0 + g)}};
    out.tilted = LevyModel::with_components(new_drift, base.sigma(), right,
                                            base.left_components(), base.q());
  } else if (gp.is_identity() && gm.is_identity()) {
    if (base.jump_kind() == LevyModel::JumpKind::none) {
      out.tilted = LevyModel::brownian(new_drift, base.sigma());
    } else if (base.jump_kind() == LevyModel::JumpKind::components) {
      out.tilted = LevyModel::with_components(new_drift, base.sigma(), base.right_components(),
                                              base.left_components(), base.q());
    } else {
      out.tilted = LevyModel::tilted(base, gp, gm, new_drift);
    }
  } else {
    out.tilted = LevyModel::tilted(base, gp, gm, new_drift);
  }
  return out;
}

}  // namespace distlat

#endif  // DISTLAT_LEVY_HPP
