// Minimal usage example: price an at-the-money call under a distorted
// one-step expectation and compare with the plain expectation.

#include <cstdio>

#include "distlat/closedform.hpp"
#include "distlat/valuation.hpp"

int main() {
  using namespace distlat;
  const double mu = 0.0, sigma = 0.2, T = 1.0;
  const auto model = LevyModel::brownian(mu - 0.5 * sigma * sigma, sigma);
  const auto call = Payoff::terminal_call(100.0, 100.0);
  const auto grid = make_grid(model, T, 1000);

  const auto family = ScalingFamily::sqrt_brownian(ProbabilityDistortion::exponential(0.9), sigma);
  const auto distorted = distorted_value(model, family, call, grid);
  const auto plain = linear_value(model, call, grid);

  std::printf("plain expectation : %.6f (closed form %.6f)\n", plain.value,
              gbm_call(GbmSpec(100.0, mu, sigma, T, 0.0), 100.0));
  std::printf("distorted value   : %.6f (n = %d, h = %.5f)\n", distorted.value, grid.n_steps,
              grid.h);
  return 0;
}
