#pragma once

#include "btune/rng.hpp"

namespace btune {

template <class LogDensity>
double slice_step(double x0, LogDensity&& log_density, double width, int max_attempts,
                  std::mt19937_64& rng, bool* overflow) {
  const double log_y0 = log_density(x0);
  const double log_slice = log_y0 + std::log(1.0 - uniform01(rng));

  // Step out.
  const double u = uniform01(rng);
  double lo = x0 - u * width;
  double hi = x0 + (1.0 - u) * width;
  int attempts = 0;
  while (log_density(lo) > log_slice) {
    lo -= width;
    if (++attempts >= max_attempts) break;
  }
  attempts = 0;
  while (log_density(hi) > log_slice) {
    hi += width;
    if (++attempts >= max_attempts) break;
  }

  // Shrink.
  for (int i = 0; i < max_attempts; ++i) {
    const double x = lo + uniform01(rng) * (hi - lo);
    if (log_density(x) > log_slice) return x;
    if (x < x0)
      lo = x;
    else
      hi = x;
  }
  if (overflow) *overflow = true;
  return x0;
}

}  // namespace btune
