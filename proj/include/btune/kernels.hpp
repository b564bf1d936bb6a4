#pragma once

#include <cmath>

namespace btune {

// Freeze-Thaw time kernel: magnitude^2 * beta^alpha / (t + t' + beta)^alpha.
// Decays in t + t', encoding exponentially decaying training curves.
inline double ft_kernel(double t, double tp, double alpha, double beta, double magnitude) {
  return magnitude * magnitude * std::pow(beta / (t + tp + beta), alpha);
}

// Squared-exponential kernel over configuration coordinates.
inline double se_kernel(double x, double xp, double lengthscale, double magnitude) {
  const double d = (x - xp) / lengthscale;
  return magnitude * magnitude * std::exp(-0.5 * d * d);
}

// Standard normal pdf.
inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * 0.39894228040143267793994605993438;
}

// Standard normal cdf via the complementary error function.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
}

}  // namespace btune
