#include "btune/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "btune/kernels.hpp"
#include "btune/linalg.hpp"
#include "btune/rng.hpp"

namespace btune {

void SynthSpec::validate() const {
  if (num_arms < 1) throw std::invalid_argument("SynthSpec: num_arms must be >= 1");
  if (epochs < 1) throw std::invalid_argument("SynthSpec: epochs must be >= 1");
  if (asym_lengthscale <= 0 || ft_alpha <= 0 || ft_beta <= 0)
    throw std::invalid_argument("SynthSpec: scale parameters must be positive");
  if (asym_magnitude < 0 || ft_magnitude < 0 || noise_std < 0)
    throw std::invalid_argument("SynthSpec: magnitudes must be non-negative");
}

CurveSet sample_curveset(const SynthSpec& spec) {
  spec.validate();
  const int k_arms = spec.num_arms;
  const int n_epochs = spec.epochs;
  auto rng = make_rng(spec.seed);

  // Arm coordinates on a uniform grid in [0, 1].
  std::vector<double> grid(k_arms);
  for (int k = 0; k < k_arms; ++k)
    grid[k] = k_arms == 1 ? 0.5 : static_cast<double>(k) / (k_arms - 1);

  // Asymptotes f ~ GP(0, K_x).
  Eigen::VectorXd f = Eigen::VectorXd::Zero(k_arms);
  if (spec.asym_magnitude > 0) {
    Eigen::MatrixXd kx(k_arms, k_arms);
    for (int i = 0; i < k_arms; ++i)
      for (int j = 0; j < k_arms; ++j)
        kx(i, j) = se_kernel(grid[i], grid[j], spec.asym_lengthscale, spec.asym_magnitude);
    auto llt = llt_with_jitter(std::move(kx));
    Eigen::VectorXd z(k_arms);
    for (int i = 0; i < k_arms; ++i) z(i) = normal(rng);
    f = llt.matrixL() * z;
  } else {
    for (int i = 0; i < k_arms; ++i) normal(rng);  // keep the draw sequence stable
  }

  // Per-arm decay deviations g_k ~ GP(0, K_t) over epochs 1..n_epochs.
  Eigen::MatrixXd lt;
  if (spec.ft_magnitude > 0) {
    Eigen::MatrixXd kt(n_epochs, n_epochs);
    for (int s = 0; s < n_epochs; ++s)
      for (int t = 0; t < n_epochs; ++t)
        kt(s, t) = ft_kernel(s + 1, t + 1, spec.ft_alpha, spec.ft_beta, spec.ft_magnitude);
    lt = llt_with_jitter(std::move(kt)).matrixL();
  }

  CurveSet set;
  set.losses.resize(k_arms);
  set.features.resize(k_arms);
  for (int k = 0; k < k_arms; ++k) {
    set.features[k] = {grid[k]};
    Eigen::VectorXd z(n_epochs);
    for (int t = 0; t < n_epochs; ++t) z(t) = normal(rng);
    Eigen::VectorXd curve = Eigen::VectorXd::Constant(n_epochs, f(k));
    if (spec.ft_magnitude > 0) curve += lt * z;
    for (int t = 0; t < n_epochs; ++t) {
      const double eps = normal(rng);
      curve(t) += spec.noise_std * eps;
    }
    set.losses[k].assign(curve.data(), curve.data() + n_epochs);
  }

  // Affine map y -> a*y + b used below; identity unless rescaling.
  double a = 1.0, b = 0.0;
  if (spec.rescale) {
    double lo = set.losses[0][0], hi = set.losses[0][0];
    for (const auto& c : set.losses)
      for (double v : c) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (hi > lo) {
      a = 0.98 / (hi - lo);
      b = 0.01 - a * lo;
    } else {
      a = 0.0;
      b = 0.5;
    }
    for (auto& c : set.losses)
      for (double& v : c) v = a * v + b;
    set.normalized = true;
  }

  double init = -std::numeric_limits<double>::infinity();
  for (const auto& c : set.losses) init = std::max(init, c.front());
  set.initial_loss = init;

  // True generator hypers in the units of the emitted losses: the affine map
  // scales magnitudes by a and shifts the (zero) prior mean to b.
  set.meta["gp.ft_alpha"] = spec.ft_alpha;
  set.meta["gp.ft_beta"] = spec.ft_beta;
  set.meta["gp.time_magnitude"] = a * spec.ft_magnitude;
  set.meta["gp.asym_magnitude"] = a * spec.asym_magnitude;
  set.meta["gp.asym_lengthscale"] = spec.asym_lengthscale;
  set.meta["gp.noise_std"] = a * spec.noise_std;
  set.meta["gp.mean"] = b;

  set.validate();
  return set;
}

}  // namespace btune
