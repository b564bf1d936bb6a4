#pragma once

#include <cstdint>

#include "btune/curves.hpp"

namespace btune {

/// Generator settings for synthetic curve sets drawn from the hierarchical
/// model: per-arm asymptotes from a squared-exponential GP over a 1-D grid of
/// arm coordinates, plus per-arm decay curves from the Freeze-Thaw time
/// kernel, plus i.i.d. observation noise.
struct SynthSpec {
  int num_arms = 84;
  int epochs = 48;  // curve length in budget units
  double asym_lengthscale = 0.8;
  double asym_magnitude = 1.0;
  double ft_alpha = 1.5;
  double ft_beta = 5.0;
  double ft_magnitude = 10.0;
  double noise_std = 1e-3;
  std::uint64_t seed = 0;
  bool rescale = true;  // affinely map the set into [0.01, 0.99]

  void validate() const;
};

// Draws one curve set; deterministic given spec.seed. When spec.rescale is
// set the whole set is mapped affinely into [0.01, 0.99] (order preserving)
// and flagged normalized. The metadata records the generator hypers after
// the rescale (keys gp.*), so a belief model can be seeded with the true
// values that produced the data.
CurveSet sample_curveset(const SynthSpec& spec);

}  // namespace btune
