#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "btune/curves.hpp"
#include "btune/gp.hpp"
#include "btune/policy.hpp"

namespace btune {

/// Successive-halving rounds: surviving arm count and cumulative per-arm
/// epochs for each round. Arms resume where they stopped, so round i consumes
/// n_i * (r_i - r_{i-1}) units.
struct HyperbandSchedule {
  int eta = 3;
  struct Round {
    int n_arms = 0;
    int per_arm_budget = 0;  // cumulative epochs per surviving arm
  };
  std::vector<Round> rounds;

  int consumed_units() const;
};

// Builds the successive-halving rounds for n_arms under total_budget: counts
// shrink by eta per round while the cumulative per-arm budget grows by eta.
// When even one epoch per arm in the widest round does not fit, the initial
// arm count is shrunk (flagged via *shrunk).
HyperbandSchedule sh_schedule(int n_arms, int total_budget, int eta, bool* shrunk = nullptr);

TuningResult run_random(const CurveSet& curves, int budget, std::uint64_t seed);

// Hyperband over the replay environment: loops the standard bracket ladder,
// eliminating by best observed loss, until the budget is spent.
TuningResult run_hyperband(const CurveSet& curves, int budget, int eta, std::uint64_t seed);

// E[(incumbent - X)^+] for Gaussian X.
double expected_improvement(const GaussianScalar& pred, double incumbent);

// Bayesian optimization without early stopping: picks the arm whose posterior
// asymptote has the highest expected improvement over the incumbent, then
// runs it to the end of its recorded curve (or of the budget).
TuningResult run_gp_ei(const CurveSet& curves, int budget, const BeliefConfig& gp_config,
                       std::uint64_t seed);

// Gauss-Hermite nodes and weights normalized for expectations under N(0,1):
// weights sum to 1 and E[g(X)] ~= sum_q w_q g(x_q).
std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int n_quad);

// Truncated-horizon rollout value of pulling `arm` next: the exact expected
// improvement of its one-step predictive over the incumbent, plus (while depth
// remains) the quadrature average over imagined outcomes of recursing with an
// improvement-greedy arm choice.
double rollout_value(const BeliefState& belief, int arm, double incumbent, int depth,
                     const RolloutConfig& config);

TuningResult run_rollout(const CurveSet& curves, int budget, const RolloutConfig& config,
                         const BeliefConfig& gp_config, std::uint64_t seed);

}  // namespace btune
