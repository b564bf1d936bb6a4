#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "btune/curves.hpp"
#include "btune/gp.hpp"

namespace btune {

enum class PolicyKind { bhpt, bhpt_eps, random, hyperband, gp_ei, rollout };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

/// How a policy obtains and maintains its belief model.
struct BeliefConfig {
  GPHypers hypers;
  bool hypers_from_set = false;  // seed from the CurveSet's gp.* metadata
  int resample_every = 5;        // slice-resample cadence in steps; 0 disables
  int n_samples = 1;             // hyper bag size when resampling
  SliceConfig slice;
};

struct RolloutConfig {
  int horizon = 3;
  int n_quad = 5;
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::bhpt;
  double eps = 0.5;  // bhpt-eps exploration probability
  BeliefConfig belief;
  int eta = 3;  // hyperband elimination factor
  RolloutConfig rollout;

  std::string name() const { return to_string(kind); }
  void validate() const;
};

/// Per-step decision summary: the per-arm future-best forecasts over the
/// remaining horizon, the predicted top arm and runner-up, and the top arm's
/// epochs-to-expected-minimum.
struct DecisionContext {
  int remaining = 0;                 // r
  std::vector<FutureBest> forecast;  // per arm; meaningful where eligible
  std::vector<char> eligible;
  int top_arm = -1;     // predicted top arm among eligible
  double mu_first = 0;  // its expected best future loss
  double mu_second = 0; // runner-up's; +inf with a single eligible arm
  int tau_star = 1;     // top arm's epochs to its expected minimum

  int num_eligible() const;
};

// Builds the context from a frozen belief. The per-arm forecasts are
// independent, so with parallel=true they are computed across OpenMP threads;
// the serial path is kept as the reference and produces identical results.
DecisionContext make_context(const BeliefState& belief, const std::vector<char>& eligible,
                             int remaining, bool parallel = false);

// Closed form of E[min(nu, mu)] for Gaussian nu:
//   mu - sigma * (s Phi(s) + phi(s)),  s = (mu - E[nu]) / sigma,
// and min(E[nu], mu) exactly when sigma = 0.
double action_value(const GaussianScalar& nu, double mu);

// Action values for every arm: value-of-information form against the top
// arm's expectation (runner-up's for the top arm itself); +inf if ineligible.
std::vector<double> q_all(const DecisionContext& ctx);

// One decision: exploit the predicted top arm when it needs the whole
// remaining horizon to reach its expected minimum, otherwise the Q minimizer.
int select_bhpt(const DecisionContext& ctx);

// Epsilon-greedy variant: same budget-exhaustion check; otherwise with
// probability eps the best non-top arm by Q, else the top arm.
int select_eps(const DecisionContext& ctx, double eps, std::mt19937_64& rng);

// Full tuning loop for the bhpt / bhpt-eps kinds: rebuild the context, select,
// step the environment, update the belief, for `budget` steps.
TuningResult run_tuning(const CurveSet& curves, const PolicySpec& spec, int budget,
                        std::uint64_t seed);

// Resolves the belief for a curve set per the config (metadata hypers when
// hypers_from_set is set, the explicit hypers otherwise).
BeliefState make_belief(const CurveSet& curves, const BeliefConfig& cfg);

std::vector<char> eligible_arms(const ReplayEnv& env);

}  // namespace btune
