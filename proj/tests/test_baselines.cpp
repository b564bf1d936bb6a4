#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "btune/baselines.hpp"
#include "btune/kernels.hpp"
#include "btune/rng.hpp"
#include "btune/synth.hpp"
#include "oracle.hpp"

using namespace btune;

namespace {

BeliefConfig flat_belief(double mean, double variance = 0.25, double noise = 1e-3) {
  BeliefConfig cfg;
  cfg.resample_every = 0;
  cfg.hypers.independent = true;
  cfg.hypers.mean = mean;
  cfg.hypers.config_variance = variance;
  cfg.hypers.noise_std = noise;
  return cfg;
}

}  // namespace

TEST_CASE("run_random: forced single arm and determinism") {
  CurveSet single;
  single.losses = {{0.9, 0.7, 0.5}};
  single.initial_loss = 0.9;
  const auto res = run_random(single, 3, 4);
  CHECK(res.allocation == std::vector<int>{3});

  CurveSet set;
  set.losses = {{0.9, 0.7}, {0.8, 0.6}, {0.85, 0.65}};
  set.initial_loss = 0.9;
  CHECK(run_random(set, 5, 11).trajectory == run_random(set, 5, 11).trajectory);
}

TEST_CASE("run_random spreads pulls uniformly over symmetric arms") {
  CurveSet set;
  set.losses.assign(4, std::vector<double>(8, 0.5));
  set.initial_loss = 0.5;
  const int budget = 8, n_seeds = 1000;
  std::vector<long> counts(4, 0);
  for (int seed = 0; seed < n_seeds; ++seed) {
    const auto res = run_random(set, budget, seed);
    for (int k = 0; k < 4; ++k) counts[k] += res.allocation[k];
  }
  const double total = budget * static_cast<double>(n_seeds);
  const double p = 0.25;
  const double se = std::sqrt(p * (1 - p) / total);
  for (int k = 0; k < 4; ++k)
    CHECK(std::abs(counts[k] / total - p) <= 3.0 * se);
}

TEST_CASE("sh_schedule hand-derived rounds") {
  // 9 arms at eta 3 with resume: 9x1 + 3x(3-1) + 1x(9-3) = 21 units
  const auto s = sh_schedule(9, 21, 3);
  REQUIRE(s.rounds.size() == 3);
  CHECK(s.rounds[0].n_arms == 9);
  CHECK(s.rounds[0].per_arm_budget == 1);
  CHECK(s.rounds[1].n_arms == 3);
  CHECK(s.rounds[1].per_arm_budget == 3);
  CHECK(s.rounds[2].n_arms == 1);
  CHECK(s.rounds[2].per_arm_budget == 9);
  CHECK(s.consumed_units() == 21);

  const auto one = sh_schedule(1, 12, 3);
  REQUIRE(one.rounds.size() == 1);
  CHECK(one.rounds[0].n_arms == 1);
  CHECK(one.rounds[0].per_arm_budget == 12);

  bool shrunk = false;
  const auto tight = sh_schedule(9, 10, 3, &shrunk);
  CHECK(shrunk);
  CHECK(tight.consumed_units() <= 10);
}

TEST_CASE("sh_schedule always fits the budget") {
  auto rng = make_rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + uniform_int(rng, 40);
    const int budget = 1 + uniform_int(rng, 400);
    const int eta = 2 + uniform_int(rng, 3);
    const auto s = sh_schedule(n, budget, eta);
    CHECK(s.consumed_units() <= budget);
    for (size_t i = 1; i < s.rounds.size(); ++i) {
      CHECK(s.rounds[i].n_arms == s.rounds[i - 1].n_arms / eta);
      CHECK(s.rounds[i].per_arm_budget == s.rounds[i - 1].per_arm_budget * eta);
    }
  }
}

TEST_CASE("run_hyperband eliminates by observed best loss") {
  // 3 arms, 3 epochs each; arm 1 has the best first-epoch loss
  CurveSet set;
  set.losses = {{0.8, 0.5, 0.45}, {0.6, 0.55, 0.5}, {0.9, 0.2, 0.1}};
  set.initial_loss = 0.9;
  // budget 4: bracket runs 3 arms x 1 epoch, then the survivor resumes
  const auto res = run_hyperband(set, 4, 3, 1);
  CHECK(res.allocation[1] == 2);
  CHECK(res.allocation == std::vector<int>{1, 2, 1});
  int total = 0;
  for (int b : res.allocation) total += b;
  CHECK(total == 4);
  // the survivor is the arm with the best first-epoch loss
  CHECK(run_hyperband(set, 4, 3, 99).allocation == res.allocation);
}

TEST_CASE("run_hyperband conserves budget and is deterministic") {
  auto rng = make_rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    SynthSpec spec;
    spec.num_arms = 9;
    spec.epochs = 9;
    spec.seed = 500 + trial;
    const auto set = sample_curveset(spec);
    const int budget = 5 + uniform_int(rng, 40);
    const auto a = run_hyperband(set, budget, 3, trial);
    const auto b = run_hyperband(set, budget, 3, trial);
    CHECK(a.trajectory == b.trajectory);
    int total = 0;
    for (int c : a.allocation) total += c;
    CHECK(total <= budget);
    CHECK(static_cast<int>(a.trajectory.size()) == total);
  }
}

TEST_CASE("expected_improvement values") {
  CHECK(expected_improvement({0.2, 0.0}, 0.5) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(expected_improvement({0.9, 0.0}, 0.5) == 0.0);
  CHECK(expected_improvement({0.9, 0.001}, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
  // at the incumbent: sigma * phi(0)
  CHECK(expected_improvement({0.5, 0.1}, 0.5) ==
        doctest::Approx(0.03989422804014326779).epsilon(1e-12));
}

TEST_CASE("expected_improvement matches the Monte-Carlo oracle and stays non-negative") {
  auto rng = make_rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianScalar pred{uniform01(rng), 0.02 + 0.4 * uniform01(rng)};
    const double incumbent = uniform01(rng);
    const double ei = expected_improvement(pred, incumbent);
    CHECK(ei >= 0.0);
    // 5/n is the estimator's detection floor when no draw lands in the tail
    const auto mc = oracle::mc_improvement(pred, incumbent, 200000, rng);
    CHECK(std::abs(ei - mc.mean) <= 3.0 * mc.se + 5.0 / 200000);
  }
  CHECK(expected_improvement({0.4, 0.0}, 0.4) == 0.0);  // zero iff sigma=0, mean >= incumbent
  CHECK(expected_improvement({0.4, 0.01}, 0.4) > 0.0);
}

TEST_CASE("run_gp_ei never early-stops") {
  CurveSet set;
  set.losses = {{0.9, 0.5, 0.4}, {0.6, 0.55, 0.52}};
  set.initial_loss = 0.9;

  // flat prior: the first pick is arm 0 by the tie rule, and a budget smaller
  // than one full curve trains exactly one arm
  auto res = run_gp_ei(set, 2, flat_belief(0.6), 1);
  CHECK(res.allocation == std::vector<int>{2, 0});

  // large budget: both curves get finished and the output is the global best
  res = run_gp_ei(set, 6, flat_belief(0.6), 1);
  CHECK(res.allocation == std::vector<int>{3, 3});
  CHECK(res.output_loss == optimal_loss(set, 6).second);
  CHECK(run_gp_ei(set, 6, flat_belief(0.6), 1).trajectory == res.trajectory);
}

TEST_CASE("gauss_hermite nodes, weights and moments") {
  const auto [n1, w1] = gauss_hermite(1);
  CHECK(n1 == std::vector<double>{0.0});
  CHECK(w1 == std::vector<double>{1.0});

  const auto [n2, w2] = gauss_hermite(2);
  CHECK(n2[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(n2[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w2[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w2[1] == doctest::Approx(0.5).epsilon(1e-12));

  for (int n = 2; n <= 20; ++n) {
    const auto [nodes, weights] = gauss_hermite(n);
    double s0 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      s0 += weights[i];
      s2 += weights[i] * nodes[i] * nodes[i];
    }
    CHECK(s0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS(gauss_hermite(0));
  CHECK_THROWS(gauss_hermite(21));
}

TEST_CASE("telescoping improvement identity") {
  auto rng = make_rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int len = 1 + uniform_int(rng, 100);
    std::vector<double> z(len);
    for (double& v : z) v = uniform01(rng);
    double zeta = 1.0;
    double acc = 0.0;
    for (double v : z) {
      acc += std::max(zeta - v, 0.0);
      zeta = std::min(zeta, v);
    }
    const double direct = 1.0 - *std::min_element(z.begin(), z.end());
    CHECK(std::abs(acc - direct) <= 1e-12);
  }
}

TEST_CASE("rollout_value base case equals expected improvement") {
  GPHypers h;
  h.independent = true;
  h.mean = 0.5;
  h.config_variance = 0.25;
  h.noise_std = 0.05;
  BeliefState belief(2, {}, h);
  belief.observe(0, 0.8);
  belief.observe(1, 0.6);
  RolloutConfig cfg;
  cfg.horizon = 1;
  for (int arm = 0; arm < 2; ++arm) {
    const auto pred = belief.predict(arm, belief.observed(arm) + 1);
    CHECK(rollout_value(belief, arm, 0.55, 1, cfg) ==
          doctest::Approx(expected_improvement(pred, 0.55)).epsilon(1e-12));
  }
}

TEST_CASE("rollout_value on deterministic beliefs sums clamped improvements") {
  // zero noise, tiny time variance, wide asymptote prior: one observation pins
  // an arm's whole predictive curve, so the recursion is hand-traceable
  GPHypers h;
  h.independent = true;
  h.noise_std = 0.0;
  h.time_magnitude = 1e-6;
  h.config_variance = 1.0;
  h.mean = 0.6;
  BeliefState belief(2, {}, h);
  belief.observe(0, 0.8);
  belief.observe(1, 0.55);
  RolloutConfig cfg;
  cfg.horizon = 3;
  cfg.n_quad = 5;
  const double zeta = 0.9;
  // depth 1: just the immediate clamped improvement
  CHECK(rollout_value(belief, 0, zeta, 1, cfg) == doctest::Approx(0.1).epsilon(1e-5));
  CHECK(rollout_value(belief, 1, zeta, 1, cfg) == doctest::Approx(0.35).epsilon(1e-5));
  // depth 2: the greedy continuation reaches the 0.55 arm either way
  CHECK(rollout_value(belief, 0, zeta, 2, cfg) == doctest::Approx(0.35).epsilon(1e-5));
  CHECK(rollout_value(belief, 1, zeta, 2, cfg) == doctest::Approx(0.35).epsilon(1e-5));
  // a non-improving incumbent yields 0 along the whole path
  CHECK(rollout_value(belief, 0, 0.5, 3, cfg) == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("depth-2 rollout matches a dense trapezoid oracle") {
  GPHypers h;
  h.independent = true;
  h.mean = 0.5;
  h.config_variance = 0.09;
  h.noise_std = 0.02;
  BeliefState belief(2, {}, h);
  belief.observe(0, 0.75);
  belief.observe(0, 0.62);
  belief.observe(1, 0.7);
  const double zeta = 0.6;
  RolloutConfig cfg;
  cfg.horizon = 2;
  cfg.n_quad = 9;

  for (int arm = 0; arm < 2; ++arm) {
    const auto pred = belief.predict(arm, belief.observed(arm) + 1);
    // oracle: exact immediate term + trapezoid integral over the imagined step
    double integral = 0.0;
    const int grid = 10000;
    const double lo = pred.mean - 8 * pred.std, hi = pred.mean + 8 * pred.std;
    const double dz = (hi - lo) / grid;
    for (int i = 0; i <= grid; ++i) {
      const double z = lo + i * dz;
      BeliefState imagined = belief;
      imagined.observe(arm, z);
      const double zp = std::min(zeta, z);
      double best_ei = -1.0;
      for (int k = 0; k < 2; ++k) {
        const double ei =
            expected_improvement(imagined.predict(k, imagined.observed(k) + 1), zp);
        best_ei = std::max(best_ei, ei);
      }
      const double w = (i == 0 || i == grid) ? 0.5 : 1.0;
      integral += w * dz * normal_pdf((z - pred.mean) / pred.std) / pred.std * best_ei;
    }
    const double want = expected_improvement(pred, zeta) + integral;
    CHECK(std::abs(rollout_value(belief, arm, zeta, 2, cfg) - want) <= 1e-3);
  }
}

TEST_CASE("rollout quadrature order converges") {
  // belief states as they occur mid-run: decaying observed curves at
  // normalized-loss scales, incumbent = best loss seen so far
  auto rng = make_rng(40);
  for (int trial = 0; trial < 20; ++trial) {
    GPHypers h;
    h.independent = true;
    h.time_magnitude = 0.1 + 0.2 * uniform01(rng);
    h.mean = 0.4 + 0.2 * uniform01(rng);
    const double cs = 0.05 + 0.1 * uniform01(rng);
    h.config_variance = cs * cs;
    h.noise_std = 0.005 + 0.015 * uniform01(rng);
    BeliefState belief(2, {}, h);
    double zeta = 1.0;
    for (int k = 0; k < 2; ++k) {
      const int n_obs = 2 + uniform_int(rng, 5);
      const double asym = 0.3 + 0.3 * uniform01(rng);
      const double amp = 0.2 + 0.3 * uniform01(rng);
      for (int t = 0; t < n_obs; ++t) {
        const double v = asym + amp * std::exp(-0.5 * t) + 0.01 * (uniform01(rng) - 0.5);
        belief.observe(k, v);
        zeta = std::min(zeta, v);
      }
    }
    RolloutConfig c7{2, 7}, c15{2, 15};
    const double h7 = rollout_value(belief, 0, zeta, 2, c7);
    const double h15 = rollout_value(belief, 0, zeta, 2, c15);
    CHECK(std::abs(h15 - h7) <= 1e-3);
  }
}

TEST_CASE("run_rollout: forced moves, determinism, first pick by enumeration") {
  CurveSet single;
  single.losses = {{0.9, 0.7, 0.5}};
  single.initial_loss = 0.9;
  RolloutConfig cfg;
  const auto forced = run_rollout(single, 3, cfg, flat_belief(0.7), 2);
  CHECK(forced.allocation == std::vector<int>{3});
  CHECK(forced.trajectory == run_random(single, 3, 2).trajectory);

  CurveSet set;
  set.losses = {{0.8, 0.3, 0.25}, {0.55, 0.5, 0.45}};
  set.initial_loss = 0.8;
  const auto a = run_rollout(set, 4, cfg, flat_belief(0.6), 3);
  CHECK(a.trajectory == run_rollout(set, 4, cfg, flat_belief(0.6), 3).trajectory);

  // deterministic toy beliefs: the first pick maximizes the h-step
  // clamped-improvement sum, recovered here by enumeration over both arms
  BeliefConfig tiny = flat_belief(0.6, 1e-18, 0.0);
  BeliefState belief = make_belief(set, tiny);
  const double zeta = set.initial_loss;
  double best_val = -1.0;
  int best_arm = -1;
  for (int k = 0; k < 2; ++k) {
    const double v = rollout_value(belief, k, zeta, std::min(cfg.horizon, 4), cfg);
    if (v > best_val) {
      best_val = v;
      best_arm = k;
    }
  }
  const auto res = run_rollout(set, 4, cfg, tiny, 1);
  CHECK(res.trajectory.front().first == best_arm);
}
