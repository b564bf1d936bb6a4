#include "btune/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "btune/kernels.hpp"
#include "btune/rng.hpp"

namespace btune {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int HyperbandSchedule::consumed_units() const {
  int total = 0, prev = 0;
  for (const auto& r : rounds) {
    total += r.n_arms * (r.per_arm_budget - prev);
    prev = r.per_arm_budget;
  }
  return total;
}

HyperbandSchedule sh_schedule(int n_arms, int total_budget, int eta, bool* shrunk) {
  if (n_arms < 1) throw std::invalid_argument("sh_schedule: n_arms must be >= 1");
  if (eta < 2) throw std::invalid_argument("sh_schedule: eta must be >= 2");
  if (total_budget < 1) throw std::invalid_argument("sh_schedule: budget must be >= 1");
  if (shrunk) *shrunk = false;

  auto build = [eta](int n, int r0) {
    HyperbandSchedule s;
    s.eta = eta;
    int count = n, per_arm = r0;
    while (true) {
      s.rounds.push_back({count, per_arm});
      if (count < eta) break;
      count /= eta;
      per_arm *= eta;
    }
    return s;
  };

  int n = n_arms;
  while (n > 1 && build(n, 1).consumed_units() > total_budget) {
    n /= eta;
    if (n < 1) n = 1;
    if (shrunk) *shrunk = true;
  }
  const int unit_cost = build(n, 1).consumed_units();
  const int r0 = std::max(1, total_budget / unit_cost);
  return build(n, r0);
}

TuningResult run_random(const CurveSet& curves, int budget, std::uint64_t seed) {
  ReplayEnv env(curves, budget);
  auto rng = make_rng(seed);
  for (int n = 0; n < budget && env.any_eligible(); ++n) {
    std::vector<int> pool;
    for (int k = 0; k < env.num_arms(); ++k)
      if (!env.arm_exhausted(k)) pool.push_back(k);
    env.step(pool[uniform_int(rng, static_cast<int>(pool.size()))]);
  }
  return env.finish("random", seed);
}

namespace {

// Advances `arm` until it has `target` consumed epochs, its curve ends, or the
// budget ends. Returns false when the budget ran out.
bool advance_to(ReplayEnv& env, int arm, int target) {
  while (env.consumed(arm) < target && !env.arm_exhausted(arm)) {
    if (env.remaining() == 0) return false;
    env.step(arm);
  }
  return true;
}

}  // namespace

TuningResult run_hyperband(const CurveSet& curves, int budget, int eta, std::uint64_t seed) {
  if (eta < 2) throw std::invalid_argument("run_hyperband: eta must be >= 2");
  ReplayEnv env(curves, budget);
  auto rng = make_rng(seed);
  const int k_arms = curves.num_arms();
  const int max_r = curves.max_epochs();
  const int s_max = static_cast<int>(std::floor(std::log(static_cast<double>(max_r)) /
                                                std::log(static_cast<double>(eta))));

  while (env.remaining() > 0 && env.any_eligible()) {
    const int before = env.steps();
    for (int s = s_max; s >= 0 && env.remaining() > 0; --s) {
      int n = static_cast<int>(
          std::ceil(static_cast<double>(s_max + 1) / (s + 1) * std::pow(eta, s)));
      n = std::min(n, k_arms);

      // Sample the bracket's arms without replacement, preferring live ones.
      std::vector<int> order(k_arms);
      std::iota(order.begin(), order.end(), 0);
      for (int i = k_arms - 1; i > 0; --i)
        std::swap(order[i], order[uniform_int(rng, i + 1)]);
      std::stable_partition(order.begin(), order.end(),
                            [&](int k) { return !env.arm_exhausted(k); });
      std::vector<int> live(order.begin(), order.begin() + std::min<size_t>(n, order.size()));

      for (int i = 0; i <= s && env.remaining() > 0 && !live.empty(); ++i) {
        const int target = std::max(1, static_cast<int>(max_r / std::pow(eta, s - i)));
        for (int arm : live)
          if (!advance_to(env, arm, target)) break;
        if (i == s) break;
        // Keep the top 1/eta by best observed loss; ties to the lower index.
        std::sort(live.begin(), live.end(), [&](int a, int b) {
          if (env.best_seen(a) != env.best_seen(b)) return env.best_seen(a) < env.best_seen(b);
          return a < b;
        });
        const int keep = std::max(1, static_cast<int>(live.size()) / eta);
        live.resize(keep);
        live.erase(std::remove_if(live.begin(), live.end(),
                                  [&](int k) { return env.arm_exhausted(k); }),
                   live.end());
      }
    }
    if (env.steps() == before) break;  // nothing progressed; all reachable arms done
  }
  return env.finish("hyperband", seed);
}

double expected_improvement(const GaussianScalar& pred, double incumbent) {
  if (pred.std < 0) throw std::invalid_argument("expected_improvement: negative std");
  if (pred.std == 0.0) return std::max(incumbent - pred.mean, 0.0);
  if (std::isinf(incumbent)) return incumbent > 0 ? kInf : 0.0;
  const double u = (incumbent - pred.mean) / pred.std;
  return std::max(pred.std * (u * normal_cdf(u) + normal_pdf(u)), 0.0);
}

TuningResult run_gp_ei(const CurveSet& curves, int budget, const BeliefConfig& gp_config,
                       std::uint64_t seed) {
  ReplayEnv env(curves, budget);
  BeliefState belief = make_belief(curves, gp_config);
  auto rng = make_rng(seed);
  int steps_done = 0;

  while (env.remaining() > 0 && env.any_eligible()) {
    const double incumbent =
        env.steps() == 0 ? curves.initial_loss : env.best_so_far();
    const auto asym = belief.posterior_asymptote();
    int pick = -1;
    double best_ei = -kInf;
    for (int k = 0; k < env.num_arms(); ++k) {
      if (env.arm_exhausted(k)) continue;
      const double ei = expected_improvement(asym[k], incumbent);
      if (ei > best_ei) {
        best_ei = ei;
        pick = k;
      }
    }
    // No early stop: run the pick to the end of its curve or of the budget.
    while (!env.arm_exhausted(pick) && env.remaining() > 0) {
      const double z = env.step(pick);
      belief.observe(pick, z);
      ++steps_done;
      if (gp_config.resample_every > 0 && steps_done % gp_config.resample_every == 0)
        belief.resample_hypers(gp_config.slice, gp_config.n_samples, rng);
    }
  }
  return env.finish("gp-ei", seed);
}

std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int n_quad) {
  if (n_quad < 1 || n_quad > 20)
    throw std::invalid_argument("gauss_hermite: n_quad must be in [1, 20]");
  if (n_quad == 1) return {{0.0}, {1.0}};
  // Golub-Welsch on the Jacobi matrix of probabilists' Hermite polynomials.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n_quad, n_quad);
  for (int i = 1; i < n_quad; ++i) {
    const double b = std::sqrt(static_cast<double>(i));
    jacobi(i, i - 1) = b;
    jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  std::vector<double> nodes(n_quad), weights(n_quad);
  for (int i = 0; i < n_quad; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double q0 = es.eigenvectors()(0, i);
    weights[i] = q0 * q0;
  }
  return {nodes, weights};
}

namespace {

// Improvement-greedy base policy: the arm whose one-step predictive has the
// highest expected improvement over the incumbent. Ties to the lowest index.
int ei_greedy_arm(const BeliefState& belief, double incumbent) {
  int pick = 0;
  double best = -kInf;
  for (int k = 0; k < belief.num_arms(); ++k) {
    const double ei = expected_improvement(belief.predict(k, belief.observed(k) + 1), incumbent);
    if (ei > best) {
      best = ei;
      pick = k;
    }
  }
  return pick;
}

}  // namespace

double rollout_value(const BeliefState& belief, int arm, double incumbent, int depth,
                     const RolloutConfig& config) {
  if (depth < 1) throw std::invalid_argument("rollout_value: depth must be >= 1");
  if (depth > config.horizon) throw std::invalid_argument("rollout_value: depth exceeds horizon");
  const GaussianScalar pred = belief.predict(arm, belief.observed(arm) + 1);
  const double immediate = expected_improvement(pred, incumbent);
  if (depth == 1) return immediate;

  const auto [nodes, weights] = gauss_hermite(config.n_quad);
  double future = 0.0;
  for (size_t q = 0; q < nodes.size(); ++q) {
    const double z = pred.mean + pred.std * nodes[q];
    BeliefState imagined = belief;
    imagined.observe(arm, z);
    const double zeta = std::min(incumbent, z);
    const int next = ei_greedy_arm(imagined, zeta);
    future += weights[q] * rollout_value(imagined, next, zeta, depth - 1, config);
  }
  return immediate + future;
}

TuningResult run_rollout(const CurveSet& curves, int budget, const RolloutConfig& config,
                         const BeliefConfig& gp_config, std::uint64_t seed) {
  ReplayEnv env(curves, budget);
  BeliefState belief = make_belief(curves, gp_config);
  auto rng = make_rng(seed);

  for (int n = 1; n <= budget && env.any_eligible(); ++n) {
    const double incumbent = env.steps() == 0 ? curves.initial_loss : env.best_so_far();
    const int depth = std::min(config.horizon, env.remaining());
    int pick = -1;
    double best = -kInf;
    for (int k = 0; k < env.num_arms(); ++k) {
      if (env.arm_exhausted(k)) continue;
      const double h = rollout_value(belief, k, incumbent, depth, config);
      if (h > best) {
        best = h;
        pick = k;
      }
    }
    const double z = env.step(pick);
    belief.observe(pick, z);
    if (gp_config.resample_every > 0 && n % gp_config.resample_every == 0)
      belief.resample_hypers(gp_config.slice, gp_config.n_samples, rng);
  }
  return env.finish("rollout", seed);
}

}  // namespace btune
