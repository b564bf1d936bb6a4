#include "btune/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "btune/kernels.hpp"
#include "btune/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace btune {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::bhpt: return "bhpt";
    case PolicyKind::bhpt_eps: return "bhpt-eps";
    case PolicyKind::random: return "random";
    case PolicyKind::hyperband: return "hyperband";
    case PolicyKind::gp_ei: return "gp-ei";
    case PolicyKind::rollout: return "rollout";
  }
  throw std::logic_error("to_string: bad PolicyKind");
}

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "bhpt") return PolicyKind::bhpt;
  if (name == "bhpt-eps") return PolicyKind::bhpt_eps;
  if (name == "random") return PolicyKind::random;
  if (name == "hyperband") return PolicyKind::hyperband;
  if (name == "gp-ei") return PolicyKind::gp_ei;
  if (name == "rollout") return PolicyKind::rollout;
  throw std::invalid_argument("unknown policy kind '" + name + "'");
}

void PolicySpec::validate() const {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("PolicySpec: eps must be in [0,1]");
  if (eta < 2) throw std::invalid_argument("PolicySpec: eta must be >= 2");
  if (rollout.horizon < 1 || rollout.n_quad < 1 || rollout.n_quad > 20)
    throw std::invalid_argument("PolicySpec: bad rollout configuration");
  belief.hypers.validate();
}

int DecisionContext::num_eligible() const {
  int n = 0;
  for (char e : eligible) n += e != 0;
  return n;
}

DecisionContext make_context(const BeliefState& belief, const std::vector<char>& eligible,
                             int remaining, bool parallel) {
  if (remaining < 1) throw std::invalid_argument("make_context: remaining must be >= 1");
  if (static_cast<int>(eligible.size()) != belief.num_arms())
    throw std::invalid_argument("make_context: eligibility mask size mismatch");
  DecisionContext ctx;
  ctx.remaining = remaining;
  ctx.eligible = eligible;
  ctx.forecast.resize(belief.num_arms());

  const int k_arms = belief.num_arms();
#ifdef _OPENMP
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < k_arms; ++k)
      if (eligible[k]) ctx.forecast[k] = belief.future_best(k, remaining);
  } else
#else
  (void)parallel;
#endif
  {
    for (int k = 0; k < k_arms; ++k)
      if (eligible[k]) ctx.forecast[k] = belief.future_best(k, remaining);
  }

  ctx.top_arm = -1;
  for (int k = 0; k < k_arms; ++k) {
    if (!eligible[k]) continue;
    if (ctx.top_arm < 0 || ctx.forecast[k].value.mean < ctx.forecast[ctx.top_arm].value.mean)
      ctx.top_arm = k;
  }
  if (ctx.top_arm < 0) throw std::runtime_error("make_context: no eligible arm");
  ctx.mu_first = ctx.forecast[ctx.top_arm].value.mean;
  ctx.tau_star = ctx.forecast[ctx.top_arm].tau;
  ctx.mu_second = kInf;
  for (int k = 0; k < k_arms; ++k) {
    if (!eligible[k] || k == ctx.top_arm) continue;
    ctx.mu_second = std::min(ctx.mu_second, ctx.forecast[k].value.mean);
  }
  return ctx;
}

double action_value(const GaussianScalar& nu, double mu) {
  if (nu.std < 0) throw std::invalid_argument("action_value: negative std");
  const double best = std::min(nu.mean, mu);
  if (nu.std == 0.0) return best;
  const double s = (mu - nu.mean) / nu.std;
  const double q = mu - nu.std * (s * normal_cdf(s) + normal_pdf(s));
  // E[min(nu, mu)] <= min(E[nu], mu); the clamp absorbs rounding at the limits.
  return std::min(q, best);
}

std::vector<double> q_all(const DecisionContext& ctx) {
  const int k_arms = static_cast<int>(ctx.forecast.size());
  std::vector<double> q(k_arms, kInf);
  for (int k = 0; k < k_arms; ++k) {
    if (!ctx.eligible[k]) continue;
    const double mu = (k == ctx.top_arm) ? ctx.mu_second : ctx.mu_first;
    q[k] = action_value(ctx.forecast[k].value, mu);
  }
  return q;
}

namespace {

int argmin_eligible(const std::vector<double>& vals, const std::vector<char>& eligible,
                    int skip = -1) {
  int best = -1;
  for (int k = 0; k < static_cast<int>(vals.size()); ++k) {
    if (!eligible[k] || k == skip) continue;
    if (best < 0 || vals[k] < vals[best]) best = k;
  }
  return best;
}

}  // namespace

int select_bhpt(const DecisionContext& ctx) {
  const int n_el = ctx.num_eligible();
  if (n_el == 0) throw std::runtime_error("select_bhpt: no eligible arm");
  if (n_el == 1 || ctx.tau_star >= ctx.remaining) return ctx.top_arm;
  const auto q = q_all(ctx);
  return argmin_eligible(q, ctx.eligible);
}

int select_eps(const DecisionContext& ctx, double eps, std::mt19937_64& rng) {
  const int n_el = ctx.num_eligible();
  if (n_el == 0) throw std::runtime_error("select_eps: no eligible arm");
  if (n_el == 1 || ctx.tau_star >= ctx.remaining) return ctx.top_arm;
  if (uniform01(rng) >= eps) return ctx.top_arm;
  // Exploration branch: best non-top arm by its value against mu_first.
  std::vector<double> q(ctx.forecast.size(), kInf);
  for (int k = 0; k < static_cast<int>(q.size()); ++k) {
    if (!ctx.eligible[k] || k == ctx.top_arm) continue;
    q[k] = action_value(ctx.forecast[k].value, ctx.mu_first);
  }
  const int pick = argmin_eligible(q, ctx.eligible, ctx.top_arm);
  return pick < 0 ? ctx.top_arm : pick;
}

BeliefState make_belief(const CurveSet& curves, const BeliefConfig& cfg) {
  GPHypers h = cfg.hypers_from_set ? hypers_from_meta(curves.meta) : cfg.hypers;
  std::vector<std::vector<double>> feats = curves.features;
  if (feats.empty() && !h.independent)
    throw std::invalid_argument("make_belief: correlated kernel needs arm features");
  return BeliefState(curves.num_arms(), std::move(feats), std::move(h));
}

std::vector<char> eligible_arms(const ReplayEnv& env) {
  std::vector<char> mask(env.num_arms());
  for (int k = 0; k < env.num_arms(); ++k) mask[k] = env.arm_exhausted(k) ? 0 : 1;
  return mask;
}

TuningResult run_tuning(const CurveSet& curves, const PolicySpec& spec, int budget,
                        std::uint64_t seed) {
  if (spec.kind != PolicyKind::bhpt && spec.kind != PolicyKind::bhpt_eps)
    throw std::invalid_argument("run_tuning: policy kind is not a bhpt variant");
  spec.validate();
  ReplayEnv env(curves, budget);
  BeliefState belief = make_belief(curves, spec.belief);
  auto rng = make_rng(seed);

  // Per-arm forecasts fan out across threads once the arm count is large
  // enough to pay for it; results are identical to the serial path.
  const bool parallel_ctx = curves.num_arms() >= 16;
  for (int n = 1; n <= budget; ++n) {
    if (!env.any_eligible()) break;
    const auto mask = eligible_arms(env);
    const auto ctx = make_context(belief, mask, env.remaining(), parallel_ctx);
    const int arm = spec.kind == PolicyKind::bhpt_eps ? select_eps(ctx, spec.eps, rng)
                                                      : select_bhpt(ctx);
    const double z = env.step(arm);
    belief.observe(arm, z);
    if (spec.belief.resample_every > 0 && n % spec.belief.resample_every == 0)
      belief.resample_hypers(spec.belief.slice, spec.belief.n_samples, rng);
  }
  return env.finish(spec.name(), seed);
}

}  // namespace btune
