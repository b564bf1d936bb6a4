#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "btune/bench.hpp"
#include "btune/config.hpp"
#include "btune/rng.hpp"

using namespace btune;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

ExperimentSpec tiny_sweep() {
  ExperimentSpec spec;
  SynthSpec s;
  s.num_arms = 4;
  s.epochs = 8;
  s.seed = 3;
  spec.synth = {s};
  spec.budgets = {4, 8};
  PolicySpec rnd;
  rnd.kind = PolicyKind::random;
  spec.policies = {rnd};
  spec.seeds = {1, 2, 3};
  return spec;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

bool records_equal(const RunRecord& a, const RunRecord& b) {
  return a.set_id == b.set_id && a.policy == b.policy && a.budget == b.budget &&
         a.seed == b.seed && a.output_loss == b.output_loss && a.output_arm == b.output_arm &&
         a.regret == b.regret && a.allocation == b.allocation;
}

}  // namespace

TEST_CASE("sweep cardinality and reproducibility") {
  const auto spec = tiny_sweep();
  const auto records = run_experiment(spec);
  CHECK(records.size() == 1 * 1 * 2 * 3);
  const auto again = run_experiment(spec);
  REQUIRE(again.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) CHECK(records_equal(records[i], again[i]));
}

TEST_CASE("regret column matches recomputation from raw records") {
  const auto spec = tiny_sweep();
  const auto sets = materialize_sets(spec);
  const auto records = run_experiment(spec);
  for (const auto& r : records) {
    const auto& curves = sets[0].second;
    const double opt = optimal_loss(curves, r.budget).second;
    CHECK(r.regret ==
          doctest::Approx(normalized_regret(r.output_loss, opt, curves.initial_loss))
              .epsilon(1e-15));
    CHECK(r.regret >= 0.0);
  }
}

TEST_CASE("parallel sweep equals the serial reference") {
  auto spec = tiny_sweep();
  SynthSpec extra = spec.synth[0];
  extra.seed = 4;
  spec.synth.push_back(extra);
  PolicySpec bhpt;
  bhpt.kind = PolicyKind::bhpt;
  bhpt.belief.hypers_from_set = true;
  bhpt.belief.resample_every = 0;
  spec.policies.push_back(bhpt);
  const auto serial = run_experiment(spec, 1);
  const auto parallel = run_experiment(spec, 4);
  REQUIRE(serial.size() == parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) CHECK(records_equal(serial[i], parallel[i]));
}

TEST_CASE("csv round trip and empty header") {
  const auto records = run_experiment(tiny_sweep());
  const auto path = temp_path("btune_records.csv");
  emit_csv(records, path);
  const auto back = parse_csv(path);
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) CHECK(records_equal(records[i], back[i]));

  emit_csv({}, path);
  CHECK(file_bytes(path) == "set,policy,budget,seed,output_loss,output_arm,regret,alloc\n");
  CHECK(parse_csv(path).empty());
}

TEST_CASE("csv bytes are identical across reruns") {
  const auto a = temp_path("btune_records_a.csv");
  const auto b = temp_path("btune_records_b.csv");
  emit_csv(run_experiment(tiny_sweep()), a);
  emit_csv(run_experiment(tiny_sweep()), b);
  CHECK(file_bytes(a) == file_bytes(b));
}

TEST_CASE("hit rate fixtures") {
  CurveSet set;
  set.losses = {{0.5, 0.1}, {0.5, 0.2}, {0.5, 0.3}, {0.5, 0.4}};
  set.initial_loss = 0.5;

  auto rec = [](int arm) {
    RunRecord r;
    r.output_arm = arm;
    r.budget = 4;
    r.allocation = {1, 1, 1, 1};
    return r;
  };
  // 2 of 4 records land in the true top 3 (arms 0,1,2)
  const std::vector<RunRecord> mixed{rec(0), rec(3), rec(2), rec(3)};
  CHECK(hit_rate_at_k(mixed, set, 3) == doctest::Approx(0.5));
  // top-1 only counts the true best arm
  CHECK(hit_rate_at_k({rec(0), rec(0)}, set, 1) == 1.0);
  // k = K is vacuous
  CHECK(hit_rate_at_k(mixed, set, 4) == 1.0);
}

TEST_CASE("budget fraction fixtures") {
  RunRecord r;
  r.budget = 10;
  r.allocation = {3, 7};
  r.output_arm = 1;
  CHECK(budget_fraction_on_output({r}) == doctest::Approx(0.7));

  RunRecord single;
  single.budget = 5;
  single.allocation = {5};
  single.output_arm = 0;
  CHECK(budget_fraction_on_output({single}) == 1.0);

  CHECK(budget_fraction_on_output({r, single}) == doctest::Approx(0.85));
}

TEST_CASE("aggregations ignore record order") {
  const auto spec = tiny_sweep();
  const auto sets = materialize_sets(spec);
  auto records = run_experiment(spec);
  auto shuffled = records;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(budget_fraction_on_output(records) ==
        doctest::Approx(budget_fraction_on_output(shuffled)).epsilon(1e-15));
  CHECK(hit_rate_at_k(records, sets[0].second, 2) ==
        doctest::Approx(hit_rate_at_k(shuffled, sets[0].second, 2)).epsilon(1e-15));
}

TEST_CASE("plot output is deterministic and carries the policies") {
  auto spec = tiny_sweep();
  PolicySpec bhpt;
  bhpt.kind = PolicyKind::bhpt;
  bhpt.belief.hypers_from_set = true;
  bhpt.belief.resample_every = 0;
  spec.policies.push_back(bhpt);
  const auto records = run_experiment(spec);
  const auto p1 = temp_path("btune_plot_a.svg");
  const auto p2 = temp_path("btune_plot_b.svg");
  emit_plot(records, "regret", p1);
  emit_plot(records, "regret", p2);
  const auto svg = file_bytes(p1);
  CHECK(svg == file_bytes(p2));
  CHECK(svg.find("random") != std::string::npos);
  CHECK(svg.find("bhpt") != std::string::npos);
  CHECK(svg.find("<svg") != std::string::npos);

  // a single (policy, budget) cell still renders one point
  std::vector<RunRecord> one;
  one.push_back(records.front());
  emit_plot(one, "allocation", p1);
  CHECK(file_bytes(p1).find("circle") != std::string::npos);

  // hitrate needs the curve sets
  CHECK_THROWS(emit_plot(records, "hitrate", p1));
  const auto sets = materialize_sets(spec);
  emit_plot(records, "hitrate", p1, &sets, 2);
  CHECK(file_bytes(p1).find("hitrate") != std::string::npos);
}

TEST_CASE("experiment config json round trip") {
  auto spec = tiny_sweep();
  PolicySpec bhpt_eps;
  bhpt_eps.kind = PolicyKind::bhpt_eps;
  bhpt_eps.eps = 0.25;
  bhpt_eps.belief.resample_every = 7;
  bhpt_eps.belief.n_samples = 3;
  bhpt_eps.belief.hypers.ft_alpha = 1.75;
  bhpt_eps.belief.hypers.data_mean = true;
  PolicySpec roll;
  roll.kind = PolicyKind::rollout;
  roll.rollout.horizon = 2;
  roll.rollout.n_quad = 9;
  spec.policies.push_back(bhpt_eps);
  spec.policies.push_back(roll);
  spec.out_dir = "out";

  const auto j = to_json(spec);
  const auto back = experiment_spec_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.policies.size() == 3);
  CHECK(back.policies[1].eps == 0.25);
  CHECK(back.policies[1].belief.hypers.ft_alpha == 1.75);
  CHECK(back.policies[2].rollout.n_quad == 9);
  CHECK(back.budgets == spec.budgets);

  nlohmann::json bad = j;
  bad["unknown_key"] = 1;
  CHECK_THROWS(experiment_spec_from_json(bad));
}

TEST_CASE("every policy runs clean on random sets") {
  auto rng = make_rng(2025);
  const PolicyKind kinds[] = {PolicyKind::bhpt,      PolicyKind::bhpt_eps,
                              PolicyKind::random,    PolicyKind::hyperband,
                              PolicyKind::gp_ei,     PolicyKind::rollout};
  for (int trial = 0; trial < 36; ++trial) {
    SynthSpec s;
    s.num_arms = 1 + uniform_int(rng, 6);
    s.epochs = 2 + uniform_int(rng, 10);
    s.ft_magnitude = 0.3 + uniform01(rng);
    s.seed = 40000 + trial;
    const auto set = sample_curveset(s);
    PolicySpec p;
    p.kind = kinds[trial % 6];
    p.belief.hypers_from_set = true;
    p.belief.resample_every = trial % 12 == 0 ? 3 : 0;
    p.rollout.horizon = 2;
    p.rollout.n_quad = 3;
    const int budget = 1 + uniform_int(rng, set.total_epochs());
    const auto res = run_policy(set, p, budget, trial);
    int total = 0;
    double best = 1e300;
    for (const auto& [arm, loss] : res.trajectory) {
      total += 1;
      best = std::min(best, loss);
    }
    CHECK(total <= budget);
    int alloc_total = 0;
    for (int b : res.allocation) alloc_total += b;
    CHECK(alloc_total == total);
    CHECK(res.output_loss == best);
    CHECK(res.output_loss >= optimal_loss(set, budget).second);
    CHECK(res.output_arm >= 0);
    CHECK(res.allocation[res.output_arm] >= 1);
  }
}

TEST_CASE("experiment spec validation") {
  ExperimentSpec empty;
  CHECK_THROWS(empty.validate());
  auto spec = tiny_sweep();
  spec.budgets.clear();
  CHECK_THROWS(spec.validate());
  spec = tiny_sweep();
  spec.budgets = {0};
  CHECK_THROWS(spec.validate());
}
