#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "btune/baselines.hpp"
#include "btune/curves.hpp"
#include "btune/policy.hpp"
#include "btune/synth.hpp"

namespace btune {

/// Sweep definition: curve sets (loaded from files and/or generated), budgets,
/// policies and seeds, crossed in full.
struct ExperimentSpec {
  std::vector<std::string> curve_paths;
  std::vector<SynthSpec> synth;
  std::vector<int> budgets;
  std::vector<PolicySpec> policies;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;

  void validate() const;
};

struct RunRecord {
  std::string set_id;
  std::string policy;
  int budget = 0;
  std::uint64_t seed = 0;
  double output_loss = 0.0;
  int output_arm = -1;
  double regret = 0.0;          // normalized against the set's optimum
  std::vector<int> allocation;  // epochs per arm
  double wall_s = 0.0;          // not serialized; reruns stay byte-identical
};

// Runs one policy on one set; dispatches across all policy kinds.
TuningResult run_policy(const CurveSet& curves, const PolicySpec& spec, int budget,
                        std::uint64_t seed);

// Full Cartesian sweep. Cells are independent, each with its own rng stream,
// so with threads > 1 they fan out across OpenMP threads; the single-threaded
// path is the reference and the records are identical either way, sorted by
// (set, policy, budget, seed).
std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, int threads = 1);

// Materializes the spec's curve sets (load + generate), with stable ids.
std::vector<std::pair<std::string, CurveSet>> materialize_sets(const ExperimentSpec& spec);

// Fraction of records whose output arm ranks in the set's true top k (arms
// ranked by their best loss over the full recorded horizon).
double hit_rate_at_k(const std::vector<RunRecord>& records, const CurveSet& curves, int k);

// Mean over records of allocation[output_arm] / budget.
double budget_fraction_on_output(const std::vector<RunRecord>& records);

void emit_csv(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> parse_csv(const std::string& path);

// Writes a self-contained SVG: one line per policy over budgets, mean of the
// chosen metric with a +-1 std band, and the aggregated table in a comment.
// metric is one of "regret", "allocation", "hitrate"; hitrate needs the sets
// the records were produced on.
void emit_plot(const std::vector<RunRecord>& records, const std::string& metric,
               const std::string& path,
               const std::vector<std::pair<std::string, CurveSet>>* sets = nullptr,
               int top_k = 5);

}  // namespace btune
