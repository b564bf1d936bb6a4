#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace btune {

/// A fixed collection of learning curves, indexed by (arm, epoch). The curves
/// are generated or recorded before tuning starts and never change afterwards,
/// so an environment replaying them behaves as an oblivious adversary.
struct CurveSet {
  std::vector<std::vector<double>> losses;    // losses[k][t-1], epochs t = 1..len_k
  std::vector<std::vector<double>> features;  // per-arm coordinates; empty when absent
  double initial_loss = 0.0;                  // max first-epoch loss over all arms
  bool normalized = false;                    // every loss in [0, 1)
  std::map<std::string, double> meta;         // sidecar values (e.g. generator settings)

  int num_arms() const { return static_cast<int>(losses.size()); }
  int curve_len(int arm) const { return static_cast<int>(losses[arm].size()); }
  int max_epochs() const;
  int total_epochs() const;

  // Minimum loss of `arm` over its first min(budget, len) epochs.
  double best_loss(int arm, int budget) const;

  // Throws if the set violates its invariants (empty, non-finite values,
  // normalized flag with out-of-range losses).
  void validate() const;
};

/// Outcome of one tuning run: the trajectory, the output per the min over
/// observed losses, and the per-arm budget allocation.
struct TuningResult {
  std::vector<std::pair<int, double>> trajectory;  // (arm, raw loss) per step
  double output_loss = 0.0;                        // min over trajectory losses
  int output_arm = -1;                             // lowest-index arm achieving it
  std::vector<int> allocation;                     // epochs consumed per arm
  std::string policy;
  std::uint64_t seed = 0;
};

/// Serves a CurveSet epoch by epoch. Each step on an arm reveals its next
/// recorded loss, advances the arm cursor and the global step counter.
/// Single-owner mutable; distinct envs may share one immutable CurveSet.
class ReplayEnv {
 public:
  ReplayEnv(const CurveSet& curves, int budget);

  // Reveals the next loss of `arm`. Throws when the budget is exhausted,
  // when the arm's recorded curve is exhausted, or on a bad index.
  double step(int arm);

  int num_arms() const { return static_cast<int>(consumed_.size()); }
  int budget() const { return budget_; }
  int steps() const { return static_cast<int>(trajectory_.size()); }
  int remaining() const { return budget_ - steps(); }
  int consumed(int arm) const { return consumed_[arm]; }
  bool arm_exhausted(int arm) const;
  bool any_eligible() const;

  // Running minimum of the first consumed(arm) losses; +inf before any step.
  double best_seen(int arm) const { return best_[arm]; }
  double best_so_far() const;

  const std::vector<std::pair<int, double>>& trajectory() const { return trajectory_; }
  const CurveSet& curves() const { return *curves_; }

  TuningResult finish(std::string policy, std::uint64_t seed) const;

 private:
  const CurveSet* curves_;
  int budget_;
  std::vector<int> consumed_;
  std::vector<double> best_;
  std::vector<std::pair<int, double>> trajectory_;
};

// Reads a curve file (see save_curves for the format). Throws on a missing
// file, malformed rows, non-finite losses, duplicate (config, epoch) pairs,
// epoch gaps, or inconsistent per-config features.
CurveSet load_curves(const std::string& path);

// Writes `config_id,epoch,loss[,feat_0,...]` rows preceded by `# key=value`
// metadata lines. Decimal values round-trip losslessly.
void save_curves(const CurveSet& curves, const std::string& path);

// Best achievable (arm, loss) with perfect knowledge of the curves and a
// budget of `budget` epochs spent on a single arm. Ties go to the lowest
// arm index.
std::pair<int, double> optimal_loss(const CurveSet& curves, int budget);

// (output - optimum) / (initial - optimum). Throws when initial <= optimum.
double normalized_regret(double output, double optimum, double initial);

}  // namespace btune
