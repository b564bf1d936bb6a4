// Times the sweep orchestrator single-threaded against the OpenMP fan-out on
// a synthetic workload and checks that both produce identical records.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "btune/bench.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace btune;

namespace {

ExperimentSpec workload(int sets, int arms, int epochs) {
  ExperimentSpec spec;
  for (int i = 0; i < sets; ++i) {
    SynthSpec s;
    s.num_arms = arms;
    s.epochs = epochs;
    s.seed = 1000 + i;
    spec.synth.push_back(s);
  }
  spec.budgets = {epochs / 2, epochs, 2 * epochs};
  PolicySpec bhpt;
  bhpt.kind = PolicyKind::bhpt;
  bhpt.belief.hypers_from_set = true;
  bhpt.belief.resample_every = 0;
  PolicySpec eps = bhpt;
  eps.kind = PolicyKind::bhpt_eps;
  PolicySpec rnd;
  rnd.kind = PolicyKind::random;
  spec.policies = {bhpt, eps, rnd};
  spec.seeds = {1, 2, 3};
  return spec;
}

double time_run(const ExperimentSpec& spec, int threads, std::vector<RunRecord>* out) {
  const auto t0 = std::chrono::steady_clock::now();
  *out = run_experiment(spec, threads);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same_records(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].set_id != b[i].set_id || a[i].policy != b[i].policy ||
        a[i].budget != b[i].budget || a[i].seed != b[i].seed ||
        a[i].output_loss != b[i].output_loss || a[i].output_arm != b[i].output_arm ||
        a[i].regret != b[i].regret || a[i].allocation != b[i].allocation)
      return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const int sets = argc > 1 ? std::stoi(argv[1]) : 12;
  const auto spec = workload(sets, 24, 48);

#ifdef _OPENMP
  const int max_threads = omp_get_max_threads();
  if (max_threads == 1) std::puts("one hardware thread available; serial only");
#else
  const int max_threads = 1;
  std::puts("built without OpenMP; serial only");
#endif

  std::vector<RunRecord> reference;
  const double t1 = time_run(spec, 1, &reference);
  std::printf("%-10s %8.3fs  (%zu records)\n", "serial", t1, reference.size());

  for (int threads = 2; threads <= max_threads; threads *= 2) {
    std::vector<RunRecord> records;
    const double t = time_run(spec, threads, &records);
    std::printf("%d threads  %8.3fs  speedup %.2fx  identical=%s\n", threads, t, t1 / t,
                same_records(reference, records) ? "yes" : "NO");
    if (!same_records(reference, records)) return 1;
  }
  return 0;
}
