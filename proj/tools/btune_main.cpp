#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "btune/bench.hpp"
#include "btune/config.hpp"

namespace fs = std::filesystem;

namespace {

std::string resolve_out_dir(const std::string& flag, const std::string& spec_dir) {
  if (!flag.empty()) return flag;
  if (!spec_dir.empty()) return spec_dir;
  if (const char* env = std::getenv("BTUNE_OUT_DIR")) return env;
  return ".";
}

int cmd_gen(const std::string& synth_path, const std::string& out_flag) {
  const auto specs = btune::load_synth_specs(synth_path);
  const std::string out = resolve_out_dir(out_flag, "");
  fs::create_directories(out);
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto set = btune::sample_curveset(specs[i]);
    const std::string path = out + "/set_" + std::to_string(i) + ".csv";
    btune::save_curves(set, path);
    std::cout << path << "  K=" << set.num_arms() << " epochs=" << set.max_epochs() << "\n";
  }
  return 0;
}

int cmd_run(const std::string& spec_path, const std::string& out_flag, int threads) {
  const auto spec = btune::load_experiment_spec(spec_path);
  const std::string out = resolve_out_dir(out_flag, spec.out_dir);
  fs::create_directories(out);
  const auto records = btune::run_experiment(spec, threads);
  const std::string csv = out + "/records.csv";
  btune::emit_csv(records, csv);
  std::cout << records.size() << " records -> " << csv << "\n";
  return 0;
}

int cmd_tune(const std::string& curves_path, const std::string& policy, int budget,
             std::uint64_t seed, double eps, int eta, int horizon, int n_quad,
             bool hypers_from_set, int resample_every) {
  const auto set = btune::load_curves(curves_path);
  btune::PolicySpec spec;
  spec.kind = btune::policy_kind_from_string(policy);
  spec.eps = eps;
  spec.eta = eta;
  spec.rollout.horizon = horizon;
  spec.rollout.n_quad = n_quad;
  spec.belief.hypers_from_set = hypers_from_set;
  spec.belief.resample_every = resample_every;
  const auto res = btune::run_policy(set, spec, budget, seed);
  const auto [opt_arm, opt] = btune::optimal_loss(set, budget);
  std::cout << "policy " << res.policy << "  budget " << budget << "  seed " << seed << "\n";
  std::cout << "output loss " << res.output_loss << " on arm " << res.output_arm
            << "  (optimum " << opt << " on arm " << opt_arm << ")\n";
  std::cout << "normalized regret "
            << btune::normalized_regret(res.output_loss, opt, set.initial_loss) << "\n";
  std::cout << "allocation";
  for (int b : res.allocation) std::cout << " " << b;
  std::cout << "\n";
  return 0;
}

int cmd_report(const std::string& records_path, const std::string& metric,
               const std::string& out_path, const std::string& curves_path, int top_k) {
  const auto records = btune::parse_csv(records_path);
  std::vector<std::pair<std::string, btune::CurveSet>> sets;
  if (!curves_path.empty()) {
    if (fs::is_directory(curves_path)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(curves_path))
        if (e.path().extension() == ".csv") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files)
        sets.emplace_back(f.filename().string(), btune::load_curves(f.string()));
    } else {
      sets.emplace_back(fs::path(curves_path).filename().string(),
                        btune::load_curves(curves_path));
    }
  }
  if (metric == "hitrate" && sets.empty()) {
    std::cerr << "report: --metric hitrate needs --curves\n";
    return 1;
  }
  btune::emit_plot(records, metric, out_path, sets.empty() ? nullptr : &sets, top_k);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-constrained hyper-parameter tuning on replayed learning curves"};
  app.require_subcommand(1);

  std::string synth_path, spec_path, records_path, metric = "regret";
  std::string out_flag, out_path = "plot.svg", curves_path;
  int threads = 1, top_k = 5;
  std::string policy = "bhpt";
  int budget = 48, eta = 3, horizon = 3, n_quad = 5, resample_every = 5;
  std::uint64_t seed = 0;
  double eps = 0.5;
  bool from_set = false;

  auto* gen = app.add_subcommand("gen", "Generate synthetic curve sets");
  gen->add_option("--synth", synth_path, "Synth spec JSON (one object or a list)")->required();
  gen->add_option("--out", out_flag, "Output directory");

  auto* run = app.add_subcommand("run", "Run a budgets x policies x seeds sweep");
  run->add_option("--spec", spec_path, "Experiment spec JSON")->required();
  run->add_option("--out", out_flag, "Output directory (overrides spec and BTUNE_OUT_DIR)");
  run->add_option("--threads", threads, "Worker threads for sweep cells");

  auto* tune = app.add_subcommand("tune", "One tuning run on one curve file");
  tune->add_option("--curves", curves_path, "Curve file")->required();
  tune->add_option("--policy", policy, "bhpt | bhpt-eps | random | hyperband | gp-ei | rollout");
  tune->add_option("--budget", budget, "Total epoch units");
  tune->add_option("--seed", seed, "Run seed");
  tune->add_option("--eps", eps, "bhpt-eps exploration probability");
  tune->add_option("--eta", eta, "Hyperband elimination factor");
  tune->add_option("--rollout-h", horizon, "Rollout horizon");
  tune->add_option("--n-quad", n_quad, "Gauss-Hermite nodes for rollout");
  tune->add_flag("--hypers-from-set", from_set, "Seed the GP from the set's gp.* metadata");
  tune->add_option("--resample-every", resample_every, "Slice-resample cadence (0 disables)");

  auto* report = app.add_subcommand("report", "Plot a metric from a records CSV");
  report->add_option("--records", records_path, "records.csv from `run`")->required();
  report->add_option("--metric", metric, "regret | hitrate | allocation");
  report->add_option("--out", out_path, "Output SVG path");
  report->add_option("--curves", curves_path, "Curve file or directory (needed for hitrate)");
  report->add_option("--topk", top_k, "Ground-truth top-k for hitrate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(synth_path, out_flag);
    if (run->parsed()) return cmd_run(spec_path, out_flag, threads);
    if (tune->parsed())
      return cmd_tune(curves_path, policy, budget, seed, eps, eta, horizon, n_quad, from_set,
                      resample_every);
    if (report->parsed()) return cmd_report(records_path, metric, out_path, curves_path, top_k);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
