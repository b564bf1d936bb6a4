#include "btune/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "btune/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace btune {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("records csv: malformed " + what + " '" + s + "'");
  return v;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (curve_paths.empty() && synth.empty())
    throw std::invalid_argument("ExperimentSpec: no data source");
  if (budgets.empty() || policies.empty() || seeds.empty())
    throw std::invalid_argument("ExperimentSpec: budgets, policies and seeds must be non-empty");
  for (int b : budgets)
    if (b < 1) throw std::invalid_argument("ExperimentSpec: budgets must be >= 1");
  for (const auto& p : policies) p.validate();
  for (const auto& s : synth) s.validate();
}

TuningResult run_policy(const CurveSet& curves, const PolicySpec& spec, int budget,
                        std::uint64_t seed) {
  switch (spec.kind) {
    case PolicyKind::bhpt:
    case PolicyKind::bhpt_eps:
      return run_tuning(curves, spec, budget, seed);
    case PolicyKind::random:
      return run_random(curves, budget, seed);
    case PolicyKind::hyperband:
      return run_hyperband(curves, budget, spec.eta, seed);
    case PolicyKind::gp_ei:
      return run_gp_ei(curves, budget, spec.belief, seed);
    case PolicyKind::rollout:
      return run_rollout(curves, budget, spec.rollout, spec.belief, seed);
  }
  throw std::logic_error("run_policy: bad PolicyKind");
}

std::vector<std::pair<std::string, CurveSet>> materialize_sets(const ExperimentSpec& spec) {
  std::vector<std::pair<std::string, CurveSet>> sets;
  for (const auto& path : spec.curve_paths) {
    std::string id = path;
    const auto slash = id.find_last_of('/');
    if (slash != std::string::npos) id = id.substr(slash + 1);
    sets.emplace_back(id, load_curves(path));
  }
  for (size_t i = 0; i < spec.synth.size(); ++i)
    sets.emplace_back("synth-" + std::to_string(i), sample_curveset(spec.synth[i]));
  return sets;
}

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, int threads) {
  spec.validate();
  const auto sets = materialize_sets(spec);

  struct Cell {
    int set = 0, policy = 0, budget = 0;
    std::uint64_t seed = 0;
  };
  std::vector<Cell> cells;
  for (int si = 0; si < static_cast<int>(sets.size()); ++si)
    for (int pi = 0; pi < static_cast<int>(spec.policies.size()); ++pi)
      for (int budget : spec.budgets)
        for (std::uint64_t seed : spec.seeds) cells.push_back({si, pi, budget, seed});

  // Per-set optimum and data range, shared read-only by all cells.
  std::vector<std::vector<double>> optima(sets.size());
  for (size_t si = 0; si < sets.size(); ++si)
    for (int budget : spec.budgets)
      optima[si].push_back(optimal_loss(sets[si].second, budget).second);
  std::map<int, int> budget_index;
  for (int bi = 0; bi < static_cast<int>(spec.budgets.size()); ++bi)
    budget_index[spec.budgets[bi]] = bi;

  std::vector<RunRecord> records(cells.size());
  std::vector<std::string> errors(cells.size());

  auto run_cell = [&](int ci) {
    const Cell& c = cells[ci];
    const auto& [set_id, curves] = sets[c.set];
    RunRecord rec;
    rec.set_id = set_id;
    rec.policy = spec.policies[c.policy].name();
    rec.budget = c.budget;
    rec.seed = c.seed;
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const auto result = run_policy(curves, spec.policies[c.policy], c.budget,
                                     derive_seed(c.seed, static_cast<std::uint64_t>(c.set)));
      rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rec.output_loss = result.output_loss;
      rec.output_arm = result.output_arm;
      rec.allocation = result.allocation;
      rec.regret = normalized_regret(result.output_loss,
                                     optima[c.set][budget_index.at(c.budget)],
                                     curves.initial_loss);
    } catch (const std::exception& e) {
      errors[ci] = e.what();
    }
    records[ci] = std::move(rec);
  };

#ifdef _OPENMP
  if (threads > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int ci = 0; ci < static_cast<int>(cells.size()); ++ci) run_cell(ci);
  } else
#else
  (void)threads;
#endif
  {
    for (int ci = 0; ci < static_cast<int>(cells.size()); ++ci) run_cell(ci);
  }

  // Failed cells are dropped, not fatal.
  std::vector<RunRecord> out;
  out.reserve(records.size());
  for (size_t ci = 0; ci < records.size(); ++ci)
    if (errors[ci].empty()) out.push_back(std::move(records[ci]));
  std::stable_sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.set_id, a.policy, a.budget, a.seed) <
           std::tie(b.set_id, b.policy, b.budget, b.seed);
  });
  return out;
}

namespace {

// Arms ranked by their best loss over the full recorded horizon.
std::vector<int> true_ranking(const CurveSet& curves) {
  std::vector<int> order(curves.num_arms());
  for (int k = 0; k < curves.num_arms(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return curves.best_loss(a, curves.curve_len(a)) < curves.best_loss(b, curves.curve_len(b));
  });
  return order;
}

}  // namespace

double hit_rate_at_k(const std::vector<RunRecord>& records, const CurveSet& curves, int k) {
  if (k < 1) throw std::invalid_argument("hit_rate_at_k: k must be >= 1");
  if (records.empty()) return 0.0;
  const auto order = true_ranking(curves);
  std::set<int> top(order.begin(), order.begin() + std::min<size_t>(k, order.size()));
  int hits = 0;
  for (const auto& r : records) hits += top.count(r.output_arm) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double budget_fraction_on_output(const std::vector<RunRecord>& records) {
  if (records.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : records) {
    if (r.output_arm < 0 || r.output_arm >= static_cast<int>(r.allocation.size()))
      throw std::invalid_argument("budget_fraction_on_output: record without allocation");
    acc += static_cast<double>(r.allocation[r.output_arm]) / r.budget;
  }
  return acc / static_cast<double>(records.size());
}

void emit_csv(const std::vector<RunRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_csv: cannot open '" + path + "'");
  out << "set,policy,budget,seed,output_loss,output_arm,regret,alloc\n";
  for (const auto& r : records) {
    out << r.set_id << "," << r.policy << "," << r.budget << "," << r.seed << ","
        << format_double(r.output_loss) << "," << r.output_arm << ","
        << format_double(r.regret) << ",";
    for (size_t i = 0; i < r.allocation.size(); ++i)
      out << (i ? ";" : "") << r.allocation[i];
    out << "\n";
  }
  if (!out) throw std::runtime_error("emit_csv: write failure on '" + path + "'");
}

std::vector<RunRecord> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("parse_csv: empty file");
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 8) throw std::runtime_error("parse_csv: bad row '" + line + "'");
    RunRecord r;
    r.set_id = f[0];
    r.policy = f[1];
    r.budget = static_cast<int>(parse_double(f[2], "budget"));
    r.seed = static_cast<std::uint64_t>(parse_double(f[3], "seed"));
    r.output_loss = parse_double(f[4], "output_loss");
    r.output_arm = static_cast<int>(parse_double(f[5], "output_arm"));
    r.regret = parse_double(f[6], "regret");
    std::stringstream as(f[7]);
    while (std::getline(as, field, ';'))
      if (!field.empty()) r.allocation.push_back(static_cast<int>(parse_double(field, "alloc")));
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

struct SeriesPoint {
  int budget;
  double mean, sd;
};

double record_metric(const RunRecord& r, const std::string& metric,
                     const std::map<std::string, std::set<int>>& topk) {
  if (metric == "regret") return r.regret;
  if (metric == "allocation") {
    if (r.output_arm < 0) return 0.0;
    return static_cast<double>(r.allocation[r.output_arm]) / r.budget;
  }
  if (metric == "hitrate") {
    const auto it = topk.find(r.set_id);
    if (it == topk.end())
      throw std::invalid_argument("emit_plot: hitrate needs the record's curve set (" +
                                  r.set_id + ")");
    return it->second.count(r.output_arm) ? 1.0 : 0.0;
  }
  throw std::invalid_argument("emit_plot: unknown metric '" + metric + "'");
}

}  // namespace

void emit_plot(const std::vector<RunRecord>& records, const std::string& metric,
               const std::string& path,
               const std::vector<std::pair<std::string, CurveSet>>* sets, int top_k) {
  if (records.empty()) throw std::invalid_argument("emit_plot: no records");

  std::map<std::string, std::set<int>> topk;
  if (sets) {
    for (const auto& [id, cs] : *sets) {
      const auto order = true_ranking(cs);
      topk[id] = std::set<int>(order.begin(),
                               order.begin() + std::min<size_t>(top_k, order.size()));
    }
  }

  // policy -> budget -> values
  std::map<std::string, std::map<int, std::vector<double>>> groups;
  for (const auto& r : records)
    groups[r.policy][r.budget].push_back(record_metric(r, metric, topk));

  std::map<std::string, std::vector<SeriesPoint>> series;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  int bmin = std::numeric_limits<int>::max(), bmax = 0;
  for (const auto& [policy, per_budget] : groups) {
    for (const auto& [budget, vals] : per_budget) {
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      const double sd = vals.size() > 1 ? std::sqrt(var / (vals.size() - 1)) : 0.0;
      series[policy].push_back({budget, mean, sd});
      ymin = std::min(ymin, mean - sd);
      ymax = std::max(ymax, mean + sd);
      bmin = std::min(bmin, budget);
      bmax = std::max(bmax, budget);
    }
  }
  if (ymin == ymax) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  if (bmin == bmax) {
    bmin = std::max(0, bmin - 1);
    bmax += 1;
  }

  const double w = 640, h = 420, ml = 64, mr = 150, mt = 28, mb = 46;
  auto xpos = [&](double b) { return ml + (b - bmin) / double(bmax - bmin) * (w - ml - mr); };
  auto ypos = [&](double v) { return mt + (ymax - v) / (ymax - ymin) * (h - mt - mb); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_plot: cannot open '" + path + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  out << "<!-- data: policy budget mean sd\n";
  for (const auto& [policy, pts] : series)
    for (const auto& p : pts)
      out << policy << " " << p.budget << " " << format_double(p.mean) << " "
          << format_double(p.sd) << "\n";
  out << "-->\n";
  out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";

  // axes with 5 ticks each
  out << "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">"
      << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
      << h - mb << "\"/>"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\"/></g>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double bv = bmin + (bmax - bmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    out << "<text x=\"" << xpos(bv) << "\" y=\"" << h - mb + 16
        << "\" text-anchor=\"middle\">" << format_double(std::round(bv * 100) / 100) << "</text>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << ypos(yv) + 4
        << "\" text-anchor=\"end\">" << format_double(std::round(yv * 1000) / 1000)
        << "</text>\n";
  }
  out << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 10
      << "\" text-anchor=\"middle\">budget</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + h - mb) / 2 << "\" text-anchor=\"middle\" transform=\""
      << "rotate(-90 16 " << (mt + h - mb) / 2 << ")\">" << metric << "</text>\n";
  out << "</g>\n";

  int ci = 0;
  for (const auto& [policy, pts_in] : series) {
    auto pts = pts_in;
    std::sort(pts.begin(), pts.end(),
              [](const SeriesPoint& a, const SeriesPoint& b) { return a.budget < b.budget; });
    const char* color = colors[ci % 6];
    // +-1 sd band
    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (const auto& p : pts) out << xpos(p.budget) << "," << ypos(p.mean + p.sd) << " ";
    for (auto it = pts.rbegin(); it != pts.rend(); ++it)
      out << xpos(it->budget) << "," << ypos(it->mean - it->sd) << " ";
    out << "\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) out << xpos(p.budget) << "," << ypos(p.mean) << " ";
    out << "\"/>\n";
    for (const auto& p : pts)
      out << "<circle cx=\"" << xpos(p.budget) << "\" cy=\"" << ypos(p.mean)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    // legend entry
    const double ly = mt + 14 + 18 * ci;
    out << "<line x1=\"" << w - mr + 12 << "\" y1=\"" << ly << "\" x2=\"" << w - mr + 34
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << w - mr + 40 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">" << policy
        << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("emit_plot: write failure on '" + path + "'");
}

}  // namespace btune
