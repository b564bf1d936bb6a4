#include "btune/curves.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace btune {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw std::runtime_error("curve file: malformed " + what + " value '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

}  // namespace

int CurveSet::max_epochs() const {
  int m = 0;
  for (const auto& c : losses) m = std::max(m, static_cast<int>(c.size()));
  return m;
}

int CurveSet::total_epochs() const {
  int n = 0;
  for (const auto& c : losses) n += static_cast<int>(c.size());
  return n;
}

double CurveSet::best_loss(int arm, int budget) const {
  const auto& c = losses[arm];
  const int n = std::min<int>(budget, static_cast<int>(c.size()));
  double best = kInf;
  for (int t = 0; t < n; ++t) best = std::min(best, c[t]);
  return best;
}

void CurveSet::validate() const {
  if (losses.empty()) throw std::invalid_argument("CurveSet: no arms");
  for (int k = 0; k < num_arms(); ++k) {
    if (losses[k].empty())
      throw std::invalid_argument("CurveSet: arm " + std::to_string(k) + " has no epochs");
    for (double v : losses[k]) {
      if (!std::isfinite(v))
        throw std::invalid_argument("CurveSet: non-finite loss on arm " + std::to_string(k));
      if (normalized && (v < 0.0 || v >= 1.0))
        throw std::invalid_argument("CurveSet: normalized set has loss outside [0,1) on arm " +
                                    std::to_string(k));
    }
  }
  if (!features.empty() && features.size() != losses.size())
    throw std::invalid_argument("CurveSet: feature rows do not match arm count");
}

ReplayEnv::ReplayEnv(const CurveSet& curves, int budget)
    : curves_(&curves), budget_(budget), consumed_(curves.num_arms(), 0),
      best_(curves.num_arms(), kInf) {
  if (budget < 1) throw std::invalid_argument("ReplayEnv: budget must be >= 1");
  curves.validate();
}

bool ReplayEnv::arm_exhausted(int arm) const {
  return consumed_[arm] >= curves_->curve_len(arm);
}

bool ReplayEnv::any_eligible() const {
  for (int k = 0; k < num_arms(); ++k)
    if (!arm_exhausted(k)) return true;
  return false;
}

double ReplayEnv::step(int arm) {
  if (arm < 0 || arm >= num_arms())
    throw std::out_of_range("ReplayEnv::step: arm index " + std::to_string(arm));
  if (steps() >= budget_) throw std::runtime_error("ReplayEnv::step: budget exhausted");
  if (arm_exhausted(arm))
    throw std::runtime_error("ReplayEnv::step: curve exhausted on arm " + std::to_string(arm));
  const double loss = curves_->losses[arm][consumed_[arm]];
  ++consumed_[arm];
  best_[arm] = std::min(best_[arm], loss);
  trajectory_.emplace_back(arm, loss);
  return loss;
}

double ReplayEnv::best_so_far() const {
  double best = kInf;
  for (double b : best_) best = std::min(best, b);
  return best;
}

TuningResult ReplayEnv::finish(std::string policy, std::uint64_t seed) const {
  TuningResult res;
  res.trajectory = trajectory_;
  res.allocation = consumed_;
  res.policy = std::move(policy);
  res.seed = seed;
  res.output_loss = kInf;
  for (const auto& [arm, loss] : trajectory_) res.output_loss = std::min(res.output_loss, loss);
  res.output_arm = -1;
  for (int k = 0; k < num_arms(); ++k) {
    if (best_[k] == res.output_loss) {
      res.output_arm = k;
      break;
    }
  }
  return res;
}

CurveSet load_curves(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_curves: cannot open '" + path + "'");

  CurveSet set;
  bool have_initial = false;
  bool have_normalized = false;
  // per config id: epoch -> loss, plus the features seen on its rows
  std::map<long, std::map<long, double>> rows;
  std::map<long, std::vector<double>> feats;

  std::string line;
  bool header_seen = false;
  int n_feat = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      key.erase(key.find_last_not_of(' ') + 1);
      const double val = parse_double(line.substr(eq + 1), "metadata");
      if (key == "initial_loss") {
        set.initial_loss = val;
        have_initial = true;
      } else if (key == "normalized") {
        set.normalized = val != 0.0;
        have_normalized = true;
      } else {
        set.meta[key] = val;
      }
      continue;
    }
    if (!header_seen) {
      const auto fields = split(line, ',');
      if (fields.size() < 3 || fields[0] != "config_id" || fields[1] != "epoch" ||
          fields[2] != "loss")
        throw std::runtime_error("load_curves: bad header '" + line + "'");
      n_feat = static_cast<int>(fields.size()) - 3;
      header_seen = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (static_cast<int>(fields.size()) != 3 + n_feat)
      throw std::runtime_error("load_curves: row with wrong field count '" + line + "'");
    const long id = static_cast<long>(parse_double(fields[0], "config_id"));
    const long epoch = static_cast<long>(parse_double(fields[1], "epoch"));
    const double loss = parse_double(fields[2], "loss");
    if (id < 0) throw std::runtime_error("load_curves: negative config_id");
    if (epoch < 1) throw std::runtime_error("load_curves: epoch must be >= 1");
    if (!std::isfinite(loss))
      throw std::runtime_error("load_curves: non-finite loss for config " + std::to_string(id));
    if (!rows[id].emplace(epoch, loss).second)
      throw std::runtime_error("load_curves: duplicate (config, epoch) = (" + std::to_string(id) +
                               ", " + std::to_string(epoch) + ")");
    std::vector<double> f(n_feat);
    for (int j = 0; j < n_feat; ++j) f[j] = parse_double(fields[3 + j], "feature");
    auto [it, inserted] = feats.emplace(id, f);
    if (!inserted && it->second != f)
      throw std::runtime_error("load_curves: inconsistent features for config " +
                               std::to_string(id));
  }
  if (!header_seen) throw std::runtime_error("load_curves: missing header in '" + path + "'");
  if (rows.empty()) throw std::runtime_error("load_curves: no data rows in '" + path + "'");

  for (const auto& [id, epochs] : rows) {
    std::vector<double> curve;
    long expect = 1;
    for (const auto& [epoch, loss] : epochs) {
      if (epoch != expect)
        throw std::runtime_error("load_curves: epoch gap in config " + std::to_string(id) +
                                 " (expected " + std::to_string(expect) + ", got " +
                                 std::to_string(epoch) + ")");
      curve.push_back(loss);
      ++expect;
    }
    set.losses.push_back(std::move(curve));
    if (n_feat > 0) set.features.push_back(feats[id]);
  }

  if (!have_initial) {
    double m = -kInf;
    for (const auto& c : set.losses) m = std::max(m, c.front());
    set.initial_loss = m;
  }
  if (!have_normalized) {
    set.normalized = true;
    for (const auto& c : set.losses)
      for (double v : c) set.normalized = set.normalized && v >= 0.0 && v < 1.0;
  }
  set.validate();
  return set;
}

void save_curves(const CurveSet& curves, const std::string& path) {
  curves.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_curves: cannot open '" + path + "' for writing");
  out << "# initial_loss=" << format_double(curves.initial_loss) << "\n";
  out << "# normalized=" << (curves.normalized ? 1 : 0) << "\n";
  for (const auto& [key, val] : curves.meta) out << "# " << key << "=" << format_double(val) << "\n";
  const int n_feat = curves.features.empty() ? 0 : static_cast<int>(curves.features[0].size());
  out << "config_id,epoch,loss";
  for (int j = 0; j < n_feat; ++j) out << ",feat_" << j;
  out << "\n";
  for (int k = 0; k < curves.num_arms(); ++k) {
    for (int t = 0; t < curves.curve_len(k); ++t) {
      out << k << "," << (t + 1) << "," << format_double(curves.losses[k][t]);
      for (int j = 0; j < n_feat; ++j) out << "," << format_double(curves.features[k][j]);
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("save_curves: write failure on '" + path + "'");
}

std::pair<int, double> optimal_loss(const CurveSet& curves, int budget) {
  if (budget < 1) throw std::invalid_argument("optimal_loss: budget must be >= 1");
  curves.validate();
  int best_arm = 0;
  double best = kInf;
  for (int k = 0; k < curves.num_arms(); ++k) {
    const double v = curves.best_loss(k, budget);
    if (v < best) {
      best = v;
      best_arm = k;
    }
  }
  return {best_arm, best};
}

double normalized_regret(double output, double optimum, double initial) {
  if (initial <= optimum)
    throw std::invalid_argument("normalized_regret: degenerate range, initial <= optimum");
  return (output - optimum) / (initial - optimum);
}

}  // namespace btune
