#include "btune/config.hpp"

#include <fstream>
#include <stdexcept>

namespace btune {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& what) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument(what + ": unknown key '" + key + "'");
  }
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  json j;
  in >> j;
  return j;
}

}  // namespace

json to_json(const SynthSpec& s) {
  return {{"num_arms", s.num_arms},
          {"epochs", s.epochs},
          {"asym_lengthscale", s.asym_lengthscale},
          {"asym_magnitude", s.asym_magnitude},
          {"ft_alpha", s.ft_alpha},
          {"ft_beta", s.ft_beta},
          {"ft_magnitude", s.ft_magnitude},
          {"noise_std", s.noise_std},
          {"seed", s.seed},
          {"rescale", s.rescale}};
}

SynthSpec synth_spec_from_json(const json& j) {
  check_keys(j,
             {"num_arms", "epochs", "asym_lengthscale", "asym_magnitude", "ft_alpha", "ft_beta",
              "ft_magnitude", "noise_std", "seed", "rescale"},
             "synth spec");
  SynthSpec s;
  s.num_arms = j.value("num_arms", s.num_arms);
  s.epochs = j.value("epochs", s.epochs);
  s.asym_lengthscale = j.value("asym_lengthscale", s.asym_lengthscale);
  s.asym_magnitude = j.value("asym_magnitude", s.asym_magnitude);
  s.ft_alpha = j.value("ft_alpha", s.ft_alpha);
  s.ft_beta = j.value("ft_beta", s.ft_beta);
  s.ft_magnitude = j.value("ft_magnitude", s.ft_magnitude);
  s.noise_std = j.value("noise_std", s.noise_std);
  s.seed = j.value("seed", s.seed);
  s.rescale = j.value("rescale", s.rescale);
  s.validate();
  return s;
}

json to_json(const GPHypers& h) {
  return {{"ft_alpha", h.ft_alpha},
          {"ft_beta", h.ft_beta},
          {"time_magnitude", h.time_magnitude},
          {"independent", h.independent},
          {"config_variance", h.config_variance},
          {"config_lengthscale", h.config_lengthscale},
          {"config_magnitude", h.config_magnitude},
          {"noise_std", h.noise_std},
          {"mean", h.mean},
          {"data_mean", h.data_mean}};
}

GPHypers hypers_from_json(const json& j) {
  check_keys(j,
             {"ft_alpha", "ft_beta", "time_magnitude", "independent", "config_variance",
              "config_lengthscale", "config_magnitude", "noise_std", "mean", "data_mean"},
             "gp hypers");
  GPHypers h;
  h.ft_alpha = j.value("ft_alpha", h.ft_alpha);
  h.ft_beta = j.value("ft_beta", h.ft_beta);
  h.time_magnitude = j.value("time_magnitude", h.time_magnitude);
  h.independent = j.value("independent", h.independent);
  h.config_variance = j.value("config_variance", h.config_variance);
  h.config_lengthscale = j.value("config_lengthscale", h.config_lengthscale);
  h.config_magnitude = j.value("config_magnitude", h.config_magnitude);
  h.noise_std = j.value("noise_std", h.noise_std);
  h.mean = j.value("mean", h.mean);
  h.data_mean = j.value("data_mean", h.data_mean);
  h.validate();
  return h;
}

json to_json(const PolicySpec& p) {
  json belief = {{"hypers", to_json(p.belief.hypers)},
                 {"hypers_from_set", p.belief.hypers_from_set},
                 {"resample_every", p.belief.resample_every},
                 {"n_samples", p.belief.n_samples},
                 {"slice_step", p.belief.slice.step},
                 {"slice_burn_in", p.belief.slice.burn_in},
                 {"slice_max_attempts", p.belief.slice.max_attempts}};
  return {{"kind", p.name()},
          {"eps", p.eps},
          {"belief", belief},
          {"eta", p.eta},
          {"rollout_horizon", p.rollout.horizon},
          {"rollout_n_quad", p.rollout.n_quad}};
}

PolicySpec policy_spec_from_json(const json& j) {
  check_keys(j, {"kind", "eps", "belief", "eta", "rollout_horizon", "rollout_n_quad"},
             "policy spec");
  PolicySpec p;
  p.kind = policy_kind_from_string(j.at("kind").get<std::string>());
  p.eps = j.value("eps", p.eps);
  p.eta = j.value("eta", p.eta);
  p.rollout.horizon = j.value("rollout_horizon", p.rollout.horizon);
  p.rollout.n_quad = j.value("rollout_n_quad", p.rollout.n_quad);
  if (j.contains("belief")) {
    const json& b = j.at("belief");
    check_keys(b,
               {"hypers", "hypers_from_set", "resample_every", "n_samples", "slice_step",
                "slice_burn_in", "slice_max_attempts"},
               "belief config");
    if (b.contains("hypers")) p.belief.hypers = hypers_from_json(b.at("hypers"));
    p.belief.hypers_from_set = b.value("hypers_from_set", p.belief.hypers_from_set);
    p.belief.resample_every = b.value("resample_every", p.belief.resample_every);
    p.belief.n_samples = b.value("n_samples", p.belief.n_samples);
    p.belief.slice.step = b.value("slice_step", p.belief.slice.step);
    p.belief.slice.burn_in = b.value("slice_burn_in", p.belief.slice.burn_in);
    p.belief.slice.max_attempts = b.value("slice_max_attempts", p.belief.slice.max_attempts);
  }
  p.validate();
  return p;
}

json to_json(const ExperimentSpec& e) {
  json policies = json::array();
  for (const auto& p : e.policies) policies.push_back(to_json(p));
  json synth = json::array();
  for (const auto& s : e.synth) synth.push_back(to_json(s));
  return {{"curve_paths", e.curve_paths}, {"synth", synth},      {"budgets", e.budgets},
          {"policies", policies},         {"seeds", e.seeds},    {"out_dir", e.out_dir}};
}

ExperimentSpec experiment_spec_from_json(const json& j) {
  check_keys(j, {"curve_paths", "synth", "budgets", "policies", "seeds", "out_dir"},
             "experiment spec");
  ExperimentSpec e;
  if (j.contains("curve_paths"))
    e.curve_paths = j.at("curve_paths").get<std::vector<std::string>>();
  if (j.contains("synth"))
    for (const auto& s : j.at("synth")) e.synth.push_back(synth_spec_from_json(s));
  e.budgets = j.at("budgets").get<std::vector<int>>();
  for (const auto& p : j.at("policies")) e.policies.push_back(policy_spec_from_json(p));
  e.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  e.out_dir = j.value("out_dir", std::string());
  e.validate();
  return e;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  return experiment_spec_from_json(read_file(path));
}

std::vector<SynthSpec> load_synth_specs(const std::string& path) {
  const json j = read_file(path);
  std::vector<SynthSpec> specs;
  if (j.is_array())
    for (const auto& s : j) specs.push_back(synth_spec_from_json(s));
  else if (j.is_object() && j.contains("sets"))
    for (const auto& s : j.at("sets")) specs.push_back(synth_spec_from_json(s));
  else
    specs.push_back(synth_spec_from_json(j));
  return specs;
}

}  // namespace btune
