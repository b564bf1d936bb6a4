#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "btune/bench.hpp"

namespace btune {

// JSON (de)serialization for the experiment configuration documents consumed
// by the CLI. Unknown keys are rejected so typos fail loudly.

nlohmann::json to_json(const SynthSpec& s);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GPHypers& h);
GPHypers hypers_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PolicySpec& p);
PolicySpec policy_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExperimentSpec& e);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);

ExperimentSpec load_experiment_spec(const std::string& path);
std::vector<SynthSpec> load_synth_specs(const std::string& path);

}  // namespace btune
