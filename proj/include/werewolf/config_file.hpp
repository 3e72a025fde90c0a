#pragma once

#include <filesystem>
#include <string>

#include "werewolf/experiment.hpp"

namespace werewolf {

// INI layout:
//   [experiment]  setting, n_games, repeats, seeds = 1,2,3, parallel, max_rounds, alpha,
//                 tie_policy, language, retries, log_full_prompts, human_seat, out, batch
//   [tested] / [baseline]  name, base_url, model, api_key_env, max_tokens, temperature,
//                 timeout_seconds, requests_per_minute, max_retries,
//                 backoff_initial_seconds, backoff_max_seconds
// Unknown keys are a ConfigError. Anything absent keeps the value already in `spec`.
void load_experiment_config(const std::filesystem::path& path, ExperimentSpec& spec);
void parse_experiment_config(const std::string& text, ExperimentSpec& spec);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace werewolf
