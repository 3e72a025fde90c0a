#include "werewolf/config_file.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace werewolf {

namespace pt = boost::property_tree;

namespace {

template <typename T>
void read(const pt::ptree& section, const std::string& where, const std::string& key, T& out) {
  auto v = section.get_optional<std::string>(key);
  if (!v) return;
  std::string text = boost::trim_copy(*v);
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      out = text;
    } else if constexpr (std::is_same_v<T, bool>) {
      auto lower = boost::to_lower_copy(text);
      if (lower == "true" || lower == "yes" || lower == "1" || lower == "on") {
        out = true;
      } else if (lower == "false" || lower == "no" || lower == "0" || lower == "off") {
        out = false;
      } else {
        throw std::invalid_argument(text);
      }
    } else if constexpr (std::is_same_v<T, int>) {
      std::size_t used = 0;
      out = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      std::size_t used = 0;
      out = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    }
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("[{}] {}: bad value '{}'", where, key, text));
  }
}

void check_keys(const pt::ptree& section, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, child] : section) {
    if (!child.empty()) throw ConfigError(fmt::format("[{}] {}: nested keys not supported", where, key));
    if (!allowed.count(key)) throw ConfigError(fmt::format("[{}] unknown key '{}'", where, key));
  }
}

void read_endpoint(const pt::ptree& section, const std::string& where, ModelEndpoint& e) {
  check_keys(section, where,
             {"name", "base_url", "model", "api_key_env", "max_tokens", "temperature", "timeout_seconds",
              "requests_per_minute", "max_retries", "backoff_initial_seconds", "backoff_max_seconds"});
  read(section, where, "name", e.name);
  read(section, where, "base_url", e.base_url);
  read(section, where, "model", e.model);
  read(section, where, "api_key_env", e.api_key_env);
  read(section, where, "max_tokens", e.max_tokens);
  read(section, where, "temperature", e.temperature);
  read(section, where, "timeout_seconds", e.timeout_seconds);
  read(section, where, "requests_per_minute", e.requests_per_minute);
  read(section, where, "max_retries", e.max_retries);
  read(section, where, "backoff_initial_seconds", e.backoff_initial_seconds);
  read(section, where, "backoff_max_seconds", e.backoff_max_seconds);
  if (e.max_retries < 0) throw ConfigError(fmt::format("[{}] max_retries must be >= 0", where));
  if (e.timeout_seconds <= 0) throw ConfigError(fmt::format("[{}] timeout_seconds must be > 0", where));
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(", "), boost::token_compress_on);
  for (auto& part : parts) {
    boost::trim(part);
    if (part.empty()) continue;
    auto dash = part.find('-');
    try {
      if (dash != std::string::npos && dash > 0) {
        auto lo = std::stoull(part.substr(0, dash));
        auto hi = std::stoull(part.substr(dash + 1));
        if (hi < lo) throw ConfigError(fmt::format("bad seed range '{}'", part));
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      } else {
        std::size_t used = 0;
        out.push_back(std::stoull(part, &used));
        if (used != part.size()) throw std::invalid_argument(part);
      }
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("bad seed '{}'", part));
    }
  }
  return out;
}

void parse_experiment_config(const std::string& text, ExperimentSpec& spec) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  for (const auto& [name, section] : tree) {
    if (name != "experiment" && name != "tested" && name != "baseline") {
      throw ConfigError(fmt::format("unknown section [{}]", name));
    }
  }

  if (auto ex = tree.get_child_optional("experiment")) {
    const auto& s = *ex;
    check_keys(s, "experiment",
               {"setting", "n_games", "repeats", "seeds", "parallel", "max_rounds", "alpha", "tie_policy",
                "language", "retries", "log_full_prompts", "human_seat", "out", "batch"});
    if (auto v = s.get_optional<std::string>("setting")) {
      auto setting = parse_setting(boost::trim_copy(*v));
      if (!setting) throw ConfigError(fmt::format("[experiment] setting: unknown '{}'", *v));
      spec.setting = *setting;
    }
    if (s.count("n_games")) {
      int n = 0;
      read(s, "experiment", "n_games", n);
      spec.n_games = n;
    }
    read(s, "experiment", "repeats", spec.repeats);
    if (auto v = s.get_optional<std::string>("seeds")) spec.seeds = parse_seed_list(*v);
    read(s, "experiment", "parallel", spec.parallel);
    read(s, "experiment", "max_rounds", spec.base.max_rounds);
    read(s, "experiment", "alpha", spec.base.alpha);
    if (auto v = s.get_optional<std::string>("tie_policy")) {
      auto t = boost::trim_copy(*v);
      if (t == "no-elimination") {
        spec.base.tie_policy = TiePolicy::NoElimination;
      } else if (t == "seeded-random") {
        spec.base.tie_policy = TiePolicy::SeededRandom;
      } else {
        throw ConfigError(fmt::format("[experiment] tie_policy: unknown '{}'", t));
      }
    }
    read(s, "experiment", "language", spec.base.language);
    read(s, "experiment", "retries", spec.base.retries);
    read(s, "experiment", "log_full_prompts", spec.base.log_full_prompts);
    if (s.count("human_seat")) {
      int seat = 0;
      read(s, "experiment", "human_seat", seat);
      spec.base.human_seat = PlayerId{seat};
    }
    if (auto v = s.get_optional<std::string>("out")) spec.out_dir = boost::trim_copy(*v);
    read(s, "experiment", "batch", spec.batch_name);
  }
  if (auto t = tree.get_child_optional("tested")) read_endpoint(*t, "tested", spec.tested);
  if (auto b = tree.get_child_optional("baseline")) read_endpoint(*b, "baseline", spec.baseline);
  if (spec.repeats < 1) throw ConfigError("[experiment] repeats must be at least 1");
  if (spec.n_games && *spec.n_games < 1) throw ConfigError("[experiment] n_games must be at least 1");
  spec.base.validate();
}

void load_experiment_config(const std::filesystem::path& path, ExperimentSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  parse_experiment_config(buf.str(), spec);
}

}  // namespace werewolf
