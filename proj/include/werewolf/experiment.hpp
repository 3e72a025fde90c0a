#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "werewolf/engine.hpp"
#include "werewolf/gateway.hpp"
#include "werewolf/metrics.hpp"

namespace werewolf {

enum class Setting {
  Heterogeneous,
  Homogeneous,
  HomogeneousVariant1,
  HeterogeneousVariant1,
  HeterogeneousVariant2,
  HumanEvaluation,
  HumanBaseline,
};

std::string_view to_string(Setting setting);  // "heterogeneous", "homogeneous-variant1", ...
std::optional<Setting> parse_setting(std::string_view text);

// Sheriff mode and stop rules a setting implies, applied on top of `base`.
GameConfig config_for(Setting setting, const GameConfig& base);

enum class Binding { Tested, Baseline, Human };

// Builds the agent for one binding of one game.
using AgentFactory = std::function<std::shared_ptr<Agent>(Binding, const GameConfig&)>;

// Seat bindings per setting; `initial` supplies the designate / tested seat.
AgentSet bind_agents(Setting setting, const GameState& initial, const GameConfig& config,
                     const AgentFactory& factory);

struct ExperimentSpec {
  Setting setting = Setting::Heterogeneous;
  std::optional<int> n_games;  // default: |seeds| * repeats, or 30 without a seed list
  int repeats = 3;
  std::vector<std::uint64_t> seeds;
  int parallel = 1;
  GameConfig base;  // language, alpha, max_rounds, tie policy, retries, human seat
  ModelEndpoint tested;
  ModelEndpoint baseline;
  std::filesystem::path out_dir;  // empty: keep logs in memory only
  std::string batch_name;         // default: the setting name
  AgentFactory factory;

  int resolved_games() const;
};

struct GameRecord {
  std::string game_id;
  std::uint64_t seed = 0;
  int repeat = 0;
  std::optional<std::uint64_t> replaces_seed;  // set for resimulated games
  Outcome outcome = Outcome::Void;
  bool partial = false;
  int gateway_failures = 0;
  int invalid_outputs = 0;
  GameMetrics metrics;

  nlohmann::json to_json() const;
};

struct BatchReport {
  std::string setting;
  int n_requested = 0;
  int n_valid = 0;
  int n_void = 0;
  int attempts = 0;
  bool incomplete = false;
  std::string incomplete_reason;
  std::vector<GameRecord> games;  // sorted by (seed, repeat)
  MetricsReport metrics;

  nlohmann::json to_json() const;
};

inline constexpr int kResimulationFactor = 5;

// Runs seeds x repeats games, resimulates void games with fresh seeds from a secondary
// stream until enough valid games exist or 5 x n_games attempts were made.
BatchReport run_batch(const ExperimentSpec& spec);

// Plain-text tables for a batch.
std::string report(const BatchReport& batch);

std::string game_id_for(Setting setting, std::uint64_t seed, int repeat);

}  // namespace werewolf
