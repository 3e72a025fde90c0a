#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "werewolf/core.hpp"
#include "werewolf/game_log.hpp"

namespace werewolf {

// One fully voted round as seen by the metrics: the pre-vote belief table m^v, the
// pseudo-votes and the final votes.
struct RoundSnapshot {
  int round = 0;
  PlayerList alive;
  std::optional<PlayerId> sheriff;
  std::map<std::pair<int, int>, int> beliefs;  // (observer, target) -> m; missing = 5
  std::map<int, VoteChoice> pseudo;
  std::map<int, VoteChoice> final_votes;

  int m(PlayerId observer, PlayerId target) const;
  int n_alive() const { return static_cast<int>(alive.size()); }
};

std::vector<RoundSnapshot> extract_rounds(const GameLog& log);

// m̄2 / m̄1 with `focus` in the Sheriff's place. nullopt when the round is ineligible.
std::optional<double> round_focus_ratio(const RoundSnapshot& round, PlayerId focus);
std::optional<double> round_ratio(const RoundSnapshot& round);
std::optional<double> round_dc(const RoundSnapshot& round);
std::optional<double> round_dc_star(const RoundSnapshot& round);

// Means over eligible rounds; MetricError when there is none.
double ratio(const GameLog& log);
double decision_change(const GameLog& log);
double decision_change_any(const GameLog& log);
std::optional<double> focus_ratio(const GameLog& log, PlayerId focus);

struct GameMetrics {
  std::string game_id;
  Outcome outcome = Outcome::Void;
  std::optional<PlayerId> sheriff;  // the first Sheriff of the game
  std::optional<Role> sheriff_role;
  std::optional<double> ratio;
  std::optional<double> dc;
  std::optional<double> dc_star;
  int rounds = 0;  // eligible rounds T
  bool completed = false;
  bool sheriff_team_won = false;

  nlohmann::json to_json() const;
};

GameMetrics game_metrics(const GameLog& log);

struct BatchRates {
  double completion_rate = 0.0;
  double win_rate = 0.0;
  double c_times_w = 0.0;
  int n_games = 0;
  int n_completed = 0;
};

BatchRates batch_rates(const std::vector<GameMetrics>& games);

struct RoleRow {
  Role role = Role::Villager;
  bool is_sheriff = true;
  int n = 0;
  std::optional<double> ratio;
  std::optional<double> dc;
  bool omitted() const { return n == 0; }
};

// Sheriff rows group games by the first Sheriff's hidden role. With `include_non_sheriff`
// every other seat contributes its focus ratio to a {role, not Sheriff} row.
std::vector<RoleRow> per_role_breakdown(const std::vector<GameLog>& logs, bool include_non_sheriff);

// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> values);
double spearman(std::span<const double> x, std::span<const double> y);

// Pairs, per (round, target), the human seat's reliability score with the mean score the
// other players gave the same target.
std::vector<std::pair<double, double>> human_agreement_pairs(const GameLog& log, PlayerId human);
double human_agreement(const std::vector<GameLog>& logs, PlayerId human);

struct MetricsReport {
  std::optional<double> ratio;
  std::optional<double> dc;
  std::optional<double> dc_star;
  std::optional<BatchRates> rates;
  std::vector<RoleRow> per_role;
  int n_games = 0;
  int n_void = 0;
  int n_rounds = 0;
  std::vector<GameMetrics> games;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Void games are skipped entirely.
MetricsReport compute_report(const std::vector<GameLog>& logs, bool include_non_sheriff = false);

}  // namespace werewolf
