// Test-only helpers: independent oracles, a hand-built log writer, a prompt auditor.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "werewolf/agent.hpp"
#include "werewolf/engine.hpp"
#include "werewolf/game_log.hpp"

namespace testkit {

using namespace werewolf;

// Reliability written out as a lookup instead of a formula.
inline int reliability_oracle(int confidence, RoleGuess guess, Role observer) {
  static const std::map<int, int> inverted = {{5, 6}, {6, 5}, {7, 4}, {8, 3}, {9, 2}, {10, 1}};
  const bool flips = guess == RoleGuess::Werewolf && observer != Role::Werewolf;
  return flips ? inverted.at(confidence) : confidence;
}

// Rank by counting: rank = 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> ranks_by_counting(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) {
    int less = 0, equal = 0;
    for (double y : v) {
      if (y < x) ++less;
      if (y == x) ++equal;
    }
    out.push_back(1.0 + less + (equal - 1) / 2.0);
  }
  return out;
}

inline double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa / n, mb = sb / n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

inline std::optional<double> spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto rx = ranks_by_counting(x);
  auto ry = ranks_by_counting(y);
  auto flat = [](const std::vector<double>& r) { return std::all_of(r.begin(), r.end(), [&](double v) { return v == r[0]; }); };
  if (flat(rx) || flat(ry)) return std::nullopt;
  return pearson_oracle(rx, ry);
}

// Win rules applied literally to a list of alive roles.
inline std::optional<Outcome> win_oracle(const std::vector<Role>& alive) {
  int wolves = 0, others = 0;
  for (auto r : alive) (r == Role::Werewolf ? wolves : others)++;
  if (wolves == 0) return Outcome::VillagerWin;
  if (wolves == others) return Outcome::WerewolfWin;
  return std::nullopt;
}

// Builds game logs by hand for metric fixtures.
class LogBuilder {
 public:
  explicit LogBuilder(std::vector<Role> roles = standard_roles(), std::string id = "fixture") {
    log_.header.game_id = std::move(id);
    log_.header.setting = "fixture";
    log_.header.roles = std::move(roles);
  }

  LogBuilder& event(int round, std::string type, nlohmann::json payload, std::optional<int> actor = {}) {
    LogEvent e;
    e.seq = log_.last_seq() + 1;
    e.round = round;
    e.phase = Phase::Voting;
    if (actor) e.actor = PlayerId{*actor};
    e.type = std::move(type);
    e.payload = std::move(payload);
    log_.append(e);
    return *this;
  }

  LogBuilder& order(int round, std::optional<int> sheriff, std::vector<int> alive) {
    round_ = round;
    return event(round, "order",
                 {{"sheriff", sheriff ? nlohmann::json(*sheriff) : nlohmann::json(nullptr)},
                  {"side", "Left"},
                  {"order", alive},
                  {"alive", alive}});
  }

  LogBuilder& belief(int observer, int target, int m) {
    return event(round_, "belief",
                 {{"observer", observer}, {"target", target}, {"round", round_}, {"checkpoint", "v"},
                  {"role", "Uncertain"}, {"confidence", m}, {"reliability", m}, {"evidence", nlohmann::json::array()}},
                 observer);
  }

  // Every alive observer gives `m` to every other alive player.
  LogBuilder& uniform_beliefs(const std::vector<int>& alive, int m) {
    for (int i : alive) {
      for (int j : alive) {
        if (i != j) belief(i, j, m);
      }
    }
    return *this;
  }

  static nlohmann::json choice(std::optional<int> c) { return c ? nlohmann::json(*c) : nlohmann::json(nullptr); }

  LogBuilder& pseudo(int voter, std::optional<int> c) {
    return event(round_, "pseudo_vote", {{"voter", voter}, {"choice", choice(c)}}, voter);
  }
  LogBuilder& vote(int voter, std::optional<int> c) {
    return event(round_, "vote", {{"voter", voter}, {"choice", choice(c)}}, voter);
  }
  LogBuilder& day_result(std::optional<int> eliminated = {}) {
    return event(round_, "day_result",
                 {{"tally", nlohmann::json::object()},
                  {"abstentions", 0},
                  {"eliminated", eliminated ? nlohmann::json(*eliminated) : nlohmann::json(nullptr)},
                  {"announcement", ""}});
  }
  LogBuilder& outcome(Outcome o, std::vector<int> alive, std::optional<int> first_sheriff) {
    return event(round_, "outcome",
                 {{"outcome", o},
                  {"winner", ""},
                  {"alive", alive},
                  {"sheriff", first_sheriff ? nlohmann::json(*first_sheriff) : nlohmann::json(nullptr)},
                  {"first_sheriff", first_sheriff ? nlohmann::json(*first_sheriff) : nlohmann::json(nullptr)}});
  }

  GameLog build() const { return log_; }

 private:
  GameLog log_;
  int round_ = 1;
};

// Pseudo-vote blindness over a full log with recorded prompts. Returns violations.
std::vector<std::string> audit_prompts(const GameLog& log, const std::map<int, std::vector<nlohmann::json>>& players);

// A game config with scripted agents everywhere, stable across tests.
inline GameConfig scripted_config(std::uint64_t seed, SheriffMode mode = SheriffMode::SecretAssign) {
  GameConfig c;
  c.seed = seed;
  c.sheriff_mode = mode;
  c.game_id = "scripted-" + std::to_string(seed);
  c.setting = "scripted";
  c.sheriff_succession = true;
  return c;
}

// A policy that varies with the request so games are not degenerate, yet stays a pure
// function of the request.
ScriptedPolicy varied_policy();

}  // namespace testkit
