#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "werewolf/core.hpp"

namespace werewolf {

inline constexpr int kMinConfidence = 5;
inline constexpr int kMaxConfidence = 10;
inline constexpr int kDefaultAlpha = 6;
// Reliability assumed for a speaker nobody has scored yet ("pure guess").
inline constexpr int kDefaultReliability = 5;

enum class FactKind {
  Identity,
  NightResult,
  DayResult,
  OwnStatement,
  OwnNightAction,
  VoteRecord,
  SheriffAnnouncement,
};

NLOHMANN_JSON_SERIALIZE_ENUM(FactKind, {{FactKind::Identity, "identity"},
                                        {FactKind::NightResult, "night_result"},
                                        {FactKind::DayResult, "day_result"},
                                        {FactKind::OwnStatement, "own_statement"},
                                        {FactKind::OwnNightAction, "own_night_action"},
                                        {FactKind::VoteRecord, "vote_record"},
                                        {FactKind::SheriffAnnouncement, "sheriff_announcement"}})

struct FactEntry {
  int seq_id = 0;
  int round = 0;
  FactKind kind = FactKind::Identity;
  std::string text;
};

enum class StatementKind { Discussion, Sheriff, Campaign };

NLOHMANN_JSON_SERIALIZE_ENUM(StatementKind, {{StatementKind::Discussion, "discussion"},
                                             {StatementKind::Sheriff, "sheriff"},
                                             {StatementKind::Campaign, "campaign"}})

struct StatementRecord {
  PlayerId speaker;
  int round = 0;
  std::string text;
  int seq_id = 0;  // numbering of the owning player's context
  StatementKind kind = StatementKind::Discussion;
  bool silent = false;
  // Game-log seq of the event that produced the statement; 0 when built by hand.
  std::int64_t source_event = 0;

  // The context line without the "[id]" prefix.
  std::string render() const;
};

struct BeliefRecord {
  PlayerId observer;
  PlayerId target;
  int round = 0;
  Checkpoint checkpoint = Checkpoint::Night;
  RoleGuess role_guess = RoleGuess::Uncertain;
  int confidence = kMinConfidence;
  int reliability = kMinConfidence;
  std::vector<int> evidence;
};

void to_json(nlohmann::json& j, const BeliefRecord& b);
void from_json(const nlohmann::json& j, BeliefRecord& b);
void to_json(nlohmann::json& j, const StatementRecord& s);
void from_json(const nlohmann::json& j, StatementRecord& s);
void to_json(nlohmann::json& j, const FactEntry& f);
void from_json(const nlohmann::json& j, FactEntry& f);

// Maps a raw confidence into [5, 10], rounding to nearest.
int clamp_confidence(double raw);

// Reliability m of an observer toward a target. A non-Werewolf that guesses "Werewolf"
// inverts its confidence; every other combination keeps it.
int reliability_from(int confidence, RoleGuess guess, Role observer_role);

struct StatementSplit {
  std::vector<StatementRecord> truths;
  std::vector<StatementRecord> falsehoods;
};

// Statements whose speaker scores strictly above alpha are potential truths.
// Speakers missing from `scores` take kDefaultReliability.
StatementSplit split_statements(std::span<const StatementRecord> pool,
                                const std::map<PlayerId, int>& scores, int alpha);

struct ClassifiedStatements {
  std::vector<StatementRecord> truths;
  std::vector<StatementRecord> falsehoods;
  std::vector<StatementRecord> pending;
};

// Drops classified statements that no reasoning output cited. Pending is left alone.
ClassifiedStatements prune_unmentioned(ClassifiedStatements classified, const std::set<int>& cited);

struct ContextDocument {
  PlayerList remaining;
  std::vector<FactEntry> facts;
  std::vector<StatementRecord> truths;
  std::vector<StatementRecord> falsehoods;
  std::vector<StatementRecord> pending;

  std::string render() const;
  nlohmann::json to_json() const;
};

struct VoteFact {
  PlayerId voter;
  VoteChoice choice;
};

// Everything a player learns at the end of (parts of) a round. Present fields are
// appended in this order: night result, own night action, own statement, votes, day result.
struct RoundEvents {
  int round = 0;
  std::optional<std::string> night_result;
  std::optional<std::string> own_night_action;
  std::optional<std::string> own_statement;
  std::vector<VoteFact> votes;
  std::optional<std::string> day_result;
};

std::string night_result_fact(int round, const std::string& announcement);
std::string day_result_fact(int round, const std::string& announcement);
std::string vote_fact(int round, const VoteFact& vote);
std::string own_statement_fact(int round, const std::string& text);

// One player's information state: facts F, retained public statements P (classified into
// potential truths/falsehoods), statements received this round still awaiting
// classification, and the latest reliability score toward every other player.
// Facts and statements share one seq_id numbering space.
class ContextLedger {
 public:
  ContextLedger(PlayerId owner, Role role, PlayerList teammates, int alpha = kDefaultAlpha);

  PlayerId owner() const { return owner_; }
  Role role() const { return role_; }
  bool alive() const { return alive_; }
  void mark_dead() { alive_ = false; }

  void update_facts(const RoundEvents& events);
  void add_fact(int round, FactKind kind, std::string text);

  // Assigns the next seq_id and files the statement under pending.
  int receive_statement(StatementRecord statement);

  void record_belief(const BeliefRecord& belief);
  int reliability_of(PlayerId target) const;
  std::optional<BeliefRecord> latest_belief(PlayerId target) const;
  const std::map<PlayerId, BeliefRecord>& beliefs() const { return latest_; }
  std::map<PlayerId, int> reliability_scores() const;

  // Re-splits every retained and pending statement with the current scores; pending empties.
  void commit_split();
  // The split commit_split would produce, without committing; statements for which
  // `exclude` returns true are left out entirely.
  ClassifiedStatements provisional_split(
      const std::function<bool(const StatementRecord&)>& exclude = {}) const;

  // Prunes uncited classified statements, then clears the round's citations.
  void end_round();

  ContextDocument context(const PlayerList& remaining) const;
  ContextDocument context(const PlayerList& remaining, const ClassifiedStatements& view) const;

  bool has_seq(int seq_id) const { return seq_id >= 1 && seq_id < next_seq_; }
  int next_seq() const { return next_seq_; }
  const std::vector<FactEntry>& facts() const { return facts_; }
  const ClassifiedStatements& statements() const { return classified_; }
  const std::set<int>& cited() const { return cited_; }

 private:
  void append_fact(int round, FactKind kind, std::string text);
  void guard_single(int round, FactKind kind);

  PlayerId owner_;
  Role role_;
  int alpha_;
  bool alive_ = true;
  int next_seq_ = 1;
  std::vector<FactEntry> facts_;
  ClassifiedStatements classified_;
  std::map<PlayerId, BeliefRecord> latest_;
  std::set<int> cited_;
  std::set<std::pair<int, FactKind>> singles_;
  std::set<std::pair<int, int>> votes_seen_;
};

}  // namespace werewolf
