#include "werewolf/ledger.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace werewolf {

std::string StatementRecord::render() const {
  if (kind == StatementKind::Campaign) {
    if (silent) return fmt::format("In day {} election phase, {}.", round, text);
    return fmt::format("In day {} election phase, {} said: \"{}\".", round, player_name(speaker), text);
  }
  if (silent) return fmt::format("In day {} round, {}.", round, text);
  return fmt::format("In day {} round, {} said: \"{}\".", round, player_name(speaker), text);
}

void to_json(nlohmann::json& j, const BeliefRecord& b) {
  j = nlohmann::json{{"observer", b.observer},     {"target", b.target},
                     {"round", b.round},           {"checkpoint", b.checkpoint},
                     {"role", b.role_guess},       {"confidence", b.confidence},
                     {"reliability", b.reliability}, {"evidence", b.evidence}};
}

void from_json(const nlohmann::json& j, BeliefRecord& b) {
  j.at("observer").get_to(b.observer);
  j.at("target").get_to(b.target);
  j.at("round").get_to(b.round);
  j.at("checkpoint").get_to(b.checkpoint);
  j.at("role").get_to(b.role_guess);
  j.at("confidence").get_to(b.confidence);
  j.at("reliability").get_to(b.reliability);
  j.at("evidence").get_to(b.evidence);
}

void to_json(nlohmann::json& j, const StatementRecord& s) {
  j = nlohmann::json{{"speaker", s.speaker}, {"round", s.round},   {"text", s.text},
                     {"seq_id", s.seq_id},   {"kind", s.kind},     {"silent", s.silent},
                     {"source_event", s.source_event}};
}

void from_json(const nlohmann::json& j, StatementRecord& s) {
  j.at("speaker").get_to(s.speaker);
  j.at("round").get_to(s.round);
  j.at("text").get_to(s.text);
  j.at("seq_id").get_to(s.seq_id);
  j.at("kind").get_to(s.kind);
  j.at("silent").get_to(s.silent);
  j.at("source_event").get_to(s.source_event);
}

void to_json(nlohmann::json& j, const FactEntry& f) {
  j = nlohmann::json{{"seq_id", f.seq_id}, {"round", f.round}, {"kind", f.kind}, {"text", f.text}};
}

void from_json(const nlohmann::json& j, FactEntry& f) {
  j.at("seq_id").get_to(f.seq_id);
  j.at("round").get_to(f.round);
  j.at("kind").get_to(f.kind);
  j.at("text").get_to(f.text);
}

int clamp_confidence(double raw) {
  if (!std::isfinite(raw)) return kMinConfidence;
  const auto rounded = static_cast<long long>(std::llround(raw));
  return static_cast<int>(std::clamp<long long>(rounded, kMinConfidence, kMaxConfidence));
}

int reliability_from(int confidence, RoleGuess guess, Role observer_role) {
  if (guess == RoleGuess::Werewolf && observer_role != Role::Werewolf) {
    return 11 - confidence;
  }
  return confidence;
}

StatementSplit split_statements(std::span<const StatementRecord> pool,
                                const std::map<PlayerId, int>& scores, int alpha) {
  StatementSplit split;
  for (const auto& statement : pool) {
    auto it = scores.find(statement.speaker);
    const int score = it == scores.end() ? kDefaultReliability : it->second;
    (score > alpha ? split.truths : split.falsehoods).push_back(statement);
  }
  return split;
}

ClassifiedStatements prune_unmentioned(ClassifiedStatements classified, const std::set<int>& cited) {
  auto uncited = [&](const StatementRecord& s) { return !cited.contains(s.seq_id); };
  std::erase_if(classified.truths, uncited);
  std::erase_if(classified.falsehoods, uncited);
  return classified;
}

namespace {

void render_statements(std::string& out, const std::vector<StatementRecord>& items) {
  for (const auto& item : items) {
    out += fmt::format("[{}] {}\n", item.seq_id, item.render());
  }
}

nlohmann::json statements_json(const std::vector<StatementRecord>& items) {
  auto arr = nlohmann::json::array();
  for (const auto& item : items) arr.push_back(item);
  return arr;
}

void sort_by_seq(std::vector<StatementRecord>& items) {
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.seq_id < b.seq_id; });
}

}  // namespace

std::string ContextDocument::render() const {
  std::string out = "All information you can leverage is listed below.\n";
  out += fmt::format("Remaining Players: {}\n", join_players(remaining));
  out += "The following information is true.\n";
  for (const auto& fact : facts) out += fmt::format("[{}] {}\n", fact.seq_id, fact.text);
  out += "\nThe following information might be true.\n";
  render_statements(out, truths);
  out += "\nThe following information might be false.\n";
  render_statements(out, falsehoods);
  out += "\nThe following information still needs further clarification.\n";
  render_statements(out, pending);
  return out;
}

nlohmann::json ContextDocument::to_json() const {
  auto facts_json = nlohmann::json::array();
  for (const auto& fact : facts) facts_json.push_back(fact);
  return nlohmann::json{{"remaining", remaining},
                        {"facts", facts_json},
                        {"truths", statements_json(truths)},
                        {"falsehoods", statements_json(falsehoods)},
                        {"pending", statements_json(pending)}};
}

std::string night_result_fact(int round, const std::string& announcement) {
  return fmt::format("In night {} round, the moderator announced: {}", round, announcement);
}

std::string day_result_fact(int round, const std::string& announcement) {
  return fmt::format("In day {} round, the moderator announced: {}", round, announcement);
}

std::string vote_fact(int round, const VoteFact& vote) {
  if (!vote.choice) return fmt::format("In day {} round, {} chose not to vote.", round, player_name(vote.voter));
  return fmt::format("In day {} round, {} voted to eliminate {}.", round, player_name(vote.voter),
                     player_name(*vote.choice));
}

std::string own_statement_fact(int round, const std::string& text) {
  return fmt::format("In day {} round, you said: \"{}\".", round, text);
}

ContextLedger::ContextLedger(PlayerId owner, Role role, PlayerList teammates, int alpha)
    : owner_(owner), role_(role), alpha_(alpha) {
  append_fact(0, FactKind::Identity, fmt::format("You are {}.", player_name(owner)));
  append_fact(0, FactKind::Identity, fmt::format("You are a {}.", to_string(role)));
  for (auto mate : teammates) {
    append_fact(0, FactKind::Identity, fmt::format("{} is also a Werewolf.", player_name(mate)));
  }
}

void ContextLedger::append_fact(int round, FactKind kind, std::string text) {
  facts_.push_back(FactEntry{next_seq_++, round, kind, std::move(text)});
}

void ContextLedger::guard_single(int round, FactKind kind) {
  if (!singles_.insert({round, kind}).second) {
    throw InternalError(fmt::format("duplicate fact append for player {} round {}", owner_.value, round));
  }
}

void ContextLedger::update_facts(const RoundEvents& events) {
  if (!alive_) return;
  const int t = events.round;
  if (events.night_result) guard_single(t, FactKind::NightResult);
  if (events.own_night_action) guard_single(t, FactKind::OwnNightAction);
  if (events.own_statement) guard_single(t, FactKind::OwnStatement);
  if (events.day_result) guard_single(t, FactKind::DayResult);
  for (const auto& vote : events.votes) {
    if (!votes_seen_.insert({t, vote.voter.value}).second) {
      throw InternalError(fmt::format("duplicate vote fact for player {} round {}", owner_.value, t));
    }
  }

  if (events.night_result) append_fact(t, FactKind::NightResult, night_result_fact(t, *events.night_result));
  if (events.own_night_action) append_fact(t, FactKind::OwnNightAction, *events.own_night_action);
  if (events.own_statement) append_fact(t, FactKind::OwnStatement, own_statement_fact(t, *events.own_statement));
  for (const auto& vote : events.votes) append_fact(t, FactKind::VoteRecord, vote_fact(t, vote));
  if (events.day_result) append_fact(t, FactKind::DayResult, day_result_fact(t, *events.day_result));
}

void ContextLedger::add_fact(int round, FactKind kind, std::string text) {
  if (!alive_) return;
  append_fact(round, kind, std::move(text));
}

int ContextLedger::receive_statement(StatementRecord statement) {
  if (statement.speaker == owner_) {
    throw InternalError("a player's own statement belongs to its facts");
  }
  statement.seq_id = next_seq_++;
  classified_.pending.push_back(std::move(statement));
  return classified_.pending.back().seq_id;
}

void ContextLedger::record_belief(const BeliefRecord& belief) {
  latest_[belief.target] = belief;
  for (int id : belief.evidence) cited_.insert(id);
}

int ContextLedger::reliability_of(PlayerId target) const {
  auto it = latest_.find(target);
  return it == latest_.end() ? kDefaultReliability : it->second.reliability;
}

std::optional<BeliefRecord> ContextLedger::latest_belief(PlayerId target) const {
  auto it = latest_.find(target);
  if (it == latest_.end()) return std::nullopt;
  return it->second;
}

std::map<PlayerId, int> ContextLedger::reliability_scores() const {
  std::map<PlayerId, int> scores;
  for (const auto& [target, belief] : latest_) scores[target] = belief.reliability;
  return scores;
}

ClassifiedStatements ContextLedger::provisional_split(
    const std::function<bool(const StatementRecord&)>& exclude) const {
  std::vector<StatementRecord> pool;
  auto take = [&](const std::vector<StatementRecord>& items) {
    for (const auto& item : items) {
      if (!exclude || !exclude(item)) pool.push_back(item);
    }
  };
  take(classified_.truths);
  take(classified_.falsehoods);
  take(classified_.pending);
  auto split = split_statements(pool, reliability_scores(), alpha_);
  ClassifiedStatements view{std::move(split.truths), std::move(split.falsehoods), {}};
  sort_by_seq(view.truths);
  sort_by_seq(view.falsehoods);
  return view;
}

void ContextLedger::commit_split() { classified_ = provisional_split(); }

void ContextLedger::end_round() {
  classified_ = prune_unmentioned(std::move(classified_), cited_);
  cited_.clear();
}

ContextDocument ContextLedger::context(const PlayerList& remaining) const {
  return context(remaining, classified_);
}

ContextDocument ContextLedger::context(const PlayerList& remaining,
                                       const ClassifiedStatements& view) const {
  ContextDocument doc;
  doc.remaining = remaining;
  doc.facts = facts_;
  doc.truths = view.truths;
  doc.falsehoods = view.falsehoods;
  doc.pending = view.pending;
  sort_by_seq(doc.pending);
  return doc;
}

}  // namespace werewolf
