#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "werewolf/core.hpp"
#include "werewolf/ledger.hpp"
#include "werewolf/rng.hpp"

namespace werewolf {

enum class RequestKind {
  Reason,
  NightKill,
  NightSee,
  NightProtect,
  Statement,
  SheriffStatement,
  Vote,
  PseudoVote,
  OrderChoice,
  Campaign,
  SheriffVote,
};

NLOHMANN_JSON_SERIALIZE_ENUM(RequestKind, {{RequestKind::Reason, "reason"},
                                           {RequestKind::NightKill, "night_kill"},
                                           {RequestKind::NightSee, "night_see"},
                                           {RequestKind::NightProtect, "night_protect"},
                                           {RequestKind::Statement, "statement"},
                                           {RequestKind::SheriffStatement, "sheriff_statement"},
                                           {RequestKind::Vote, "vote"},
                                           {RequestKind::PseudoVote, "pseudo_vote"},
                                           {RequestKind::OrderChoice, "order_choice"},
                                           {RequestKind::Campaign, "campaign"},
                                           {RequestKind::SheriffVote, "sheriff_vote"}})

std::string_view to_string(RequestKind kind);
bool is_choice_kind(RequestKind kind);
bool is_night_kind(RequestKind kind);
bool is_vote_kind(RequestKind kind);
bool is_statement_kind(RequestKind kind);

struct ActionRequest {
  RequestKind kind = RequestKind::Vote;
  int round = 1;
  PlayerId player;
  Role role = Role::Villager;
  std::optional<PlayerId> sheriff;  // public knowledge only
  PlayerList options;               // legal player choices, ascending
  bool abstain_allowed = false;
  std::optional<PlayerId> target;   // Reason
  Checkpoint checkpoint = Checkpoint::Night;
  PlayerList candidates;            // SheriffVote
  std::optional<PlayerId> left_neighbor;   // OrderChoice
  std::optional<PlayerId> right_neighbor;  // OrderChoice
  ContextDocument context;
  std::string language = "English";
  std::string game_id;
  std::string prompt;  // filled by render_prompt before dispatch
};

struct ReasonResult {
  RoleGuess role = RoleGuess::Uncertain;
  int confidence = kMinConfidence;
  std::string reasoning;
  std::vector<int> evidence;
};

struct AgentResponse {
  RequestKind kind = RequestKind::Vote;
  std::string reasoning;
  VoteChoice choice;                   // choice kinds; nullopt = abstain
  std::string statement;               // statement kinds
  std::optional<ReasonResult> reason;  // Reason; empty when the update is skipped
  bool fallback = false;

  nlohmann::json to_json() const;
};

struct ParseResult {
  std::optional<AgentResponse> response;
  std::string error;

  bool valid() const { return response.has_value(); }
};

// Raw agent output. An empty text means generation failed (with `error` saying why).
struct RawReply {
  std::optional<std::string> text;
  std::string error;
};

enum class ObservationKind { NightResult, VoteResult, Statement, System, Private };

NLOHMANN_JSON_SERIALIZE_ENUM(ObservationKind, {{ObservationKind::NightResult, "night-result"},
                                               {ObservationKind::VoteResult, "vote-result"},
                                               {ObservationKind::Statement, "statement"},
                                               {ObservationKind::System, "system"},
                                               {ObservationKind::Private, "private"}})

// Seat-visible information pushed to agents as the game unfolds.
struct Observation {
  int round = 0;
  ObservationKind kind = ObservationKind::System;
  std::string text;
  std::optional<PlayerId> speaker;
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual RawReply respond(const ActionRequest& request) = 0;
  virtual void observe(PlayerId /*seat*/, const Observation& /*observation*/) {}
  virtual std::string describe() const = 0;
};

// The [Game Rule] block for a seven-player table.
std::string game_rules_text();

// [Game Rule] + [Contextual Information] + [Action Instruction].
std::string render_prompt(const ActionRequest& request);
std::string render_instruction(const ActionRequest& request);

// Tolerant extraction of the first JSON object (code fences allowed) and validation
// against the request's kind and options.
ParseResult parse_response(const std::string& raw, const ActionRequest& request);

// Resolves "player_3", "Player 3", "vote for player_3" or "3" to a player id.
std::optional<PlayerId> parse_player_reference(const std::string& text);
bool is_abstain_text(const std::string& text);

// The public text recorded when a player's statement is unusable.
std::string silence_text(PlayerId player);

// Deterministic per rng stream: night kinds draw uniformly from the options, statements
// become silence, vote kinds abstain, order choice defaults to Right, reasoning is skipped.
AgentResponse apply_fallback(const ActionRequest& request, SeededRng& rng);

// Serializes a response into the JSON document the templates ask for.
std::string response_document(const ActionRequest& request, const AgentResponse& response);

// Deterministic test substrate: each request kind is answered by a pure function of the
// request. Kinds without a handler raise PolicyError.
struct ScriptedPolicy {
  std::function<PlayerId(const ActionRequest&)> night;
  std::function<VoteChoice(const ActionRequest&)> vote;
  std::function<VoteChoice(const ActionRequest&)> pseudo_vote;  // defaults to `vote`
  std::function<VoteChoice(const ActionRequest&)> sheriff_vote;
  std::function<OrderSide(const ActionRequest&)> order;
  std::function<std::string(const ActionRequest&)> statement;
  std::function<ReasonResult(const ActionRequest&)> reason;
  std::set<RequestKind> malformed;  // these kinds always emit unparseable text
  std::set<RequestKind> silent;     // these kinds report a generation failure

  // Lowest-id choices everywhere, neutral reasoning citing every visible statement,
  // a plain statement, Right for the order.
  static ScriptedPolicy lowest_id();
};

class ScriptedAgent : public Agent {
 public:
  explicit ScriptedAgent(ScriptedPolicy policy, std::string name = "scripted");

  RawReply respond(const ActionRequest& request) override;
  std::string describe() const override { return name_; }

 private:
  ScriptedPolicy policy_;
  std::string name_;
};

// Wraps another agent and keeps a copy of every request it saw.
class RecordingAgent : public Agent {
 public:
  explicit RecordingAgent(std::shared_ptr<Agent> inner) : inner_(std::move(inner)) {}

  RawReply respond(const ActionRequest& request) override;
  void observe(PlayerId seat, const Observation& observation) override;
  std::string describe() const override { return inner_->describe(); }

  std::vector<ActionRequest> requests() const;
  std::vector<Observation> observations() const;

 private:
  std::shared_ptr<Agent> inner_;
  mutable std::mutex mutex_;
  std::vector<ActionRequest> requests_;
  std::vector<Observation> observations_;
};

}  // namespace werewolf
