#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "werewolf/agent.hpp"
#include "werewolf/core.hpp"
#include "werewolf/game_log.hpp"
#include "werewolf/ledger.hpp"
#include "werewolf/rng.hpp"

namespace werewolf {

inline constexpr int kDefaultPlayers = 7;
inline constexpr int kDefaultMaxRounds = 6;

// The fixed seven-seat role multiset.
std::vector<Role> standard_roles();

inline const std::string kSheriffAnnouncementTail =
    "was selected as the Sheriff, who can determine the order of statements, summarize the "
    "discussion, and provide advice for voting at last.";

std::string sheriff_announcement(PlayerId sheriff);
std::string night_announcement(std::optional<PlayerId> death);
std::string day_announcement(std::optional<PlayerId> eliminated);

struct GameConfig {
  int n_players = kDefaultPlayers;
  int max_rounds = kDefaultMaxRounds;
  int alpha = kDefaultAlpha;
  std::uint64_t seed = 0;
  int repeat = 0;  // selects the play stream; roles depend on `seed` alone
  std::map<int, std::string> seat_models;
  SheriffMode sheriff_mode = SheriffMode::SecretAssign;
  TiePolicy tie_policy = TiePolicy::NoElimination;
  std::string language = "English";
  std::string game_id = "game";
  std::string setting = "custom";

  bool stop_on_sheriff_death = false;
  bool sheriff_succession = false;
  std::optional<PlayerId> human_seat;
  bool stop_on_human_death = false;
  int election_candidates = 3;
  int retries = 1;
  bool log_full_prompts = true;  // player logs keep full prompt text, else only hashes

  void validate() const;
  nlohmann::json to_json() const;
  static GameConfig from_json(const nlohmann::json& j);
};

struct GameState {
  int round = 1;
  Phase phase = Phase::Night;
  std::vector<Role> roles;  // index 0 is player_1
  std::set<PlayerId> alive_night;
  std::set<PlayerId> alive_day;
  std::optional<PlayerId> sheriff;
  std::optional<PlayerId> first_sheriff;
  std::optional<PlayerId> designate;    // secret-assign Sheriff-designate
  std::optional<PlayerId> tested_seat;  // election-or-void
  PlayerList statement_order;
  std::optional<Outcome> outcome;

  int n_players() const { return static_cast<int>(roles.size()); }
  Role role_of(PlayerId p) const;
  PlayerList players() const;
  PlayerList alive() const { return PlayerList(alive_day.begin(), alive_day.end()); }
  bool is_alive(PlayerId p) const { return alive_day.contains(p); }
  int alive_werewolves() const;
  int alive_villagers() const;
  PlayerList werewolves() const;
};

// Role shuffle from the seed's role stream, designate/tested seat from the same stream.
GameState init_game(const GameConfig& config);

struct NightOutcome {
  std::optional<PlayerId> kill_target;
  std::optional<PlayerId> protect_target;
  std::optional<PlayerId> seer_target;
  std::optional<Role> seen_role;
  std::optional<PlayerId> death;
  std::string announcement;
};

// death = kill target unless protected; announcement follows.
NightOutcome resolve_night(std::optional<PlayerId> kill, std::optional<PlayerId> protect,
                           std::optional<PlayerId> see, std::optional<Role> seen_role);

enum class VoteKind { Pseudo, Final, SheriffElection };

struct VoteRecord {
  PlayerId voter;
  VoteChoice choice;
  VoteKind kind = VoteKind::Final;
};

struct DayOutcome {
  std::map<PlayerId, int> tally;
  int abstentions = 0;
  std::optional<PlayerId> eliminated;
  std::string announcement;
};

// Strict plurality. On a tie, NoElimination removes nobody; SeededRandom draws among the tied.
DayOutcome tally_votes(const std::vector<VoteRecord>& votes, TiePolicy policy, SeededRng* rng);

// Left walks down the ids, Right up, cyclically over the alive seats; the Sheriff goes last.
PlayerList determine_statement_order(const std::set<PlayerId>& alive, PlayerId sheriff, OrderSide side);

// Nearest alive seat below (Left) or above (Right) the Sheriff, cyclically.
PlayerId neighbor(const std::set<PlayerId>& alive, PlayerId sheriff, OrderSide side);

// Rule outcome only: VillagerWin when no Werewolf is alive, WerewolfWin when the alive
// Werewolves equal the alive non-Werewolves.
std::optional<Outcome> rule_winner(const std::vector<Role>& alive_roles);

// Rule outcome first, then the configured stop conditions.
std::optional<Outcome> check_win(const GameState& state, const GameConfig& config,
                                 std::optional<PlayerId> dead_sheriff = std::nullopt,
                                 std::optional<PlayerId> dead_human = std::nullopt);

// Highest reliability in the dead Sheriff's latest beliefs among alive players, ties to the
// lowest id; with no usable beliefs, the lowest alive id.
PlayerId succeed_sheriff(const std::set<PlayerId>& alive, const std::map<PlayerId, BeliefRecord>& beliefs);

// Which agent answers for each seat. `tested` is bound into the Sheriff seat by
// election-then-swap.
struct AgentSet {
  std::map<PlayerId, std::shared_ptr<Agent>> seats;
  std::shared_ptr<Agent> tested;

  static AgentSet uniform(std::shared_ptr<Agent> agent, int n_players = kDefaultPlayers);
  Agent& at(PlayerId seat) const;
};

struct GameResult {
  GameLog log;
  GameState state;
  int gateway_failures = 0;
  int invalid_outputs = 0;
};

class Game {
 public:
  explicit Game(GameConfig config);

  const GameConfig& config() const { return config_; }
  const GameState& state() const { return state_; }
  const ContextLedger& ledger(PlayerId p) const { return ledgers_.at(p.value - 1); }

  // Runs to completion. Log events go to `sink` as they are appended.
  GameResult run(AgentSet agents, LogSink& sink);

 private:
  void emit(std::string type, nlohmann::json payload, std::optional<PlayerId> actor = std::nullopt);
  void set_phase(Phase phase);
  void observe(PlayerId seat, ObservationKind kind, std::string text, std::optional<PlayerId> speaker = {});
  void observe_all(ObservationKind kind, const std::string& text, std::optional<PlayerId> speaker = {});

  ActionRequest base_request(RequestKind kind, PlayerId player) const;
  AgentResponse ask(ActionRequest request);
  void reason_about(PlayerId observer, PlayerId target, Checkpoint checkpoint,
                    const ClassifiedStatements* view = nullptr);
  void reason_all(PlayerId observer, Checkpoint checkpoint);
  VoteChoice vote_request(PlayerId voter, RequestKind kind, const ClassifiedStatements* view = nullptr);
  void publish_statement(PlayerId speaker, StatementKind kind, const AgentResponse& response);

  bool play_round();
  void run_night();
  void run_sheriff_selection();
  void run_order_step();
  void run_discussion();
  void run_pseudo_votes();
  void run_sheriff_statement();
  void run_voting_and_resolution();
  void handle_deaths(std::optional<PlayerId> died);
  bool finish_if(std::optional<Outcome> outcome);

  GameConfig config_;
  GameState state_;
  SeededRng play_rng_;
  std::vector<ContextLedger> ledgers_;
  AgentSet agents_;
  LogSink* sink_ = nullptr;
  GameLog log_;
  int gateway_failures_ = 0;
  int invalid_outputs_ = 0;
};

// Convenience wrapper: Game(config).run(agents, sink).
GameResult run_game(const GameConfig& config, AgentSet agents, LogSink& sink);

}  // namespace werewolf
