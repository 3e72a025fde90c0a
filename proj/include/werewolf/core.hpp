#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace werewolf {

enum class Role { Werewolf, Villager, Seer, Guard };

// What a player believes another player is. Guard covers the template's "Doctor".
enum class RoleGuess { Werewolf, Seer, Guard, Villager, Uncertain };

struct PlayerId {
  int value = 0;

  friend auto operator<=>(PlayerId, PlayerId) = default;
};

using PlayerList = std::vector<PlayerId>;

// A vote either names a player or abstains (std::nullopt).
using VoteChoice = std::optional<PlayerId>;

enum class Phase { Night, Announcement, Election, Discussion, PseudoVote, Voting, Resolution, Ended };

enum class Outcome {
  WerewolfWin,
  VillagerWin,
  RoundCapReached,
  SheriffEliminated,
  HumanEliminated,
  Void,
};

enum class SheriffMode { SecretAssign, Election, ElectionThenSwap, ElectionOrVoid };

enum class TiePolicy { NoElimination, SeededRandom };

// Reasoning moments inside a round: pre-night, the Sheriff's pre-order step,
// pre-statement, the pseudo-vote step and pre-vote.
enum class Checkpoint { Night, Order, Statement, PseudoVote, Vote };

enum class OrderSide { Left, Right };

std::string_view to_string(Role role);
std::string_view to_string(RoleGuess guess);
std::string_view to_string(Phase phase);
std::string_view to_string(Outcome outcome);
std::string_view to_string(SheriffMode mode);
std::string_view to_string(Checkpoint checkpoint);
std::string_view to_string(OrderSide side);

std::optional<Role> parse_role(std::string_view text);
std::optional<RoleGuess> parse_role_guess(std::string_view text);
std::optional<SheriffMode> parse_sheriff_mode(std::string_view text);
std::optional<Outcome> parse_outcome(std::string_view text);
std::optional<Checkpoint> parse_checkpoint(std::string_view text);

bool is_werewolf_team(Role role);

// "player_3"
std::string player_name(PlayerId id);
// "player_1, player_4, player_6"
std::string join_players(const PlayerList& players);
std::string vote_label(VoteChoice choice);

// Errors. Each maps to one failure family named by the module contracts.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

struct PolicyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ReplayMismatch : public std::runtime_error {
 public:
  ReplayMismatch(std::int64_t seq, const std::string& what)
      : std::runtime_error(what), seq_(seq) {}

  std::int64_t seq() const { return seq_; }

 private:
  std::int64_t seq_;
};

void to_json(nlohmann::json& j, PlayerId id);
void from_json(const nlohmann::json& j, PlayerId& id);

NLOHMANN_JSON_SERIALIZE_ENUM(Role, {{Role::Werewolf, "Werewolf"},
                                    {Role::Villager, "Villager"},
                                    {Role::Seer, "Seer"},
                                    {Role::Guard, "Guard"}})

NLOHMANN_JSON_SERIALIZE_ENUM(RoleGuess, {{RoleGuess::Werewolf, "Werewolf"},
                                         {RoleGuess::Seer, "Seer"},
                                         {RoleGuess::Guard, "Guard"},
                                         {RoleGuess::Villager, "Villager"},
                                         {RoleGuess::Uncertain, "Uncertain"}})

NLOHMANN_JSON_SERIALIZE_ENUM(Phase, {{Phase::Night, "Night"},
                                     {Phase::Announcement, "Announcement"},
                                     {Phase::Election, "Election"},
                                     {Phase::Discussion, "Discussion"},
                                     {Phase::PseudoVote, "PseudoVote"},
                                     {Phase::Voting, "Voting"},
                                     {Phase::Resolution, "Resolution"},
                                     {Phase::Ended, "Ended"}})

NLOHMANN_JSON_SERIALIZE_ENUM(Outcome, {{Outcome::WerewolfWin, "WerewolfWin"},
                                       {Outcome::VillagerWin, "VillagerWin"},
                                       {Outcome::RoundCapReached, "RoundCapReached"},
                                       {Outcome::SheriffEliminated, "SheriffEliminated"},
                                       {Outcome::HumanEliminated, "HumanEliminated"},
                                       {Outcome::Void, "Void"}})

NLOHMANN_JSON_SERIALIZE_ENUM(SheriffMode, {{SheriffMode::SecretAssign, "secret-assign"},
                                           {SheriffMode::Election, "election"},
                                           {SheriffMode::ElectionThenSwap, "election-then-swap"},
                                           {SheriffMode::ElectionOrVoid, "election-or-void"}})

NLOHMANN_JSON_SERIALIZE_ENUM(TiePolicy, {{TiePolicy::NoElimination, "no-elimination"},
                                         {TiePolicy::SeededRandom, "seeded-random"}})

NLOHMANN_JSON_SERIALIZE_ENUM(Checkpoint, {{Checkpoint::Night, "n"},
                                          {Checkpoint::Order, "d"},
                                          {Checkpoint::Statement, "s"},
                                          {Checkpoint::PseudoVote, "p"},
                                          {Checkpoint::Vote, "v"}})

NLOHMANN_JSON_SERIALIZE_ENUM(OrderSide, {{OrderSide::Left, "Left"}, {OrderSide::Right, "Right"}})

}  // namespace werewolf

template <>
struct std::hash<werewolf::PlayerId> {
  std::size_t operator()(werewolf::PlayerId id) const noexcept {
    return std::hash<int>{}(id.value);
  }
};
