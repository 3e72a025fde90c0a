#include "werewolf/core.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace werewolf {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trimmed(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n\"'.");
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(" \t\r\n\"'.");
  return std::string(text.substr(first, last - first + 1));
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Werewolf: return "Werewolf";
    case Role::Villager: return "Villager";
    case Role::Seer: return "Seer";
    case Role::Guard: return "Guard";
  }
  return "?";
}

std::string_view to_string(RoleGuess guess) {
  switch (guess) {
    case RoleGuess::Werewolf: return "Werewolf";
    case RoleGuess::Seer: return "Seer";
    case RoleGuess::Guard: return "Guard";
    case RoleGuess::Villager: return "Villager";
    case RoleGuess::Uncertain: return "Uncertain";
  }
  return "?";
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Night: return "Night";
    case Phase::Announcement: return "Announcement";
    case Phase::Election: return "Election";
    case Phase::Discussion: return "Discussion";
    case Phase::PseudoVote: return "PseudoVote";
    case Phase::Voting: return "Voting";
    case Phase::Resolution: return "Resolution";
    case Phase::Ended: return "Ended";
  }
  return "?";
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::WerewolfWin: return "WerewolfWin";
    case Outcome::VillagerWin: return "VillagerWin";
    case Outcome::RoundCapReached: return "RoundCapReached";
    case Outcome::SheriffEliminated: return "SheriffEliminated";
    case Outcome::HumanEliminated: return "HumanEliminated";
    case Outcome::Void: return "Void";
  }
  return "?";
}

std::string_view to_string(SheriffMode mode) {
  switch (mode) {
    case SheriffMode::SecretAssign: return "secret-assign";
    case SheriffMode::Election: return "election";
    case SheriffMode::ElectionThenSwap: return "election-then-swap";
    case SheriffMode::ElectionOrVoid: return "election-or-void";
  }
  return "?";
}

std::string_view to_string(Checkpoint checkpoint) {
  switch (checkpoint) {
    case Checkpoint::Night: return "n";
    case Checkpoint::Order: return "d";
    case Checkpoint::Statement: return "s";
    case Checkpoint::PseudoVote: return "p";
    case Checkpoint::Vote: return "v";
  }
  return "?";
}

std::string_view to_string(OrderSide side) {
  return side == OrderSide::Left ? "Left" : "Right";
}

std::optional<Role> parse_role(std::string_view text) {
  const auto key = lowercase(trimmed(text));
  if (key == "werewolf") return Role::Werewolf;
  if (key == "villager") return Role::Villager;
  if (key == "seer") return Role::Seer;
  if (key == "guard") return Role::Guard;
  return std::nullopt;
}

std::optional<RoleGuess> parse_role_guess(std::string_view text) {
  const auto key = lowercase(trimmed(text));
  if (key == "werewolf") return RoleGuess::Werewolf;
  if (key == "seer") return RoleGuess::Seer;
  if (key == "guard" || key == "doctor") return RoleGuess::Guard;
  if (key == "villager") return RoleGuess::Villager;
  if (key == "uncertain" || key == "unknown") return RoleGuess::Uncertain;
  return std::nullopt;
}

std::optional<SheriffMode> parse_sheriff_mode(std::string_view text) {
  for (auto mode : {SheriffMode::SecretAssign, SheriffMode::Election, SheriffMode::ElectionThenSwap,
                    SheriffMode::ElectionOrVoid}) {
    if (to_string(mode) == text) return mode;
  }
  return std::nullopt;
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (auto outcome : {Outcome::WerewolfWin, Outcome::VillagerWin, Outcome::RoundCapReached,
                       Outcome::SheriffEliminated, Outcome::HumanEliminated, Outcome::Void}) {
    if (to_string(outcome) == text) return outcome;
  }
  return std::nullopt;
}

std::optional<Checkpoint> parse_checkpoint(std::string_view text) {
  for (auto cp : {Checkpoint::Night, Checkpoint::Order, Checkpoint::Statement,
                  Checkpoint::PseudoVote, Checkpoint::Vote}) {
    if (to_string(cp) == text) return cp;
  }
  return std::nullopt;
}

bool is_werewolf_team(Role role) { return role == Role::Werewolf; }

std::string player_name(PlayerId id) { return fmt::format("player_{}", id.value); }

std::string join_players(const PlayerList& players) {
  std::string out;
  for (std::size_t i = 0; i < players.size(); ++i) {
    if (i > 0) out += ", ";
    out += player_name(players[i]);
  }
  return out;
}

std::string vote_label(VoteChoice choice) {
  return choice ? player_name(*choice) : std::string("abstain");
}

void to_json(nlohmann::json& j, PlayerId id) { j = id.value; }

void from_json(const nlohmann::json& j, PlayerId& id) { id.value = j.get<int>(); }

}  // namespace werewolf
