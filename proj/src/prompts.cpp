#include <fmt/format.h>

#include "werewolf/agent.hpp"

namespace werewolf {

namespace {

constexpr std::string_view kGameRules =
    "You are playing a game called Werewolf with some other players. This game is based on text "
    "conversations and involves seven players: player_1, player_2, player_3, player_4, player_5, "
    "player_6, and player_7. Here are the game rules:\n"
    "\n"
    "Roles: The moderator, who is also the host, organizes the game, and you must follow their "
    "instructions correctly. Do not communicate with the moderator. There are seven roles in the "
    "game, including two Werewolves, three Villagers, one Seer, and one Guard. At the beginning of "
    "the game, each player is assigned a hidden role, which categorizes them as either a Werewolf "
    "or a member of the Village (which includes the Seer, the Guard, and the Villagers). The game "
    "then proceeds through alternating night and day rounds until one side emerges victorious.\n"
    "\n"
    "During the night round: The Werewolves identify each other and select one player to "
    "eliminate; the Seer chooses one player to determine if they are a Werewolf; the Guard selects "
    "one player, including themselves, to protect without knowing who the Werewolves have chosen; "
    "the Villagers take no action.\n"
    "\n"
    "During the day round: There are three phases--announcement, discussion, and voting--which are "
    "conducted in sequence.\n"
    "In the announcement phase, the results of the previous night are disclosed to all players. If "
    "player_i was killed and not protected, the announcement will be \"player_i was killed.\" If a "
    "player was killed but protected, the announcement will be \"No player was killed.\"\n"
    "\n"
    "Only on the first day is there an election phase. In this phase, you can decide whether to "
    "nominate yourself for Sheriff based on your role. Players nominated for Sheriff explain their "
    "reasons in turn. Each player then votes for one Sheriff nominee or chooses not to vote. The "
    "Sheriff is a unique role that does not interfere with a player's primary role. The elected "
    "Sheriff has the power to decide which player begins the next discussion round and, as the "
    "final speaker, can summarize the discussion to persuade others to vote in agreement with "
    "them.\n"
    "In the discussion phase, each remaining player speaks once, in the order determined by the "
    "Sheriff, to debate who might be a Werewolf.\n"
    "\n"
    "In the voting phase, each player votes to eliminate one player or chooses not to vote. The "
    "player with the most votes is removed, and the game progresses to the next night's round.\n"
    "\n"
    "The Werewolves win if their number equals that of the remaining Seer, Guard, and Villagers. "
    "The Seer, Guard, and Villagers win by eliminating all the Werewolves.";

std::string closing(const ActionRequest& r, bool caution) {
  auto line = fmt::format("Ensure the response is in {} and can be parsed by Python json.loads.", r.language);
  if (caution) line += " Please be cautious about revealing your role in this phase.";
  return line;
}

std::string action_format(const std::string& action_hint) {
  return fmt::format(
      "You should only respond in JSON format as described below.\n"
      "Response Format:\n"
      "{{\n"
      "    \"reasoning\": \"reason about the current situation\",\n"
      "    \"action\": \"{}\"\n"
      "}}\n",
      action_hint);
}

std::string statement_format(std::string_view reasoning_hint) {
  return fmt::format(
      "You should only respond in JSON format as described below.\n"
      "Response Format:\n"
      "{{\n"
      "    \"reasoning\": \"{}\",\n"
      "    \"statement\": \"your statement that will be public to all players\"\n"
      "}}\n",
      reasoning_hint);
}

std::string reasoning_time(const ActionRequest& r) {
  switch (r.checkpoint) {
    case Checkpoint::Night: return fmt::format("night {} round", r.round);
    case Checkpoint::Order:
    case Checkpoint::Statement: return fmt::format("day {} discussion phase", r.round);
    case Checkpoint::PseudoVote:
    case Checkpoint::Vote: return fmt::format("day {} voting phase", r.round);
  }
  return {};
}

std::string night_instruction(const ActionRequest& r, std::string_view verb, std::string_view lead) {
  const auto options = join_players(r.options);
  return fmt::format(
             "Now it is night {} round. As {} and a {}, you should choose one player to {}. {}: {}.\n",
             r.round, player_name(r.player), to_string(r.role), verb, lead, options) +
         action_format(fmt::format("choose one from {}", options)) + closing(r, false);
}

std::string vote_options(const ActionRequest& r) {
  return r.options.empty() ? std::string("do no vote") : "do no vote, " + join_players(r.options);
}

}  // namespace

std::string game_rules_text() { return std::string(kGameRules); }

std::string render_instruction(const ActionRequest& r) {
  const auto me = player_name(r.player);
  const auto role = to_string(r.role);
  switch (r.kind) {
    case RequestKind::NightKill:
      return night_instruction(r, "kill",
                               "You should first reason about the current situation and then choose "
                               "one of the following actions");
    case RequestKind::NightSee:
      return night_instruction(r, "see",
                               "You should first reason about the current situation, then choose one "
                               "from the following actions");
    case RequestKind::NightProtect:
      return night_instruction(r, "protect",
                               "You should first reason about the current situation, then choose one "
                               "from the following actions");
    case RequestKind::Statement:
    case RequestKind::SheriffStatement: {
      auto text = fmt::format(
          "Now it is day {} discussion phase and it is your turn to speak. As {} and a {}, before "
          "speaking to the other players, you should first reason the current situation only to "
          "yourself, and then speak to all other players.",
          r.round, me, role);
      if (r.kind == RequestKind::SheriffStatement) {
        text += " As the Sheriff, you can summarize the discussion and provide advice for voting.";
      }
      return text + "\n" + statement_format("reason about the current situation") + closing(r, true);
    }
    case RequestKind::Vote:
    case RequestKind::PseudoVote: {
      const auto options = vote_options(r);
      std::string lead =
          r.role == Role::Werewolf
              ? fmt::format("Now it is day {} voting phase, you should vote to eliminate one player or "
                            "do not vote to maximize the Werewolves' benefit.",
                            r.round)
              : fmt::format("Now it is day {} voting phase, you should vote to eliminate one player "
                            "that is most likely to be a Werewolf or do not vote.",
                            r.round);
      return lead +
             fmt::format(" As {} and a {}, you should first reason about the current situation, and "
                         "then choose from the following actions: {}.\n",
                         me, role, options) +
             action_format(fmt::format("choose one from {}", options)) + closing(r, false);
    }
    case RequestKind::OrderChoice:
      return fmt::format(
                 "Now it is day {} discussion phase and you are the Sheriff. As {}, a {} and the "
                 "Sheriff, you should first reason the current situation only to yourself, and then "
                 "decide on the first player to speak.\n",
                 r.round, me, role) +
             action_format(fmt::format("choose one from {}", join_players(r.options))) +
             closing(r, false);
    case RequestKind::Reason: {
      if (!r.target) throw InternalError("reason request without a target");
      const auto target = player_name(*r.target);
      return fmt::format(
                 "Now it is {}, As {} and a {}, you should reflect on your previous deduction and "
                 "reconsider the hidden roles of {}. You should provide your reasoning, rate your "
                 "confidence, and cite all key information as evidence to support your deduction. ",
                 reasoning_time(r), me, role, target) +
             fmt::format(
                 "You should only respond in JSON format as described below.\n"
                 "Response Format:\n"
                 "{{\n"
                 "    \"{}\": {{\n"
                 "        \"role\": select the most likely hidden role of this player from "
                 "[\"Werewolf\", \"Seer\", \"Doctor\", \"Villager\", \"Uncertain\"],\n"
                 "        \"reasoning\": your reflection and reasoning,\n"
                 "        \"confidence\": use an integer from 5 (pure guess) to 10 (absolutely sure) "
                 "to rate the confidence of your deduction,\n"
                 "        \"evidence\": list of integers that cite the key information\n"
                 "    }}\n"
                 "}}\n",
                 target) +
             closing(r, false);
    }
    case RequestKind::Campaign:
      return fmt::format(
                 "Now it is day 1 election phase, you run for the Sheriff, who can decide the order of "
                 "statements, summarize the discussion, and provide advice for voting. As {} and a {}, "
                 "you should first reason about the current situation, and then explain why you are "
                 "qualified to be the Sheriff.\n",
                 me, role) +
             statement_format("reason about the current situation only to yourself") + closing(r, true);
    case RequestKind::SheriffVote:
      return fmt::format(
                 "Now it is day 1 election phase, {} are running for the Sheriff, who can decide the "
                 "order of statements, summarize the discussion, and provide advice for voting. As {} "
                 "and a {}, you should first reason about the current situation, and then vote for a "
                 "player to be the Sheriff or choose not to vote to maximize the interests of your "
                 "team. You should choose from the following actions: do no vote, {}.\n",
                 join_players(r.candidates), me, role, join_players(r.candidates)) +
             action_format("vote for player_i") + closing(r, false);
  }
  throw InternalError("unknown request kind");
}

std::string render_prompt(const ActionRequest& request) {
  return game_rules_text() + "\n\n" + request.context.render() + "\n" + render_instruction(request);
}

}  // namespace werewolf
