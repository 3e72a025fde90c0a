#include "support.hpp"

#include <fmt/format.h>

namespace testkit {

std::vector<std::string> audit_prompts(const GameLog& log, const std::map<int, std::vector<nlohmann::json>>& players) {
  std::map<std::string, std::string> prompt_by_hash;
  for (const auto& [seat, records] : players) {
    for (const auto& r : records) {
      if (r.value("type", "") == "exchange" && r.contains("prompt")) {
        prompt_by_hash[r.at("prompt_hash").get<std::string>()] = r.at("prompt").get<std::string>();
      }
    }
  }

  // round -> rendered Sheriff statement line(s); round -> vote-fact lines of that round
  std::map<int, std::vector<std::string>> sheriff_lines;
  std::map<int, std::vector<std::string>> vote_lines;
  std::map<int, std::int64_t> day_result_seq;
  for (const auto& e : log.events()) {
    if (e.type == "statement" && e.payload.at("kind") == "sheriff") {
      StatementRecord s;
      s.speaker = e.payload.at("speaker").get<PlayerId>();
      s.round = e.round;
      s.text = e.payload.at("text").get<std::string>();
      s.kind = StatementKind::Sheriff;
      s.silent = e.payload.at("silent").get<bool>();
      sheriff_lines[e.round].push_back(s.render());
    } else if (e.type == "pseudo_vote" || e.type == "vote") {
      VoteFact v{e.payload.at("voter").get<PlayerId>(), std::nullopt};
      if (!e.payload.at("choice").is_null()) v.choice = e.payload.at("choice").get<PlayerId>();
      vote_lines[e.round].push_back(vote_fact(e.round, v));
    } else if (e.type == "day_result") {
      day_result_seq[e.round] = e.seq;
    }
  }

  std::vector<std::string> violations;
  Phase phase = Phase::Night;
  for (const auto& e : log.events()) {
    if (e.type == "phase") phase = e.payload.at("phase").get<Phase>();
    if (e.type != "agent_output") continue;
    const auto hash = e.payload.at("prompt_hash").get<std::string>();
    auto it = prompt_by_hash.find(hash);
    if (it == prompt_by_hash.end()) {
      violations.push_back(fmt::format("seq {}: prompt {} not recorded", e.seq, hash));
      continue;
    }
    const auto& prompt = it->second;
    if (phase == Phase::PseudoVote) {
      for (const auto& line : sheriff_lines[e.round]) {
        if (prompt.find(line) != std::string::npos) {
          violations.push_back(fmt::format("seq {}: pseudo-vote prompt contains the Sheriff statement", e.seq));
        }
      }
    }
    auto dr = day_result_seq.find(e.round);
    const bool before_result = dr == day_result_seq.end() || e.seq < dr->second;
    if (before_result) {
      for (const auto& line : vote_lines[e.round]) {
        if (prompt.find(line) != std::string::npos) {
          violations.push_back(fmt::format("seq {}: prompt shows a round-{} vote before the result", e.seq, e.round));
        }
      }
    }
    std::string lower = prompt;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower.find("pseudo") != std::string::npos) {
      violations.push_back(fmt::format("seq {}: prompt mentions pseudo-votes", e.seq));
    }
  }
  return violations;
}

ScriptedPolicy varied_policy() {
  ScriptedPolicy p;
  auto pick = [](const PlayerList& options, int k) { return options[static_cast<std::size_t>(k) % options.size()]; };
  p.night = [pick](const ActionRequest& r) { return pick(r.options, r.round + r.player.value); };
  p.vote = [pick](const ActionRequest& r) -> VoteChoice {
    if (r.options.empty() || (r.player.value + r.round) % 5 == 0) return std::nullopt;
    return pick(r.options, r.player.value * 3 + r.round);
  };
  p.pseudo_vote = [pick](const ActionRequest& r) -> VoteChoice {
    if (r.options.empty()) return std::nullopt;
    return pick(r.options, r.player.value + r.round);
  };
  p.sheriff_vote = [pick](const ActionRequest& r) -> VoteChoice {
    if (r.candidates.empty()) return std::nullopt;
    return pick(r.candidates, r.player.value);
  };
  p.order = [](const ActionRequest& r) { return r.round % 2 ? OrderSide::Left : OrderSide::Right; };
  p.statement = [](const ActionRequest& r) {
    return fmt::format("{} speaking in round {}; I have my doubts.", player_name(r.player), r.round);
  };
  p.reason = [](const ActionRequest& r) {
    static const RoleGuess guesses[] = {RoleGuess::Werewolf, RoleGuess::Villager, RoleGuess::Seer, RoleGuess::Uncertain};
    ReasonResult out;
    const int t = r.target ? r.target->value : 0;
    out.role = guesses[(r.player.value + t) % 4];
    out.confidence = 5 + (r.player.value * t + r.round) % 6;
    out.reasoning = "varied";
    for (const auto* bucket : {&r.context.truths, &r.context.falsehoods, &r.context.pending}) {
      for (const auto& s : *bucket) {
        if (s.seq_id % 2 == 0) out.evidence.push_back(s.seq_id);
      }
    }
    std::sort(out.evidence.begin(), out.evidence.end());
    return out;
  };
  return p;
}

}  // namespace testkit
