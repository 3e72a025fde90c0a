#include "werewolf/replay.hpp"

#include <fmt/format.h>

#include "werewolf/digest.hpp"

namespace werewolf {

std::shared_ptr<ReplayAgent::Script> ReplayAgent::script_from(const GameLog& log) {
  auto script = std::make_shared<Script>();
  std::map<int, std::map<int, std::string>> failure_reasons;  // seat -> attempt -> reason
  for (const auto& e : log.events()) {
    if (e.type == "invalid_output") {
      failure_reasons[e.payload.at("player").get<int>()][e.payload.at("attempt").get<int>()] =
          e.payload.at("reason").get<std::string>();
      continue;
    }
    if (e.type != "agent_output") continue;
    const int seat = e.payload.at("player").get<int>();
    const auto kind = e.payload.at("kind").get<RequestKind>();
    const auto hash = e.payload.at("prompt_hash").get<std::string>();
    int attempt = 0;
    for (const auto& raw : e.payload.at("attempts")) {
      ++attempt;
      Entry entry{e.seq, kind, hash, {}};
      if (raw.is_string()) {
        entry.reply.text = raw.get<std::string>();
      } else {
        entry.reply.error = failure_reasons[seat][attempt];
      }
      script->per_seat[seat].push_back(std::move(entry));
    }
    failure_reasons.erase(seat);
  }
  return script;
}

RawReply ReplayAgent::respond(const ActionRequest& request) {
  auto& entries = script_->per_seat[request.player.value];
  auto& cursor = script_->cursor[request.player.value];
  if (cursor >= entries.size()) {
    throw ReplayMismatch(0, fmt::format("{} was asked for more outputs than were recorded",
                                        player_name(request.player)));
  }
  const auto& entry = entries[cursor++];
  if (entry.kind != request.kind) {
    throw ReplayMismatch(entry.seq, fmt::format("seq {}: recorded {} but the engine asked for {}", entry.seq,
                                                to_string(entry.kind), to_string(request.kind)));
  }
  if (entry.prompt_hash != sha256_hex(request.prompt)) {
    throw ReplayMismatch(entry.seq, fmt::format("seq {}: prompt hash differs", entry.seq));
  }
  return entry.reply;
}

ReplayResult replay(const GameLog& log) {
  if (log.partial) throw ReplayMismatch(log.last_seq() + 1, "log is partial and cannot be replayed");
  auto config = GameConfig::from_json(log.header.config);
  auto script = ReplayAgent::script_from(log);

  AgentSet agents;
  for (int i = 1; i <= static_cast<int>(log.header.seat_agents.size()); ++i) {
    agents.seats[PlayerId{i}] =
        std::make_shared<ReplayAgent>(script, log.header.seat_agents[static_cast<std::size_t>(i - 1)]);
  }
  for (const auto* e : log.of_type("rebind")) {
    agents.tested = std::make_shared<ReplayAgent>(script, e->payload.at("agent").get<std::string>());
  }

  MemorySink sink;
  auto result = run_game(config, agents, sink);

  const auto& a = log.header;
  const auto& b = result.log.header;
  if (a.game_id != b.game_id || a.config != b.config || a.seed != b.seed || a.roles != b.roles ||
      a.seat_agents != b.seat_agents || a.setting != b.setting) {
    throw ReplayMismatch(0, "header differs");
  }
  const auto& want = log.events();
  const auto& got = result.log.events();
  const auto n = std::min(want.size(), got.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(want[i] == got[i])) {
      throw ReplayMismatch(want[i].seq, fmt::format("first divergence at seq {} ({} vs {})", want[i].seq,
                                                    want[i].type, got[i].type));
    }
  }
  if (want.size() != got.size()) {
    const auto seq = static_cast<std::int64_t>(n) + 1;
    throw ReplayMismatch(seq, fmt::format("event count differs ({} recorded, {} replayed)", want.size(), got.size()));
  }
  return ReplayResult{std::move(result.log), std::move(result.state)};
}

}  // namespace werewolf
