#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "werewolf/engine.hpp"
#include "werewolf/game_log.hpp"

namespace werewolf {

// Answers requests with the raw attempts recorded in a game log, seat by seat, and
// checks that each request's prompt hashes to the recorded one.
class ReplayAgent : public Agent {
 public:
  struct Entry {
    std::int64_t seq = 0;  // the agent_output event
    RequestKind kind = RequestKind::Vote;
    std::string prompt_hash;
    RawReply reply;
  };
  struct Script {
    std::map<int, std::vector<Entry>> per_seat;
    std::map<int, std::size_t> cursor;
  };

  ReplayAgent(std::shared_ptr<Script> script, std::string label)
      : script_(std::move(script)), label_(std::move(label)) {}

  static std::shared_ptr<Script> script_from(const GameLog& log);

  RawReply respond(const ActionRequest& request) override;
  std::string describe() const override { return label_; }

 private:
  std::shared_ptr<Script> script_;
  std::string label_;
};

struct ReplayResult {
  GameLog log;
  GameState state;
};

// Re-runs the recorded game with its own agent outputs and compares the regenerated log
// event by event. Throws ReplayMismatch naming the first differing seq (0 = header).
ReplayResult replay(const GameLog& log);

}  // namespace werewolf
