#pragma once

#include <string>

#include "werewolf/gateway.hpp"

namespace werewolf {

// A stand-in language model: a pure function of the prompt text that reads the action
// instruction and answers with a plausible JSON document. A small, fixed share of
// replies is malformed so the invalid-output path gets exercised.
std::string heuristic_reply(const std::string& prompt);

class HeuristicBackend : public CompletionBackend {
 public:
  std::string complete(const CompletionCall& call) override { return heuristic_reply(call.prompt); }
  std::string describe() const override { return "heuristic"; }
};

}  // namespace werewolf
