#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "werewolf/agent.hpp"
#include "werewolf/gateway.hpp"

namespace werewolf {

// Sends the rendered prompt to a completion backend. Gateway errors come back as a
// failed RawReply so the engine's retry/fallback path handles them.
class LlmAgent : public Agent {
 public:
  LlmAgent(std::shared_ptr<CompletionBackend> backend, std::string label);

  RawReply respond(const ActionRequest& request) override;
  std::string describe() const override { return label_; }

  std::int64_t gateway_failures() const { return failures_.load(); }

 private:
  std::shared_ptr<CompletionBackend> backend_;
  std::string label_;
  std::atomic<std::int64_t> failures_{0};
};

}  // namespace werewolf
