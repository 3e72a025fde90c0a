#include "werewolf/llm_agent.hpp"

#include <fmt/format.h>

#include "werewolf/digest.hpp"

namespace werewolf {

LlmAgent::LlmAgent(std::shared_ptr<CompletionBackend> backend, std::string label)
    : backend_(std::move(backend)), label_(std::move(label)) {
  if (!backend_) throw ConfigError("LlmAgent needs a completion backend");
}

RawReply LlmAgent::respond(const ActionRequest& request) {
  CompletionCall call{request.prompt, sha256_hex(request.prompt), request.game_id, request.player};
  try {
    return RawReply{backend_->complete(call), {}};
  } catch (const GatewayError& e) {
    ++failures_;
    return RawReply{std::nullopt, fmt::format("gateway error ({}): {}", to_string(e.reason()), e.what())};
  }
}

}  // namespace werewolf
