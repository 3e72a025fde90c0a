#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "werewolf/core.hpp"

namespace werewolf {

struct ModelEndpoint {
  std::string name = "default";
  std::string base_url;     // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key_env;  // the key itself never leaves the environment
  int max_tokens = 1024;
  double temperature = 0.7;
  double timeout_seconds = 60.0;
  double requests_per_minute = 0.0;  // 0 = unlimited
  int max_retries = 3;
  double backoff_initial_seconds = 1.0;
  double backoff_max_seconds = 30.0;

  nlohmann::json to_json() const;  // no key material
};

enum class GatewayReason { Timeout, Http, RateLimited, Transport, MissingKey, BadResponse, ReplayMiss };

std::string_view to_string(GatewayReason reason);

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayReason reason, const std::string& what)
      : std::runtime_error(what), reason_(reason) {}

  GatewayReason reason() const { return reason_; }

 private:
  GatewayReason reason_;
};

// What a backend needs to produce one completion. The game/seat/hash triple is the
// replay key.
struct CompletionCall {
  std::string prompt;
  std::string prompt_hash;
  std::string game_id;
  PlayerId seat;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const CompletionCall& call) = 0;
  virtual std::string describe() const = 0;
};

struct AttemptRecord {
  int attempt = 0;
  int http_status = 0;  // 0 when no response arrived
  std::string reason;   // empty on success
  double latency_ms = 0.0;
};

// Token bucket with capacity 1 refilling at rate/min.
class RateLimiter {
 public:
  explicit RateLimiter(double per_minute) : per_minute_(per_minute) {}
  void acquire();

 private:
  double per_minute_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

// OpenAI-compatible chat completions over HTTP(S).
class HttpGateway : public CompletionBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpGateway(ModelEndpoint endpoint, Sleeper sleeper = {});

  std::string complete(const CompletionCall& call) override;
  std::string describe() const override { return endpoint_.name + ":" + endpoint_.model; }

  const ModelEndpoint& endpoint() const { return endpoint_; }
  std::vector<AttemptRecord> attempts() const;
  std::int64_t requests_sent() const { return sent_.load(); }

  static nlohmann::json request_body(const ModelEndpoint& endpoint, const std::string& prompt);
  static std::string extract_content(const std::string& body);

 private:
  std::string complete_once(const std::string& body, int attempt);
  std::chrono::milliseconds backoff(int attempt) const;

  ModelEndpoint endpoint_;
  Sleeper sleeper_;
  RateLimiter limiter_;
  std::string origin_;
  std::string path_prefix_;
  std::atomic<std::int64_t> sent_{0};
  mutable std::mutex attempts_mutex_;
  std::vector<AttemptRecord> attempts_;
};

// Serves recorded completions keyed by (game, seat, prompt hash). Identical keys are
// served in recording order. Never touches the network.
class ReplayGateway : public CompletionBackend {
 public:
  void add(const std::string& game_id, PlayerId seat, const std::string& prompt_hash,
           std::optional<std::string> response);

  // Reads every player_<i>.jsonl exchange record found below `root`.
  static std::unique_ptr<ReplayGateway> load(const std::filesystem::path& root);

  std::string complete(const CompletionCall& call) override;
  std::string describe() const override { return "replay"; }

  std::size_t size() const;
  std::int64_t misses() const { return misses_.load(); }

 private:
  using Key = std::tuple<std::string, int, std::string>;
  mutable std::mutex mutex_;
  std::map<Key, std::deque<std::optional<std::string>>> entries_;
  std::atomic<std::int64_t> misses_{0};
};

}  // namespace werewolf
