#include "werewolf/gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

#include <fmt/format.h>

#include "httplib.h"

namespace werewolf {

nlohmann::json ModelEndpoint::to_json() const {
  return {{"name", name},
          {"base_url", base_url},
          {"model", model},
          {"api_key_env", api_key_env},
          {"max_tokens", max_tokens},
          {"temperature", temperature},
          {"timeout_seconds", timeout_seconds},
          {"requests_per_minute", requests_per_minute},
          {"max_retries", max_retries}};
}

std::string_view to_string(GatewayReason reason) {
  switch (reason) {
    case GatewayReason::Timeout: return "timeout";
    case GatewayReason::Http: return "http";
    case GatewayReason::RateLimited: return "rate-limited";
    case GatewayReason::Transport: return "transport";
    case GatewayReason::MissingKey: return "missing-key";
    case GatewayReason::BadResponse: return "bad-response";
    case GatewayReason::ReplayMiss: return "replay-miss";
  }
  return "?";
}

void RateLimiter::acquire() {
  if (per_minute_ <= 0) return;
  const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(60.0 / per_minute_));
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

HttpGateway::HttpGateway(ModelEndpoint endpoint, Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      sleeper_(std::move(sleeper)),
      limiter_(endpoint_.requests_per_minute) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint_.base_url, m, url)) {
    throw ConfigError(fmt::format("endpoint '{}': base_url '{}' is not an http(s) URL", endpoint_.name,
                                  endpoint_.base_url));
  }
  origin_ = m[1].str();
  path_prefix_ = m[2].str();
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

nlohmann::json HttpGateway::request_body(const ModelEndpoint& endpoint, const std::string& prompt) {
  return {{"model", endpoint.model},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
          {"max_tokens", endpoint.max_tokens},
          {"temperature", endpoint.temperature}};
}

std::string HttpGateway::extract_content(const std::string& body) {
  auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw GatewayError(GatewayReason::BadResponse, "response body is not JSON");
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw GatewayError(GatewayReason::BadResponse, "content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(GatewayReason::BadResponse, fmt::format("unexpected response shape: {}", e.what()));
  }
}

std::chrono::milliseconds HttpGateway::backoff(int attempt) const {
  const double seconds = std::min(endpoint_.backoff_max_seconds,
                                  endpoint_.backoff_initial_seconds * std::pow(2.0, attempt - 1));
  return std::chrono::milliseconds(static_cast<std::int64_t>(seconds * 1000.0));
}

std::vector<AttemptRecord> HttpGateway::attempts() const {
  std::lock_guard lock(attempts_mutex_);
  return attempts_;
}

std::string HttpGateway::complete_once(const std::string& body, int attempt) {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(endpoint_.timeout_seconds));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!endpoint_.api_key_env.empty()) {
    const char* key = std::getenv(endpoint_.api_key_env.c_str());
    if (!key || !*key) {
      throw GatewayError(GatewayReason::MissingKey,
                         fmt::format("environment variable {} is not set", endpoint_.api_key_env));
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  limiter_.acquire();
  ++sent_;
  const auto start = std::chrono::steady_clock::now();
  auto result = client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
  const double latency =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  AttemptRecord record{attempt, 0, {}, latency};
  auto remember = [&] {
    std::lock_guard lock(attempts_mutex_);
    attempts_.push_back(record);
  };

  if (!result) {
    const auto err = result.error();
    const bool timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
    record.reason = timed_out ? "timeout" : "transport";
    remember();
    throw GatewayError(timed_out ? GatewayReason::Timeout : GatewayReason::Transport,
                       fmt::format("request failed: {}", httplib::to_string(err)));
  }
  record.http_status = result->status;
  if (result->status == 429) {
    record.reason = "rate-limited";
    remember();
    throw GatewayError(GatewayReason::RateLimited, "HTTP 429");
  }
  if (result->status < 200 || result->status >= 300) {
    record.reason = "http";
    remember();
    throw GatewayError(GatewayReason::Http, fmt::format("HTTP {}", result->status));
  }
  remember();
  return extract_content(result->body);
}

std::string HttpGateway::complete(const CompletionCall& call) {
  const auto body = request_body(endpoint_, call.prompt).dump();
  const int total = std::max(1, endpoint_.max_retries + 1);
  for (int attempt = 1;; ++attempt) {
    try {
      return complete_once(body, attempt);
    } catch (const GatewayError& e) {
      const bool retryable = e.reason() != GatewayReason::MissingKey &&
                             e.reason() != GatewayReason::BadResponse;
      if (!retryable || attempt >= total) throw;
      sleeper_(backoff(attempt));
    }
  }
}

void ReplayGateway::add(const std::string& game_id, PlayerId seat, const std::string& prompt_hash,
                        std::optional<std::string> response) {
  std::lock_guard lock(mutex_);
  entries_[Key{game_id, seat.value, prompt_hash}].push_back(std::move(response));
}

std::unique_ptr<ReplayGateway> ReplayGateway::load(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw IoError(fmt::format("replay corpus '{}' is not a directory", root.string()));
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("player_") && name.ends_with(".jsonl")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  auto gateway = std::make_unique<ReplayGateway>();
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto doc = nlohmann::json::parse(line, nullptr, false);
      if (doc.is_discarded() || doc.value("type", "") != "exchange") continue;
      std::optional<std::string> response;
      if (doc.contains("response") && doc["response"].is_string()) response = doc["response"].get<std::string>();
      gateway->add(doc.at("game_id").get<std::string>(), PlayerId{doc.at("seat").get<int>()},
                  doc.at("prompt_hash").get<std::string>(), std::move(response));
    }
  }
  return gateway;
}

std::string ReplayGateway::complete(const CompletionCall& call) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(Key{call.game_id, call.seat.value, call.prompt_hash});
  if (it == entries_.end() || it->second.empty()) {
    ++misses_;
    throw GatewayError(GatewayReason::ReplayMiss,
                       fmt::format("no recorded completion for {} seat {} prompt {}", call.game_id,
                                   call.seat.value, call.prompt_hash.substr(0, 12)));
  }
  auto response = std::move(it->second.front());
  it->second.pop_front();
  if (!response) throw GatewayError(GatewayReason::Transport, "recorded generation failure");
  return *response;
}

std::size_t ReplayGateway::size() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [key, queue] : entries_) n += queue.size();
  return n;
}

}  // namespace werewolf
