#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "werewolf/agent.hpp"

namespace werewolf::console {

inline constexpr int kProtocolVersion = 1;

// {type, request_id?, payload}
nlohmann::json make_frame(std::string type, nlohmann::json payload, std::optional<std::string> request_id = {});

// attention / alert / peer / own / system
std::string display_class(ObservationKind kind, bool own);

// Seat-visible view of a request, plus a JSON template to prefill the input form.
nlohmann::json request_payload(const ActionRequest& request);
std::string template_document(const ActionRequest& request);

// Frames for one seat of one session. Everything pushed goes to the backlog and to every
// subscriber; submit replies (ack / error) only go back to the caller.
class SeatChannel {
 public:
  using Listener = std::function<void(const nlohmann::json& frame)>;

  SeatChannel(std::string session, PlayerId seat);

  const std::string& session() const { return session_; }
  PlayerId seat() const { return seat_; }

  // The backlog is replayed to `listener` before any live frame.
  int subscribe(Listener listener);
  void unsubscribe(int id);
  std::vector<nlohmann::json> backlog() const;
  void push(nlohmann::json frame);

  // Client submission; payload {"document": <string | object>}.
  nlohmann::json submit(const std::string& request_id, const nlohmann::json& payload);

  // Engine side. Blocks until a valid submission, the timeout, or close().
  std::optional<std::string> await_response(const ActionRequest& request,
                                            std::optional<std::chrono::milliseconds> timeout);
  std::optional<std::string> open_request() const;

  // Terminal notice; pending and future waits return nullopt.
  void close(const std::string& reason);
  bool closed() const;

 private:
  void push_locked(nlohmann::json frame);

  std::string session_;
  PlayerId seat_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<nlohmann::json> backlog_;
  std::map<int, Listener> listeners_;
  int next_listener_ = 1;
  int next_request_ = 1;
  std::optional<std::string> open_id_;
  std::optional<ActionRequest> open_;
  std::optional<std::string> accepted_;
  bool closed_ = false;
};

// A seat played through the console. No automatic fallback while waiting; with a timeout
// the engine's normal invalid-output handling applies once it expires.
class HumanAgent : public Agent {
 public:
  explicit HumanAgent(std::shared_ptr<SeatChannel> channel,
                      std::optional<std::chrono::milliseconds> timeout = std::nullopt);

  RawReply respond(const ActionRequest& request) override;
  void observe(PlayerId seat, const Observation& observation) override;
  std::string describe() const override { return "human"; }

  SeatChannel& channel() { return *channel_; }

 private:
  std::shared_ptr<SeatChannel> channel_;
  std::optional<std::chrono::milliseconds> timeout_;
};

class SessionRegistry {
 public:
  std::shared_ptr<SeatChannel> open(const std::string& session, PlayerId seat);
  std::shared_ptr<SeatChannel> find(const std::string& session, int seat) const;
  std::vector<std::string> sessions() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, int>, std::shared_ptr<SeatChannel>> seats_;
};

// "/session/<id>/seat/<n>"
std::optional<std::pair<std::string, int>> parse_session_path(std::string_view target);

struct ServerOptions {
  std::string host = "127.0.0.1";
  unsigned short port = 0;  // 0 picks a free port
  std::filesystem::path static_root;
};

// WebSocket seat endpoints and static files on one port.
class ConsoleServer {
 public:
  ConsoleServer(std::shared_ptr<SessionRegistry> registry, ServerOptions options);
  ~ConsoleServer();

  ConsoleServer(const ConsoleServer&) = delete;
  ConsoleServer& operator=(const ConsoleServer&) = delete;

  void start();
  void stop();
  unsigned short port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace werewolf::console
