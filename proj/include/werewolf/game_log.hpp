#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "werewolf/core.hpp"

namespace werewolf {

inline constexpr int kLogSchemaVersion = 1;

struct LogEvent {
  std::int64_t seq = 0;
  int round = 0;
  Phase phase = Phase::Night;
  std::optional<PlayerId> actor;
  std::string type;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  static LogEvent from_json(const nlohmann::json& j);
  bool operator==(const LogEvent&) const = default;
};

struct GameLogHeader {
  int schema_version = kLogSchemaVersion;
  std::string game_id;
  std::string setting;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<Role> roles;  // roles[i] belongs to player_{i+1}
  std::vector<std::string> seat_agents;

  nlohmann::json to_json() const;
  static GameLogHeader from_json(const nlohmann::json& j);
};

// The in-memory game log: one header plus a strictly increasing event stream.
class GameLog {
 public:
  GameLogHeader header;

  // The event's seq must be exactly last + 1 (or 1 for the first event).
  void append(LogEvent event);
  const std::vector<LogEvent>& events() const { return events_; }
  std::int64_t last_seq() const { return events_.empty() ? 0 : events_.back().seq; }

  // Set when the game was aborted by an I/O failure; such a log cannot be replayed.
  bool partial = false;

  std::optional<Outcome> outcome() const;
  std::vector<const LogEvent*> of_type(std::string_view type) const;

  // game.jsonl: header line followed by one line per event.
  std::string serialize() const;
  static GameLog parse(const std::string& text);
  static GameLog load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<LogEvent> events_;
};

// Destination for everything a running game writes: the game log stream, per-player
// transcripts and the error log.
class LogSink {
 public:
  virtual ~LogSink() = default;
  virtual void header(const GameLogHeader& header) = 0;
  virtual void event(const LogEvent& event) = 0;
  virtual void player_record(PlayerId player, const nlohmann::json& record) = 0;
  virtual void error_record(const nlohmann::json& record) = 0;
  virtual void close() {}
};

class NullSink : public LogSink {
 public:
  void header(const GameLogHeader&) override {}
  void event(const LogEvent&) override {}
  void player_record(PlayerId, const nlohmann::json&) override {}
  void error_record(const nlohmann::json&) override {}
};

// Keeps everything in memory, for tests and replay verification.
class MemorySink : public LogSink {
 public:
  void header(const GameLogHeader& h) override { header_ = h; }
  void event(const LogEvent& e) override { events.push_back(e); }
  void player_record(PlayerId player, const nlohmann::json& record) override {
    players[player.value].push_back(record);
  }
  void error_record(const nlohmann::json& record) override { errors.push_back(record); }

  std::optional<GameLogHeader> header_;
  std::vector<LogEvent> events;
  std::map<int, std::vector<nlohmann::json>> players;
  std::vector<nlohmann::json> errors;
};

// Writes <dir>/game.jsonl, <dir>/player_<i>.jsonl and <dir>/errors.jsonl, one flushed
// line per record. Write failures raise IoError.
class DirectorySink : public LogSink {
 public:
  explicit DirectorySink(std::filesystem::path dir);
  ~DirectorySink() override;

  void header(const GameLogHeader& header) override;
  void event(const LogEvent& event) override;
  void player_record(PlayerId player, const nlohmann::json& record) override;
  void error_record(const nlohmann::json& record) override;
  void close() override;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  void write_line(std::ofstream& out, const std::filesystem::path& path, const std::string& line);
  std::ofstream& player_stream(PlayerId player);

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::ofstream game_;
  std::ofstream errors_;
  std::map<int, std::ofstream> players_;
};

// Fans out to several sinks in order.
class TeeSink : public LogSink {
 public:
  explicit TeeSink(std::vector<LogSink*> sinks) : sinks_(std::move(sinks)) {}
  void header(const GameLogHeader& h) override;
  void event(const LogEvent& e) override;
  void player_record(PlayerId player, const nlohmann::json& record) override;
  void error_record(const nlohmann::json& record) override;
  void close() override;

 private:
  std::vector<LogSink*> sinks_;
};

// Every game directory (containing game.jsonl) found below `root`, sorted.
std::vector<std::filesystem::path> find_game_logs(const std::filesystem::path& root);

}  // namespace werewolf
