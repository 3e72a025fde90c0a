#include "werewolf/game_log.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

namespace werewolf {

nlohmann::json LogEvent::to_json() const {
  return {{"seq", seq},
          {"round", round},
          {"phase", phase},
          {"actor", actor ? nlohmann::json(*actor) : nlohmann::json(nullptr)},
          {"type", type},
          {"payload", payload}};
}

LogEvent LogEvent::from_json(const nlohmann::json& j) {
  LogEvent e;
  j.at("seq").get_to(e.seq);
  j.at("round").get_to(e.round);
  j.at("phase").get_to(e.phase);
  if (j.contains("actor") && !j["actor"].is_null()) e.actor = j["actor"].get<PlayerId>();
  j.at("type").get_to(e.type);
  if (j.contains("payload")) e.payload = j["payload"];
  return e;
}

nlohmann::json GameLogHeader::to_json() const {
  return {{"schema_version", schema_version}, {"game_id", game_id}, {"setting", setting},
          {"config", config},                 {"seed", seed},       {"roles", roles},
          {"seat_agents", seat_agents}};
}

GameLogHeader GameLogHeader::from_json(const nlohmann::json& j) {
  GameLogHeader h;
  j.at("schema_version").get_to(h.schema_version);
  if (h.schema_version != kLogSchemaVersion) {
    throw IoError(fmt::format("unsupported game log schema version {}", h.schema_version));
  }
  j.at("game_id").get_to(h.game_id);
  j.at("setting").get_to(h.setting);
  h.config = j.at("config");
  j.at("seed").get_to(h.seed);
  j.at("roles").get_to(h.roles);
  j.at("seat_agents").get_to(h.seat_agents);
  return h;
}

void GameLog::append(LogEvent event) {
  if (event.seq != last_seq() + 1) {
    throw InternalError(fmt::format("log seq gap: expected {}, got {}", last_seq() + 1, event.seq));
  }
  events_.push_back(std::move(event));
}

std::optional<Outcome> GameLog::outcome() const {
  for (auto it = events_.rbegin(); it != events_.rend(); ++it) {
    if (it->type == "outcome") return it->payload.at("outcome").get<Outcome>();
  }
  return std::nullopt;
}

std::vector<const LogEvent*> GameLog::of_type(std::string_view type) const {
  std::vector<const LogEvent*> out;
  for (const auto& e : events_) {
    if (e.type == type) out.push_back(&e);
  }
  return out;
}

std::string GameLog::serialize() const {
  std::string out = header.to_json().dump() + "\n";
  for (const auto& e : events_) out += e.to_json().dump() + "\n";
  return out;
}

GameLog GameLog::parse(const std::string& text) {
  GameLog log;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(fmt::format("game log line {}: {}", line_no, e.what()));
    }
    try {
      if (!have_header) {
        log.header = GameLogHeader::from_json(doc);
        have_header = true;
      } else {
        log.append(LogEvent::from_json(doc));
      }
    } catch (const nlohmann::json::exception& e) {
      throw IoError(fmt::format("game log line {}: {}", line_no, e.what()));
    }
  }
  if (!have_header) throw IoError("game log has no header");
  log.partial = !log.outcome().has_value();
  return log;
}

GameLog GameLog::load(const std::filesystem::path& path) {
  auto file = std::filesystem::is_directory(path) ? path / "game.jsonl" : path;
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", file.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void GameLog::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << serialize();
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
}

DirectorySink::DirectorySink(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir_.string(), ec.message()));
  game_.open(dir_ / "game.jsonl", std::ios::binary | std::ios::trunc);
  errors_.open(dir_ / "errors.jsonl", std::ios::binary | std::ios::trunc);
  if (!game_ || !errors_) throw IoError(fmt::format("cannot open log files in {}", dir_.string()));
}

DirectorySink::~DirectorySink() {
  try {
    close();
  } catch (...) {
  }
}

void DirectorySink::write_line(std::ofstream& out, const std::filesystem::path& path,
                               const std::string& line) {
  out << line << '\n';
  out.flush();
  if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

std::ofstream& DirectorySink::player_stream(PlayerId player) {
  auto it = players_.find(player.value);
  if (it != players_.end()) return it->second;
  auto path = dir_ / fmt::format("player_{}.jsonl", player.value);
  auto& out = players_[player.value];
  out.open(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {}", path.string()));
  return out;
}

void DirectorySink::header(const GameLogHeader& h) {
  std::lock_guard lock(mutex_);
  write_line(game_, dir_ / "game.jsonl", h.to_json().dump());
}

void DirectorySink::event(const LogEvent& e) {
  std::lock_guard lock(mutex_);
  write_line(game_, dir_ / "game.jsonl", e.to_json().dump());
}

void DirectorySink::player_record(PlayerId player, const nlohmann::json& record) {
  std::lock_guard lock(mutex_);
  write_line(player_stream(player), dir_ / fmt::format("player_{}.jsonl", player.value), record.dump());
}

void DirectorySink::error_record(const nlohmann::json& record) {
  std::lock_guard lock(mutex_);
  write_line(errors_, dir_ / "errors.jsonl", record.dump());
}

void DirectorySink::close() {
  std::lock_guard lock(mutex_);
  if (game_.is_open()) game_.close();
  if (errors_.is_open()) errors_.close();
  for (auto& [id, out] : players_) {
    if (out.is_open()) out.close();
  }
}

void TeeSink::header(const GameLogHeader& h) {
  for (auto* s : sinks_) s->header(h);
}
void TeeSink::event(const LogEvent& e) {
  for (auto* s : sinks_) s->event(e);
}
void TeeSink::player_record(PlayerId player, const nlohmann::json& record) {
  for (auto* s : sinks_) s->player_record(player, record);
}
void TeeSink::error_record(const nlohmann::json& record) {
  for (auto* s : sinks_) s->error_record(record);
}
void TeeSink::close() {
  for (auto* s : sinks_) s->close();
}

std::vector<std::filesystem::path> find_game_logs(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> dirs;
  if (std::filesystem::is_regular_file(root)) return {root.parent_path()};
  if (std::filesystem::exists(root / "game.jsonl")) dirs.push_back(root);
  if (std::filesystem::is_directory(root)) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == "game.jsonl" &&
          entry.path().parent_path() != root) {
        dirs.push_back(entry.path().parent_path());
      }
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace werewolf
