#include "werewolf/agent.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include <fmt/format.h>

namespace werewolf {

std::string_view to_string(RequestKind kind) {
  switch (kind) {
    case RequestKind::Reason: return "reason";
    case RequestKind::NightKill: return "night_kill";
    case RequestKind::NightSee: return "night_see";
    case RequestKind::NightProtect: return "night_protect";
    case RequestKind::Statement: return "statement";
    case RequestKind::SheriffStatement: return "sheriff_statement";
    case RequestKind::Vote: return "vote";
    case RequestKind::PseudoVote: return "pseudo_vote";
    case RequestKind::OrderChoice: return "order_choice";
    case RequestKind::Campaign: return "campaign";
    case RequestKind::SheriffVote: return "sheriff_vote";
  }
  return "?";
}

bool is_night_kind(RequestKind kind) {
  return kind == RequestKind::NightKill || kind == RequestKind::NightSee ||
         kind == RequestKind::NightProtect;
}

bool is_vote_kind(RequestKind kind) {
  return kind == RequestKind::Vote || kind == RequestKind::PseudoVote ||
         kind == RequestKind::SheriffVote;
}

bool is_statement_kind(RequestKind kind) {
  return kind == RequestKind::Statement || kind == RequestKind::SheriffStatement ||
         kind == RequestKind::Campaign;
}

bool is_choice_kind(RequestKind kind) {
  return is_night_kind(kind) || is_vote_kind(kind) || kind == RequestKind::OrderChoice;
}

nlohmann::json AgentResponse::to_json() const {
  nlohmann::json j{{"kind", kind}, {"fallback", fallback}};
  if (is_choice_kind(kind)) {
    j["choice"] = choice ? nlohmann::json(*choice) : nlohmann::json(nullptr);
  } else if (is_statement_kind(kind)) {
    j["statement"] = statement;
  } else if (reason) {
    j["role"] = reason->role;
    j["confidence"] = reason->confidence;
    j["evidence"] = reason->evidence;
  } else {
    j["skipped"] = true;
  }
  return j;
}

namespace {

std::string trim(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::string lower(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return text;
}

// End of the balanced object starting at `open`, honouring string literals.
std::optional<std::size_t> matching_brace(const std::string& text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

std::optional<nlohmann::json> first_json_object(const std::string& raw) {
  for (std::size_t pos = raw.find('{'); pos != std::string::npos; pos = raw.find('{', pos + 1)) {
    auto end = matching_brace(raw, pos);
    if (!end) continue;
    auto parsed = nlohmann::json::parse(raw.begin() + static_cast<std::ptrdiff_t>(pos),
                                        raw.begin() + static_cast<std::ptrdiff_t>(*end) + 1, nullptr,
                                        /*allow_exceptions=*/false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  }
  return std::nullopt;
}

std::optional<std::string> string_field(const nlohmann::json& doc, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = doc.find(key);
    if (it == doc.end()) continue;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
  }
  return std::nullopt;
}

std::set<int> visible_ids(const ContextDocument& doc) {
  std::set<int> ids;
  for (const auto& f : doc.facts) ids.insert(f.seq_id);
  for (const auto* bucket : {&doc.truths, &doc.falsehoods, &doc.pending}) {
    for (const auto& s : *bucket) ids.insert(s.seq_id);
  }
  return ids;
}

std::optional<double> number_field(const nlohmann::json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    static const std::regex number(R"(-?\d+(\.\d+)?)");
    std::smatch m;
    const auto text = value.get<std::string>();
    if (std::regex_search(text, m, number)) return std::stod(m.str());
  }
  return std::nullopt;
}

std::vector<int> evidence_ids(const nlohmann::json& value, const std::set<int>& visible) {
  std::vector<int> ids;
  auto add = [&](long long id) {
    if (id > 0 && id <= std::numeric_limits<int>::max() && visible.contains(static_cast<int>(id)) &&
        std::find(ids.begin(), ids.end(), static_cast<int>(id)) == ids.end()) {
      ids.push_back(static_cast<int>(id));
    }
  };
  auto scan_text = [&](const std::string& text) {
    static const std::regex digits(R"(\d+)");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), digits); it != std::sregex_iterator(); ++it) {
      add(std::stoll(it->str()));
    }
  };
  if (value.is_array()) {
    for (const auto& item : value) {
      if (item.is_number_integer()) {
        add(item.get<long long>());
      } else if (item.is_string()) {
        scan_text(item.get<std::string>());
      }
    }
  } else if (value.is_number_integer()) {
    add(value.get<long long>());
  } else if (value.is_string()) {
    scan_text(value.get<std::string>());
  }
  return ids;
}

ParseResult invalid(std::string why) { return ParseResult{std::nullopt, std::move(why)}; }

ParseResult parse_reason(const nlohmann::json& doc, const ActionRequest& request) {
  const nlohmann::json* entry = nullptr;
  if (request.target) {
    auto it = doc.find(player_name(*request.target));
    if (it != doc.end() && it->is_object()) entry = &*it;
  }
  if (!entry && doc.contains("role")) entry = &doc;
  if (!entry) {
    for (const auto& [key, value] : doc.items()) {
      if (value.is_object() && value.contains("role")) {
        auto who = parse_player_reference(key);
        if (who && request.target && *who != *request.target) continue;
        entry = &value;
        break;
      }
    }
  }
  if (!entry) return invalid("reasoning entry for the target is missing");

  auto role_text = string_field(*entry, {"role"});
  if (!role_text) return invalid("reasoning entry has no role");
  auto guess = parse_role_guess(*role_text);
  if (!guess) return invalid(fmt::format("unknown role guess '{}'", *role_text));

  auto conf_it = entry->find("confidence");
  if (conf_it == entry->end()) return invalid("reasoning entry has no confidence");
  auto confidence = number_field(*conf_it);
  if (!confidence) return invalid("confidence is not a number");

  ReasonResult result;
  result.role = *guess;
  result.confidence = clamp_confidence(*confidence);
  result.reasoning = string_field(*entry, {"reasoning"}).value_or("");
  if (auto ev = entry->find("evidence"); ev != entry->end()) {
    result.evidence = evidence_ids(*ev, visible_ids(request.context));
  }

  AgentResponse response;
  response.kind = request.kind;
  response.reasoning = result.reasoning;
  response.reason = std::move(result);
  return ParseResult{std::move(response), {}};
}

ParseResult parse_choice(const nlohmann::json& doc, const ActionRequest& request) {
  auto action = string_field(doc, {"action", "vote", "choice", "target"});
  if (!action) return invalid("response has no action");

  AgentResponse response;
  response.kind = request.kind;
  response.reasoning = string_field(doc, {"reasoning"}).value_or("");

  if (request.kind == RequestKind::OrderChoice) {
    const auto key = lower(trim(*action));
    if (key == "left" && request.left_neighbor) {
      response.choice = request.left_neighbor;
      return ParseResult{std::move(response), {}};
    }
    if (key == "right" && request.right_neighbor) {
      response.choice = request.right_neighbor;
      return ParseResult{std::move(response), {}};
    }
  }

  if (is_vote_kind(request.kind) && request.abstain_allowed && is_abstain_text(*action)) {
    response.choice = std::nullopt;
    return ParseResult{std::move(response), {}};
  }

  auto who = parse_player_reference(*action);
  if (!who) return invalid(fmt::format("cannot read a player from '{}'", *action));
  if (std::find(request.options.begin(), request.options.end(), *who) == request.options.end()) {
    return invalid(fmt::format("{} is not an available option", player_name(*who)));
  }
  response.choice = *who;
  return ParseResult{std::move(response), {}};
}

ParseResult parse_statement(const nlohmann::json& doc, const ActionRequest& request) {
  auto text = string_field(doc, {"statement", "action", "speech"});
  if (!text || trim(*text).empty()) return invalid("response has no statement");
  AgentResponse response;
  response.kind = request.kind;
  response.reasoning = string_field(doc, {"reasoning"}).value_or("");
  response.statement = trim(*text);
  return ParseResult{std::move(response), {}};
}

}  // namespace

std::optional<PlayerId> parse_player_reference(const std::string& text) {
  static const std::regex named(R"(player[\s_\-]*(\d+))", std::regex::icase);
  std::smatch m;
  if (std::regex_search(text, m, named)) return PlayerId{std::stoi(m[1].str())};
  const auto bare = trim(text);
  if (!bare.empty() && bare.size() < 6 &&
      std::all_of(bare.begin(), bare.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return PlayerId{std::stoi(bare)};
  }
  return std::nullopt;
}

bool is_abstain_text(const std::string& text) {
  const auto key = lower(trim(text));
  static const std::set<std::string> phrases = {"do no vote", "do not vote", "no vote", "abstain",
                                                "not vote", "none", "skip", "pass"};
  if (phrases.contains(key)) return true;
  return key.find("do no vote") != std::string::npos || key.find("do not vote") != std::string::npos;
}

std::string silence_text(PlayerId player) { return fmt::format("{} said nothing", player_name(player)); }

ParseResult parse_response(const std::string& raw, const ActionRequest& request) {
  auto doc = first_json_object(raw);
  if (!doc) return invalid("no JSON object found");
  if (request.kind == RequestKind::Reason) return parse_reason(*doc, request);
  if (is_statement_kind(request.kind)) return parse_statement(*doc, request);
  return parse_choice(*doc, request);
}

AgentResponse apply_fallback(const ActionRequest& request, SeededRng& rng) {
  AgentResponse response;
  response.kind = request.kind;
  response.fallback = true;
  if (is_night_kind(request.kind)) {
    if (request.options.empty()) throw InternalError("night request without options");
    response.choice = rng.pick(request.options);
  } else if (is_statement_kind(request.kind)) {
    response.statement = silence_text(request.player);
  } else if (request.kind == RequestKind::OrderChoice) {
    response.choice = request.right_neighbor;
  } else if (request.kind == RequestKind::Reason) {
    response.reason = std::nullopt;
  } else {
    response.choice = std::nullopt;
  }
  return response;
}

std::string response_document(const ActionRequest& request, const AgentResponse& response) {
  nlohmann::json doc;
  if (request.kind == RequestKind::Reason) {
    if (!request.target || !response.reason) throw InternalError("reason document without content");
    doc[player_name(*request.target)] = {{"role", to_string(response.reason->role)},
                                         {"reasoning", response.reason->reasoning},
                                         {"confidence", response.reason->confidence},
                                         {"evidence", response.reason->evidence}};
  } else if (is_statement_kind(request.kind)) {
    doc = {{"reasoning", response.reasoning}, {"statement", response.statement}};
  } else {
    std::string action = response.choice ? player_name(*response.choice) : std::string("do no vote");
    if (request.kind == RequestKind::SheriffVote && response.choice) action = "vote for " + action;
    doc = {{"reasoning", response.reasoning}, {"action", action}};
  }
  return doc.dump();
}

ScriptedPolicy ScriptedPolicy::lowest_id() {
  ScriptedPolicy p;
  p.night = [](const ActionRequest& r) { return r.options.front(); };
  p.vote = [](const ActionRequest& r) -> VoteChoice {
    if (r.options.empty()) return std::nullopt;
    return r.options.front();
  };
  p.sheriff_vote = [](const ActionRequest& r) -> VoteChoice {
    if (r.candidates.empty()) return std::nullopt;
    return r.candidates.front();
  };
  p.order = [](const ActionRequest&) { return OrderSide::Right; };
  p.statement = [](const ActionRequest& r) {
    return fmt::format("I am {}. Let us find the Werewolves together.", player_name(r.player));
  };
  p.reason = [](const ActionRequest& r) {
    ReasonResult result;
    result.reasoning = "scripted";
    for (const auto* bucket : {&r.context.truths, &r.context.falsehoods, &r.context.pending}) {
      for (const auto& s : *bucket) result.evidence.push_back(s.seq_id);
    }
    std::sort(result.evidence.begin(), result.evidence.end());
    return result;
  };
  return p;
}

ScriptedAgent::ScriptedAgent(ScriptedPolicy policy, std::string name)
    : policy_(std::move(policy)), name_(std::move(name)) {}

RawReply ScriptedAgent::respond(const ActionRequest& request) {
  if (policy_.silent.contains(request.kind)) return RawReply{std::nullopt, "scripted generation failure"};
  if (policy_.malformed.contains(request.kind)) return RawReply{std::string("I refuse to answer in JSON."), {}};

  auto require = [&](const auto& fn) -> const auto& {
    if (!fn) throw PolicyError(fmt::format("scripted policy has no rule for {}", to_string(request.kind)));
    return fn;
  };

  AgentResponse response;
  response.kind = request.kind;
  response.reasoning = "scripted";
  switch (request.kind) {
    case RequestKind::NightKill:
    case RequestKind::NightSee:
    case RequestKind::NightProtect: response.choice = require(policy_.night)(request); break;
    case RequestKind::Vote: response.choice = require(policy_.vote)(request); break;
    case RequestKind::PseudoVote:
      response.choice = policy_.pseudo_vote ? policy_.pseudo_vote(request) : require(policy_.vote)(request);
      break;
    case RequestKind::SheriffVote: response.choice = require(policy_.sheriff_vote)(request); break;
    case RequestKind::OrderChoice: {
      const auto side = require(policy_.order)(request);
      response.choice = side == OrderSide::Left ? request.left_neighbor : request.right_neighbor;
      break;
    }
    case RequestKind::Statement:
    case RequestKind::SheriffStatement:
    case RequestKind::Campaign: response.statement = require(policy_.statement)(request); break;
    case RequestKind::Reason: response.reason = require(policy_.reason)(request); break;
  }
  return RawReply{response_document(request, response), {}};
}

RawReply RecordingAgent::respond(const ActionRequest& request) {
  {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
  }
  return inner_->respond(request);
}

void RecordingAgent::observe(PlayerId seat, const Observation& observation) {
  {
    std::lock_guard lock(mutex_);
    observations_.push_back(observation);
  }
  inner_->observe(seat, observation);
}

std::vector<ActionRequest> RecordingAgent::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::vector<Observation> RecordingAgent::observations() const {
  std::lock_guard lock(mutex_);
  return observations_;
}

}  // namespace werewolf
