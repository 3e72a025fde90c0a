#include "werewolf/engine.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>

#include "werewolf/digest.hpp"

namespace werewolf {

std::vector<Role> standard_roles() {
  return {Role::Werewolf, Role::Werewolf, Role::Villager, Role::Villager,
          Role::Villager, Role::Seer,     Role::Guard};
}

std::string sheriff_announcement(PlayerId sheriff) {
  return fmt::format("After discussion and a vote, {} {}", player_name(sheriff), kSheriffAnnouncementTail);
}

std::string night_announcement(std::optional<PlayerId> death) {
  return death ? fmt::format("{} was killed.", player_name(*death)) : std::string("No player was killed.");
}

std::string day_announcement(std::optional<PlayerId> eliminated) {
  return eliminated ? fmt::format("{} was eliminated.", player_name(*eliminated))
                    : std::string("No player was eliminated.");
}

void GameConfig::validate() const {
  if (n_players != static_cast<int>(standard_roles().size())) {
    throw ConfigError(fmt::format("n_players = {} does not match the {}-role template", n_players,
                                  standard_roles().size()));
  }
  if (max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
  if (alpha < kMinConfidence || alpha > kMaxConfidence) throw ConfigError("alpha must be within 5..10");
  if (retries < 0) throw ConfigError("retries must be non-negative");
  if (election_candidates < 1 || election_candidates > n_players) {
    throw ConfigError("election_candidates out of range");
  }
  if (human_seat && (human_seat->value < 1 || human_seat->value > n_players)) {
    throw ConfigError("human_seat out of range");
  }
  for (const auto& [seat, model] : seat_models) {
    if (seat < 1 || seat > n_players) throw ConfigError(fmt::format("seat_models has unknown seat {}", seat));
  }
}

nlohmann::json GameConfig::to_json() const {
  nlohmann::json models = nlohmann::json::object();
  for (const auto& [seat, model] : seat_models) models[std::to_string(seat)] = model;
  return {{"n_players", n_players},
          {"max_rounds", max_rounds},
          {"alpha", alpha},
          {"seed", seed},
          {"repeat", repeat},
          {"seat_models", models},
          {"sheriff_mode", sheriff_mode},
          {"tie_policy", tie_policy},
          {"language", language},
          {"game_id", game_id},
          {"setting", setting},
          {"stop_on_sheriff_death", stop_on_sheriff_death},
          {"sheriff_succession", sheriff_succession},
          {"human_seat", human_seat ? nlohmann::json(*human_seat) : nlohmann::json(nullptr)},
          {"stop_on_human_death", stop_on_human_death},
          {"election_candidates", election_candidates},
          {"retries", retries},
          {"log_full_prompts", log_full_prompts}};
}

GameConfig GameConfig::from_json(const nlohmann::json& j) {
  GameConfig c;
  try {
    c.n_players = j.value("n_players", c.n_players);
    c.max_rounds = j.value("max_rounds", c.max_rounds);
    c.alpha = j.value("alpha", c.alpha);
    c.seed = j.value("seed", c.seed);
    c.repeat = j.value("repeat", c.repeat);
    if (j.contains("seat_models")) {
      for (const auto& [seat, model] : j["seat_models"].items()) c.seat_models[std::stoi(seat)] = model.get<std::string>();
    }
    if (j.contains("sheriff_mode")) c.sheriff_mode = j["sheriff_mode"].get<SheriffMode>();
    if (j.contains("tie_policy")) c.tie_policy = j["tie_policy"].get<TiePolicy>();
    c.language = j.value("language", c.language);
    c.game_id = j.value("game_id", c.game_id);
    c.setting = j.value("setting", c.setting);
    c.stop_on_sheriff_death = j.value("stop_on_sheriff_death", c.stop_on_sheriff_death);
    c.sheriff_succession = j.value("sheriff_succession", c.sheriff_succession);
    if (j.contains("human_seat") && !j["human_seat"].is_null()) c.human_seat = j["human_seat"].get<PlayerId>();
    c.stop_on_human_death = j.value("stop_on_human_death", c.stop_on_human_death);
    c.election_candidates = j.value("election_candidates", c.election_candidates);
    c.retries = j.value("retries", c.retries);
    c.log_full_prompts = j.value("log_full_prompts", c.log_full_prompts);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad game config: {}", e.what()));
  }
  return c;
}

Role GameState::role_of(PlayerId p) const {
  if (p.value < 1 || p.value > n_players()) throw InternalError(fmt::format("no seat {}", p.value));
  return roles[static_cast<std::size_t>(p.value - 1)];
}

PlayerList GameState::players() const {
  PlayerList out;
  for (int i = 1; i <= n_players(); ++i) out.push_back(PlayerId{i});
  return out;
}

int GameState::alive_werewolves() const {
  return static_cast<int>(std::count_if(alive_day.begin(), alive_day.end(),
                                        [&](PlayerId p) { return role_of(p) == Role::Werewolf; }));
}

int GameState::alive_villagers() const { return static_cast<int>(alive_day.size()) - alive_werewolves(); }

PlayerList GameState::werewolves() const {
  PlayerList out;
  for (auto p : players()) {
    if (role_of(p) == Role::Werewolf) out.push_back(p);
  }
  return out;
}

GameState init_game(const GameConfig& config) {
  config.validate();
  GameState state;
  SeededRng role_rng(config.seed);
  state.roles = standard_roles();
  role_rng.shuffle(state.roles);
  for (int i = 1; i <= config.n_players; ++i) {
    state.alive_night.insert(PlayerId{i});
    state.alive_day.insert(PlayerId{i});
  }
  const auto drawn = PlayerId{static_cast<int>(role_rng.index(static_cast<std::size_t>(config.n_players))) + 1};
  if (config.sheriff_mode == SheriffMode::SecretAssign) {
    state.designate = config.human_seat.value_or(drawn);
  } else if (config.sheriff_mode == SheriffMode::ElectionOrVoid) {
    state.tested_seat = drawn;
  }
  return state;
}

NightOutcome resolve_night(std::optional<PlayerId> kill, std::optional<PlayerId> protect,
                           std::optional<PlayerId> see, std::optional<Role> seen_role) {
  NightOutcome out;
  out.kill_target = kill;
  out.protect_target = protect;
  out.seer_target = see;
  out.seen_role = seen_role;
  if (kill && kill != protect) out.death = kill;
  out.announcement = night_announcement(out.death);
  return out;
}

DayOutcome tally_votes(const std::vector<VoteRecord>& votes, TiePolicy policy, SeededRng* rng) {
  DayOutcome out;
  for (const auto& v : votes) {
    if (v.choice) {
      ++out.tally[*v.choice];
    } else {
      ++out.abstentions;
    }
  }
  int best = 0;
  for (const auto& [p, n] : out.tally) best = std::max(best, n);
  PlayerList top;
  for (const auto& [p, n] : out.tally) {
    if (n == best && best > 0) top.push_back(p);
  }
  if (top.size() == 1) {
    out.eliminated = top.front();
  } else if (top.size() > 1 && policy == TiePolicy::SeededRandom) {
    if (!rng) throw InternalError("seeded tie policy without an rng");
    out.eliminated = rng->pick(top);
  }
  out.announcement = day_announcement(out.eliminated);
  return out;
}

PlayerId neighbor(const std::set<PlayerId>& alive, PlayerId sheriff, OrderSide side) {
  if (alive.size() < 2) return sheriff;
  if (side == OrderSide::Right) {
    auto it = alive.upper_bound(sheriff);
    return it == alive.end() ? *alive.begin() : *it;
  }
  auto it = alive.lower_bound(sheriff);
  return it == alive.begin() ? *alive.rbegin() : *std::prev(it);
}

PlayerList determine_statement_order(const std::set<PlayerId>& alive, PlayerId sheriff, OrderSide side) {
  PlayerList order;
  if (!alive.contains(sheriff)) throw InternalError("the Sheriff must be alive to fix the order");
  PlayerId cur = sheriff;
  for (std::size_t i = 1; i < alive.size(); ++i) {
    cur = neighbor(alive, cur, side);
    order.push_back(cur);
  }
  order.push_back(sheriff);
  return order;
}

std::optional<Outcome> rule_winner(const std::vector<Role>& alive_roles) {
  const auto wolves = std::count(alive_roles.begin(), alive_roles.end(), Role::Werewolf);
  const auto others = static_cast<long>(alive_roles.size()) - wolves;
  if (wolves == 0) return Outcome::VillagerWin;
  if (wolves == others) return Outcome::WerewolfWin;
  return std::nullopt;
}

std::optional<Outcome> check_win(const GameState& state, const GameConfig& config,
                                 std::optional<PlayerId> dead_sheriff, std::optional<PlayerId> dead_human) {
  std::vector<Role> alive_roles;
  for (auto p : state.alive_day) alive_roles.push_back(state.role_of(p));
  if (auto rule = rule_winner(alive_roles)) return rule;
  if (dead_sheriff && config.stop_on_sheriff_death) return Outcome::SheriffEliminated;
  if (dead_human && config.stop_on_human_death) return Outcome::HumanEliminated;
  if (state.round > config.max_rounds) return Outcome::RoundCapReached;
  return std::nullopt;
}

PlayerId succeed_sheriff(const std::set<PlayerId>& alive, const std::map<PlayerId, BeliefRecord>& beliefs) {
  if (alive.empty()) throw InternalError("no alive player to succeed the Sheriff");
  std::optional<PlayerId> best;
  int best_m = 0;
  for (const auto& [target, belief] : beliefs) {
    if (!alive.contains(target)) continue;
    if (!best || belief.reliability > best_m) {
      best = target;
      best_m = belief.reliability;
    }
  }
  return best.value_or(*alive.begin());
}

AgentSet AgentSet::uniform(std::shared_ptr<Agent> agent, int n_players) {
  AgentSet set;
  for (int i = 1; i <= n_players; ++i) set.seats[PlayerId{i}] = agent;
  set.tested = agent;
  return set;
}

Agent& AgentSet::at(PlayerId seat) const {
  auto it = seats.find(seat);
  if (it == seats.end() || !it->second) throw InternalError(fmt::format("no agent bound to seat {}", seat.value));
  return *it->second;
}

namespace {

std::vector<ContextLedger> build_ledgers(const GameConfig& config, const GameState& state) {
  std::vector<ContextLedger> ledgers;
  const auto wolves = state.werewolves();
  for (auto p : state.players()) {
    PlayerList mates;
    if (state.role_of(p) == Role::Werewolf) {
      for (auto w : wolves) {
        if (w != p) mates.push_back(w);
      }
    }
    ledgers.emplace_back(p, state.role_of(p), mates, config.alpha);
  }
  return ledgers;
}

nlohmann::json choice_json(VoteChoice c) { return c ? nlohmann::json(*c) : nlohmann::json(nullptr); }

std::string_view team_of(Outcome outcome) {
  if (outcome == Outcome::WerewolfWin) return "Werewolf";
  if (outcome == Outcome::VillagerWin) return "Village";
  return "";
}

}  // namespace

Game::Game(GameConfig config)
    : config_(std::move(config)),
      state_(init_game(config_)),
      play_rng_(mix_seed(config_.seed, static_cast<std::uint64_t>(config_.repeat))),
      ledgers_(build_ledgers(config_, state_)) {}

void Game::emit(std::string type, nlohmann::json payload, std::optional<PlayerId> actor) {
  LogEvent e{log_.last_seq() + 1, state_.round, state_.phase, actor, std::move(type), std::move(payload)};
  log_.append(e);
  sink_->event(e);
}

void Game::set_phase(Phase phase) {
  state_.phase = phase;
  emit("phase", {{"phase", phase}});
}

void Game::observe(PlayerId seat, ObservationKind kind, std::string text, std::optional<PlayerId> speaker) {
  agents_.at(seat).observe(seat, Observation{state_.round, kind, std::move(text), speaker});
}

void Game::observe_all(ObservationKind kind, const std::string& text, std::optional<PlayerId> speaker) {
  for (auto p : state_.players()) observe(p, kind, text, speaker);
}

ActionRequest Game::base_request(RequestKind kind, PlayerId player) const {
  ActionRequest r;
  r.kind = kind;
  r.round = state_.round;
  r.player = player;
  r.role = state_.role_of(player);
  r.sheriff = state_.sheriff;
  r.language = config_.language;
  r.game_id = config_.game_id;
  r.context = ledger(player).context(state_.alive());
  return r;
}

AgentResponse Game::ask(ActionRequest request) {
  request.prompt = render_prompt(request);
  const auto hash = sha256_hex(request.prompt);
  Agent& agent = agents_.at(request.player);
  auto attempts = nlohmann::json::array();
  std::optional<AgentResponse> accepted;

  for (int attempt = 1; attempt <= 1 + config_.retries && !accepted; ++attempt) {
    const auto start = std::chrono::steady_clock::now();
    RawReply reply = agent.respond(request);
    const double latency =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    attempts.push_back(reply.text ? nlohmann::json(*reply.text) : nlohmann::json(nullptr));

    std::string problem;
    if (reply.text) {
      auto parsed = parse_response(*reply.text, request);
      if (parsed.valid()) {
        accepted = std::move(parsed.response);
      } else {
        problem = parsed.error;
      }
    } else {
      problem = reply.error.empty() ? std::string("generation failed") : reply.error;
      if (problem.starts_with("gateway error")) ++gateway_failures_;
    }

    nlohmann::json exchange{{"type", "exchange"},
                            {"game_id", config_.game_id},
                            {"seat", request.player},
                            {"round", state_.round},
                            {"kind", request.kind},
                            {"attempt", attempt},
                            {"prompt_hash", hash},
                            {"response", reply.text ? nlohmann::json(*reply.text) : nlohmann::json(nullptr)},
                            {"error", problem},
                            {"valid", accepted.has_value()},
                            {"latency_ms", latency}};
    if (config_.log_full_prompts) exchange["prompt"] = request.prompt;
    if (request.target) exchange["target"] = *request.target;
    sink_->player_record(request.player, exchange);

    if (!accepted) {
      ++invalid_outputs_;
      emit("invalid_output", {{"player", request.player}, {"kind", request.kind}, {"attempt", attempt},
                              {"reason", problem}},
           request.player);
      sink_->error_record({{"game_id", config_.game_id},
                           {"seq", log_.last_seq()},
                           {"round", state_.round},
                           {"player", request.player},
                           {"kind", request.kind},
                           {"attempt", attempt},
                           {"reason", problem},
                           {"raw", reply.text ? nlohmann::json(*reply.text) : nlohmann::json(nullptr)}});
    }
  }

  AgentResponse response = accepted ? std::move(*accepted) : apply_fallback(request, play_rng_);
  nlohmann::json payload{{"player", request.player},
                         {"kind", request.kind},
                         {"prompt_hash", hash},
                         {"attempts", attempts},
                         {"response", response.to_json()}};
  if (request.target) payload["target"] = *request.target;
  emit("agent_output", std::move(payload), request.player);
  return response;
}

void Game::reason_about(PlayerId observer, PlayerId target, Checkpoint checkpoint,
                        const ClassifiedStatements* view) {
  auto request = base_request(RequestKind::Reason, observer);
  request.target = target;
  request.checkpoint = checkpoint;
  if (view) request.context = ledger(observer).context(state_.alive(), *view);
  auto response = ask(std::move(request));
  if (!response.reason) return;  // belief retained

  BeliefRecord belief{observer,
                      target,
                      state_.round,
                      checkpoint,
                      response.reason->role,
                      response.reason->confidence,
                      reliability_from(response.reason->confidence, response.reason->role, state_.role_of(observer)),
                      response.reason->evidence};
  ledgers_[static_cast<std::size_t>(observer.value - 1)].record_belief(belief);
  emit("belief", belief, observer);
}

void Game::reason_all(PlayerId observer, Checkpoint checkpoint) {
  for (auto target : state_.alive()) {
    if (target != observer) reason_about(observer, target, checkpoint);
  }
}

VoteChoice Game::vote_request(PlayerId voter, RequestKind kind, const ClassifiedStatements* view) {
  auto request = base_request(kind, voter);
  request.checkpoint = kind == RequestKind::PseudoVote ? Checkpoint::PseudoVote : Checkpoint::Vote;
  if (view) request.context = ledger(voter).context(state_.alive(), *view);
  for (auto p : state_.alive()) {
    if (p != voter) request.options.push_back(p);
  }
  request.abstain_allowed = true;
  return ask(std::move(request)).choice;
}

void Game::publish_statement(PlayerId speaker, StatementKind kind, const AgentResponse& response) {
  const bool silent = response.fallback;
  const std::string text = silent ? silence_text(speaker) : response.statement;
  emit(kind == StatementKind::Campaign ? "campaign_statement" : "statement",
       {{"speaker", speaker}, {"text", text}, {"silent", silent}, {"kind", kind}}, speaker);

  StatementRecord record{speaker, state_.round, text, 0, kind, silent, log_.last_seq()};
  for (auto p : state_.alive()) {
    if (p != speaker) ledgers_[static_cast<std::size_t>(p.value - 1)].receive_statement(record);
  }
  auto& own = ledgers_[static_cast<std::size_t>(speaker.value - 1)];
  if (!silent) {
    if (kind == StatementKind::Campaign) {
      own.add_fact(state_.round, FactKind::OwnStatement,
                   fmt::format("In day {} election phase, you said: \"{}\".", state_.round, text));
    } else {
      RoundEvents events;
      events.round = state_.round;
      events.own_statement = text;
      own.update_facts(events);
    }
  }
  observe_all(ObservationKind::Statement, record.render(), speaker);
}

bool Game::finish_if(std::optional<Outcome> outcome) {
  if (!outcome) return false;
  state_.outcome = outcome;
  return true;
}

void Game::handle_deaths(std::optional<PlayerId> died) {
  const bool sheriff_died = died && state_.sheriff == died;
  const bool human_died = died && config_.human_seat == died;
  if (finish_if(check_win(state_, config_, sheriff_died ? died : std::nullopt,
                          human_died ? died : std::nullopt))) {
    return;
  }
  if (!sheriff_died) return;
  if (!config_.sheriff_succession) {
    state_.sheriff.reset();
    emit("sheriff", {{"sheriff", nullptr}, {"reason", "vacant"}, {"previous", *died}});
    return;
  }
  const auto next = succeed_sheriff(state_.alive_day, ledger(*died).beliefs());
  state_.sheriff = next;
  emit("sheriff", {{"sheriff", next}, {"reason", "succession"}, {"previous", *died}});
  const auto message = fmt::format("{} succeeded {} as the Sheriff.", player_name(next), player_name(*died));
  const auto text = state_.phase == Phase::Announcement ? night_result_fact(state_.round, message)
                                                         : day_result_fact(state_.round, message);
  for (auto p : state_.alive()) {
    ledgers_[static_cast<std::size_t>(p.value - 1)].add_fact(state_.round, FactKind::SheriffAnnouncement, text);
  }
  observe_all(ObservationKind::System, message);
}

void Game::run_night() {
  set_phase(Phase::Night);
  state_.alive_night = state_.alive_day;
  const auto alive = state_.alive();
  const int t = state_.round;

  for (auto p : alive) {
    if (state_.role_of(p) != Role::Villager) {
      reason_all(p, Checkpoint::Night);
      ledgers_[static_cast<std::size_t>(p.value - 1)].commit_split();
    }
  }

  std::map<PlayerId, std::string> own_actions;
  std::optional<PlayerId> kill;
  std::map<PlayerId, PlayerId> proposals;
  PlayerList kill_options;
  for (auto p : alive) {
    if (state_.role_of(p) != Role::Werewolf) kill_options.push_back(p);
  }
  for (auto p : alive) {
    if (state_.role_of(p) != Role::Werewolf) continue;
    auto request = base_request(RequestKind::NightKill, p);
    request.options = kill_options;
    auto response = ask(std::move(request));
    proposals[p] = *response.choice;
    emit("night_action", {{"action", "kill"}, {"target", *response.choice}, {"fallback", response.fallback}}, p);
  }
  if (!proposals.empty()) {
    std::map<PlayerId, int> counts;
    for (const auto& [wolf, target] : proposals) ++counts[target];
    int best = 0;
    for (const auto& [target, n] : counts) best = std::max(best, n);
    PlayerList top;
    for (const auto& [target, n] : counts) {
      if (n == best) top.push_back(target);
    }
    kill = top.size() == 1 ? top.front() : play_rng_.pick(top);
    for (const auto& [wolf, target] : proposals) {
      own_actions[wolf] = fmt::format("In night {} round, you chose to kill {}, and the Werewolves decided to kill {}.",
                                      t, player_name(target), player_name(*kill));
    }
  }

  std::optional<PlayerId> see;
  std::optional<Role> seen;
  std::optional<PlayerId> protect;
  for (auto p : alive) {
    const Role role = state_.role_of(p);
    if (role == Role::Seer) {
      auto request = base_request(RequestKind::NightSee, p);
      for (auto q : alive) {
        if (q != p) request.options.push_back(q);
      }
      auto response = ask(std::move(request));
      see = response.choice;
      seen = state_.role_of(*see);
      emit("night_action", {{"action", "see"}, {"target", *see}, {"role", *seen}, {"fallback", response.fallback}}, p);
      own_actions[p] = fmt::format("In night {} round, you chose to see {}, and {} is a {}.", t, player_name(*see),
                                   player_name(*see), to_string(*seen));
    } else if (role == Role::Guard) {
      auto request = base_request(RequestKind::NightProtect, p);
      request.options = alive;
      auto response = ask(std::move(request));
      protect = response.choice;
      emit("night_action", {{"action", "protect"}, {"target", *protect}, {"fallback", response.fallback}}, p);
      own_actions[p] = fmt::format("In night {} round, you chose to protect {}.", t, player_name(*protect));
    }
  }

  const auto night = resolve_night(kill, protect, see, seen);
  emit("night_result", {{"kill", choice_json(night.kill_target)},
                        {"protect", choice_json(night.protect_target)},
                        {"see", choice_json(night.seer_target)},
                        {"seen_role", night.seen_role ? nlohmann::json(*night.seen_role) : nlohmann::json(nullptr)},
                        {"death", choice_json(night.death)},
                        {"announcement", night.announcement}});

  set_phase(Phase::Announcement);
  if (night.death) {
    state_.alive_day.erase(*night.death);
    ledgers_[static_cast<std::size_t>(night.death->value - 1)].mark_dead();
  }
  for (auto p : state_.alive()) {
    RoundEvents events;
    events.round = t;
    events.night_result = night.announcement;
    if (auto it = own_actions.find(p); it != own_actions.end()) events.own_night_action = it->second;
    ledgers_[static_cast<std::size_t>(p.value - 1)].update_facts(events);
    if (auto it = own_actions.find(p); it != own_actions.end()) observe(p, ObservationKind::Private, it->second);
  }
  observe_all(ObservationKind::NightResult, night.announcement);

  if (t == 1 && config_.sheriff_mode == SheriffMode::SecretAssign && night.death == state_.designate) {
    finish_if(Outcome::Void);
    return;
  }
  if (t == 1 && config_.sheriff_mode == SheriffMode::ElectionOrVoid && night.death == state_.tested_seat) {
    finish_if(Outcome::Void);
    return;
  }
  handle_deaths(night.death);
}

void Game::run_sheriff_selection() {
  set_phase(Phase::Election);
  PlayerId winner;
  if (config_.sheriff_mode == SheriffMode::SecretAssign) {
    winner = *state_.designate;
    emit("sheriff", {{"sheriff", winner}, {"reason", "assigned"}});
  } else {
    PlayerList pool;
    for (auto p : state_.alive()) {
      if (p != config_.human_seat && p != state_.tested_seat) pool.push_back(p);
    }
    play_rng_.shuffle(pool);
    PlayerList candidates;
    if (state_.tested_seat) candidates.push_back(*state_.tested_seat);
    for (auto p : pool) {
      if (static_cast<int>(candidates.size()) >= config_.election_candidates) break;
      candidates.push_back(p);
    }
    if (candidates.empty()) throw InternalError("no Sheriff candidates");
    std::sort(candidates.begin(), candidates.end());
    emit("election", {{"candidates", candidates}});

    for (auto c : candidates) {
      auto response = ask(base_request(RequestKind::Campaign, c));
      publish_statement(c, StatementKind::Campaign, response);
    }

    std::map<PlayerId, int> counts;
    for (auto c : candidates) counts[c] = 0;
    int abstain = 0;
    for (auto p : state_.alive()) {
      auto request = base_request(RequestKind::SheriffVote, p);
      request.options = candidates;
      request.candidates = candidates;
      request.abstain_allowed = true;
      auto response = ask(std::move(request));
      if (response.choice) {
        ++counts[*response.choice];
      } else {
        ++abstain;
      }
      emit("sheriff_vote", {{"voter", p}, {"choice", choice_json(response.choice)}, {"fallback", response.fallback}}, p);
    }
    int best = 0;
    for (const auto& [c, n] : counts) best = std::max(best, n);
    PlayerList top;
    for (const auto& [c, n] : counts) {
      if (n == best) top.push_back(c);
    }
    winner = top.size() == 1 ? top.front() : play_rng_.pick(top);
    nlohmann::json tally = nlohmann::json::object();
    for (const auto& [c, n] : counts) tally[std::to_string(c.value)] = n;
    emit("election_result", {{"candidates", candidates}, {"tally", tally}, {"abstentions", abstain}, {"winner", winner}});
    emit("sheriff", {{"sheriff", winner}, {"reason", "elected"}});
  }

  state_.sheriff = winner;
  state_.first_sheriff = winner;
  const auto message = sheriff_announcement(winner);
  for (auto p : state_.alive()) {
    ledgers_[static_cast<std::size_t>(p.value - 1)].add_fact(state_.round, FactKind::SheriffAnnouncement,
                                                             day_result_fact(state_.round, message));
  }
  observe_all(ObservationKind::System, message);

  if (config_.sheriff_mode == SheriffMode::ElectionThenSwap && agents_.tested) {
    agents_.seats[winner] = agents_.tested;
    emit("rebind", {{"seat", winner}, {"agent", agents_.tested->describe()}});
  }
  if (config_.sheriff_mode == SheriffMode::ElectionOrVoid && winner != state_.tested_seat) {
    finish_if(Outcome::Void);
  }
}

void Game::run_order_step() {
  set_phase(Phase::Discussion);
  if (!state_.sheriff) {
    state_.statement_order = state_.alive();
    emit("order", {{"sheriff", nullptr}, {"side", nullptr}, {"order", state_.statement_order},
                   {"alive", state_.alive()}});
    return;
  }
  const auto sheriff = *state_.sheriff;
  reason_all(sheriff, Checkpoint::Order);
  ledgers_[static_cast<std::size_t>(sheriff.value - 1)].commit_split();

  const auto left = neighbor(state_.alive_day, sheriff, OrderSide::Left);
  const auto right = neighbor(state_.alive_day, sheriff, OrderSide::Right);
  auto request = base_request(RequestKind::OrderChoice, sheriff);
  request.checkpoint = Checkpoint::Order;
  request.options = left == right ? PlayerList{left} : PlayerList{std::min(left, right), std::max(left, right)};
  request.left_neighbor = left;
  request.right_neighbor = right;
  auto response = ask(std::move(request));
  const OrderSide side = (response.choice == left && left != right) ? OrderSide::Left : OrderSide::Right;
  state_.statement_order = determine_statement_order(state_.alive_day, sheriff, side);
  emit("order", {{"sheriff", sheriff}, {"side", side}, {"order", state_.statement_order}, {"alive", state_.alive()}},
       sheriff);
  observe_all(ObservationKind::System,
              fmt::format("{} will speak first.", player_name(state_.statement_order.front())));
}

void Game::run_discussion() {
  for (auto speaker : state_.statement_order) {
    if (speaker == state_.sheriff) continue;
    reason_all(speaker, Checkpoint::Statement);
    ledgers_[static_cast<std::size_t>(speaker.value - 1)].commit_split();
    auto response = ask(base_request(RequestKind::Statement, speaker));
    publish_statement(speaker, StatementKind::Discussion, response);
  }
}

void Game::run_pseudo_votes() {
  if (!state_.sheriff) return;
  set_phase(Phase::PseudoVote);
  const auto sheriff = *state_.sheriff;
  const int t = state_.round;
  auto exclude = [&](const StatementRecord& s) {
    return s.speaker == sheriff && s.round == t && s.kind == StatementKind::Sheriff;
  };
  for (auto voter : state_.statement_order) {
    if (voter == sheriff) continue;
    const auto& own = ledger(voter);
    auto view = own.provisional_split(exclude);
    reason_about(voter, sheriff, Checkpoint::PseudoVote, &view);
    view = own.provisional_split(exclude);
    auto choice = vote_request(voter, RequestKind::PseudoVote, &view);
    emit("pseudo_vote", {{"voter", voter}, {"choice", choice_json(choice)}}, voter);
  }
}

void Game::run_sheriff_statement() {
  if (!state_.sheriff) return;
  set_phase(Phase::Discussion);
  const auto sheriff = *state_.sheriff;
  reason_all(sheriff, Checkpoint::Statement);
  ledgers_[static_cast<std::size_t>(sheriff.value - 1)].commit_split();
  auto response = ask(base_request(RequestKind::SheriffStatement, sheriff));
  publish_statement(sheriff, StatementKind::Sheriff, response);
}

void Game::run_voting_and_resolution() {
  set_phase(Phase::Voting);
  std::vector<VoteRecord> votes;
  for (auto voter : state_.statement_order) {
    reason_all(voter, Checkpoint::Vote);
    ledgers_[static_cast<std::size_t>(voter.value - 1)].commit_split();
    auto choice = vote_request(voter, RequestKind::Vote);
    votes.push_back(VoteRecord{voter, choice, VoteKind::Final});
    emit("vote", {{"voter", voter}, {"choice", choice_json(choice)}}, voter);
  }

  set_phase(Phase::Resolution);
  const auto day = tally_votes(votes, config_.tie_policy, &play_rng_);
  nlohmann::json tally = nlohmann::json::object();
  for (const auto& [p, n] : day.tally) tally[std::to_string(p.value)] = n;
  emit("day_result", {{"tally", tally},
                      {"abstentions", day.abstentions},
                      {"eliminated", choice_json(day.eliminated)},
                      {"announcement", day.announcement}});

  RoundEvents events;
  events.round = state_.round;
  for (const auto& v : votes) events.votes.push_back(VoteFact{v.voter, v.choice});
  events.day_result = day.announcement;
  for (auto p : state_.alive()) {
    auto& own = ledgers_[static_cast<std::size_t>(p.value - 1)];
    own.update_facts(events);
    own.end_round();
  }
  for (const auto& v : votes) observe_all(ObservationKind::VoteResult, vote_fact(state_.round, VoteFact{v.voter, v.choice}));
  observe_all(ObservationKind::VoteResult, day.announcement);

  if (day.eliminated) {
    state_.alive_day.erase(*day.eliminated);
    ledgers_[static_cast<std::size_t>(day.eliminated->value - 1)].mark_dead();
  }
  handle_deaths(day.eliminated);
}

bool Game::play_round() {
  run_night();
  if (state_.outcome) return false;
  if (state_.round == 1) {
    run_sheriff_selection();
    if (state_.outcome) return false;
  }
  run_order_step();
  run_discussion();
  run_pseudo_votes();
  run_sheriff_statement();
  run_voting_and_resolution();
  return !state_.outcome;
}

GameResult Game::run(AgentSet agents, LogSink& sink) {
  agents_ = std::move(agents);
  sink_ = &sink;
  for (auto p : state_.players()) agents_.at(p);

  log_.header.game_id = config_.game_id;
  log_.header.setting = config_.setting;
  log_.header.config = config_.to_json();
  log_.header.seed = config_.seed;
  log_.header.roles = state_.roles;
  for (auto p : state_.players()) log_.header.seat_agents.push_back(agents_.at(p).describe());

  try {
    sink_->header(log_.header);
    emit("game_start", {{"roles", state_.roles},
                        {"sheriff_mode", config_.sheriff_mode},
                        {"designate", choice_json(state_.designate)},
                        {"tested_seat", choice_json(state_.tested_seat)}});
    for (auto p : state_.players()) {
      for (const auto& fact : ledger(p).facts()) observe(p, ObservationKind::Private, fact.text);
    }

    while (!state_.outcome) {
      if (finish_if(check_win(state_, config_))) break;
      if (!play_round()) break;
      ++state_.round;
    }

    state_.phase = Phase::Ended;
    const auto outcome = *state_.outcome;
    emit("outcome", {{"outcome", outcome},
                     {"winner", team_of(outcome)},
                     {"alive", state_.alive()},
                     {"sheriff", choice_json(state_.sheriff)},
                     {"first_sheriff", choice_json(state_.first_sheriff)}});
    observe_all(ObservationKind::System, fmt::format("The game is over: {}.", to_string(outcome)));
    sink_->close();
  } catch (const IoError&) {
    log_.partial = true;
  }

  GameResult result{log_, state_, gateway_failures_, invalid_outputs_};
  return result;
}

GameResult run_game(const GameConfig& config, AgentSet agents, LogSink& sink) {
  Game game(config);
  return game.run(std::move(agents), sink);
}

}  // namespace werewolf
