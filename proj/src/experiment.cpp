#include "werewolf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

namespace werewolf {

namespace {

struct SettingName {
  Setting setting;
  std::string_view name;
};

constexpr SettingName kSettingNames[] = {
    {Setting::Heterogeneous, "heterogeneous"},
    {Setting::Homogeneous, "homogeneous"},
    {Setting::HomogeneousVariant1, "homogeneous-variant1"},
    {Setting::HeterogeneousVariant1, "heterogeneous-variant1"},
    {Setting::HeterogeneousVariant2, "heterogeneous-variant2"},
    {Setting::HumanEvaluation, "human-evaluation"},
    {Setting::HumanBaseline, "human-baseline"},
};

std::string normalize(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '_' || c == ' ') {
      out += '-';
    } else {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

struct Job {
  std::uint64_t seed = 0;
  int repeat = 0;
  std::optional<std::uint64_t> replaces;
};

Binding binding_for(Setting setting, const GameState& initial, const GameConfig& config, PlayerId p) {
  switch (setting) {
    case Setting::Heterogeneous: return p == initial.designate ? Binding::Tested : Binding::Baseline;
    case Setting::Homogeneous:
    case Setting::HomogeneousVariant1: return Binding::Tested;
    case Setting::HeterogeneousVariant1: return Binding::Baseline;
    case Setting::HeterogeneousVariant2: return p == initial.tested_seat ? Binding::Tested : Binding::Baseline;
    case Setting::HumanEvaluation:
    case Setting::HumanBaseline: return p == config.human_seat ? Binding::Human : Binding::Tested;
  }
  return Binding::Tested;
}

std::string seat_label(const ExperimentSpec& spec, const GameState& initial, const GameConfig& config, PlayerId p) {
  switch (binding_for(spec.setting, initial, config, p)) {
    case Binding::Tested: return spec.tested.model.empty() ? spec.tested.name : spec.tested.model;
    case Binding::Baseline: return spec.baseline.model.empty() ? spec.baseline.name : spec.baseline.model;
    case Binding::Human: return "human";
  }
  return {};
}

}  // namespace

std::string_view to_string(Setting setting) {
  for (const auto& s : kSettingNames) {
    if (s.setting == setting) return s.name;
  }
  return "?";
}

std::optional<Setting> parse_setting(std::string_view text) {
  const auto key = normalize(text);
  for (const auto& s : kSettingNames) {
    if (s.name == key) return s.setting;
  }
  // accept the compact spellings too, e.g. "homogeneousvariant1"
  for (const auto& s : kSettingNames) {
    std::string compact(s.name);
    std::erase(compact, '-');
    if (compact == key) return s.setting;
  }
  return std::nullopt;
}

GameConfig config_for(Setting setting, const GameConfig& base) {
  GameConfig c = base;
  c.setting = std::string(to_string(setting));
  c.stop_on_sheriff_death = false;
  c.sheriff_succession = false;
  c.stop_on_human_death = false;
  switch (setting) {
    case Setting::Heterogeneous:
      c.sheriff_mode = SheriffMode::SecretAssign;
      c.stop_on_sheriff_death = true;
      c.human_seat.reset();
      break;
    case Setting::Homogeneous:
      c.sheriff_mode = SheriffMode::SecretAssign;
      c.sheriff_succession = true;
      c.human_seat.reset();
      break;
    case Setting::HomogeneousVariant1:
      c.sheriff_mode = SheriffMode::Election;
      c.sheriff_succession = true;
      c.human_seat.reset();
      break;
    case Setting::HeterogeneousVariant1:
      c.sheriff_mode = SheriffMode::ElectionThenSwap;
      c.stop_on_sheriff_death = true;
      c.human_seat.reset();
      break;
    case Setting::HeterogeneousVariant2:
      c.sheriff_mode = SheriffMode::ElectionOrVoid;
      c.stop_on_sheriff_death = true;
      c.human_seat.reset();
      break;
    case Setting::HumanEvaluation:
      c.sheriff_mode = SheriffMode::Election;
      c.sheriff_succession = true;
      c.stop_on_human_death = true;
      if (!c.human_seat) c.human_seat = PlayerId{1};
      break;
    case Setting::HumanBaseline:
      c.sheriff_mode = SheriffMode::SecretAssign;
      c.stop_on_sheriff_death = true;
      if (!c.human_seat) c.human_seat = PlayerId{1};
      break;
  }
  return c;
}

AgentSet bind_agents(Setting setting, const GameState& initial, const GameConfig& config,
                     const AgentFactory& factory) {
  if (!factory) throw ConfigError("no agent factory configured");
  AgentSet set;
  auto tested = factory(Binding::Tested, config);
  std::shared_ptr<Agent> baseline;
  auto get_baseline = [&] {
    if (!baseline) baseline = factory(Binding::Baseline, config);
    return baseline;
  };
  std::shared_ptr<Agent> human;
  if (config.human_seat) human = factory(Binding::Human, config);

  for (int i = 1; i <= initial.n_players(); ++i) {
    const PlayerId p{i};
    switch (binding_for(setting, initial, config, p)) {
      case Binding::Tested: set.seats[p] = tested; break;
      case Binding::Baseline: set.seats[p] = get_baseline(); break;
      case Binding::Human: set.seats[p] = human; break;
    }
  }
  set.tested = tested;
  return set;
}

std::string game_id_for(Setting setting, std::uint64_t seed, int repeat) {
  return fmt::format("{}-s{}-r{}", to_string(setting), seed, repeat);
}

int ExperimentSpec::resolved_games() const {
  if (n_games) return *n_games;
  if (!seeds.empty()) return static_cast<int>(seeds.size()) * repeats;
  return 30;
}

nlohmann::json GameRecord::to_json() const {
  return {{"game_id", game_id},
          {"seed", seed},
          {"repeat", repeat},
          {"replaces_seed", replaces_seed ? nlohmann::json(*replaces_seed) : nlohmann::json(nullptr)},
          {"outcome", outcome},
          {"partial", partial},
          {"gateway_failures", gateway_failures},
          {"invalid_outputs", invalid_outputs},
          {"metrics", metrics.to_json()}};
}

nlohmann::json BatchReport::to_json() const {
  auto items = nlohmann::json::array();
  for (const auto& g : games) items.push_back(g.to_json());
  return {{"setting", setting},       {"n_requested", n_requested},
          {"n_valid", n_valid},       {"n_void", n_void},
          {"attempts", attempts},     {"incomplete", incomplete},
          {"incomplete_reason", incomplete_reason},
          {"games", items},           {"metrics", metrics.to_json()}};
}

BatchReport run_batch(const ExperimentSpec& spec) {
  if (spec.repeats < 1) throw ConfigError("repeats must be at least 1");
  const int wanted = spec.resolved_games();
  if (wanted < 1) throw ConfigError("n_games must be at least 1");
  spec.base.validate();

  std::vector<std::uint64_t> seeds = spec.seeds;
  if (seeds.empty()) {
    const int n_seeds = (wanted + spec.repeats - 1) / spec.repeats;
    for (int i = 1; i <= n_seeds; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  }
  std::vector<Job> wave;
  for (auto seed : seeds) {
    for (int r = 0; r < spec.repeats && static_cast<int>(wave.size()) < wanted; ++r) wave.push_back({seed, r, {}});
  }

  const std::string batch = spec.batch_name.empty() ? std::string(to_string(spec.setting)) : spec.batch_name;
  const std::filesystem::path batch_dir = spec.out_dir.empty() ? std::filesystem::path() : spec.out_dir / batch;
  SeededRng resim(mix_seed(seeds.front(), 0x7265'7369'6d75'6c61ULL));
  const int cap = kResimulationFactor * wanted;

  struct Finished {
    Job job;
    GameRecord record;
    GameLog log;
  };
  std::vector<Finished> done;
  std::mutex done_mutex;
  int attempts = 0;

  auto run_one = [&](const Job& job) {
    GameConfig config = config_for(spec.setting, spec.base);
    config.seed = job.seed;
    config.repeat = job.repeat;
    config.game_id = game_id_for(spec.setting, job.seed, job.repeat);
    const GameState initial = init_game(config);
    for (int i = 1; i <= initial.n_players(); ++i) {
      config.seat_models[i] = seat_label(spec, initial, config, PlayerId{i});
    }
    Game game(config);
    auto agents = bind_agents(spec.setting, game.state(), config, spec.factory);

    std::unique_ptr<LogSink> sink;
    if (batch_dir.empty()) {
      sink = std::make_unique<NullSink>();
    } else {
      sink = std::make_unique<DirectorySink>(batch_dir / config.game_id);
    }
    auto result = game.run(std::move(agents), *sink);

    GameRecord record;
    record.game_id = config.game_id;
    record.seed = job.seed;
    record.repeat = job.repeat;
    record.replaces_seed = job.replaces;
    record.outcome = result.state.outcome.value_or(Outcome::Void);
    record.partial = result.log.partial;
    record.gateway_failures = result.gateway_failures;
    record.invalid_outputs = result.invalid_outputs;
    record.metrics = game_metrics(result.log);
    std::lock_guard lock(done_mutex);
    done.push_back(Finished{job, std::move(record), std::move(result.log)});
  };

  auto run_wave = [&](const std::vector<Job>& jobs) {
    const int threads = std::clamp(spec.parallel, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        try {
          run_one(jobs[i]);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  };

  auto key = [](const Job& j) { return std::make_tuple(j.replaces.value_or(j.seed), j.repeat, j.seed); };
  int valid = 0;
  while (!wave.empty()) {
    attempts += static_cast<int>(wave.size());
    const auto before = done.size();
    run_wave(wave);
    std::vector<Job> voided;
    for (std::size_t i = before; i < done.size(); ++i) {
      if (done[i].record.outcome == Outcome::Void) {
        voided.push_back(done[i].job);
      } else {
        ++valid;
      }
    }
    std::sort(voided.begin(), voided.end(), [&](const Job& a, const Job& b) { return key(a) < key(b); });
    wave.clear();
    for (const auto& v : voided) {
      if (valid + static_cast<int>(wave.size()) >= wanted || attempts + static_cast<int>(wave.size()) >= cap) break;
      wave.push_back(Job{resim.next() >> 34, v.repeat, v.replaces.value_or(v.seed)});
    }
  }

  std::sort(done.begin(), done.end(), [&](const Finished& a, const Finished& b) { return key(a.job) < key(b.job); });

  BatchReport out;
  out.setting = std::string(to_string(spec.setting));
  out.n_requested = wanted;
  out.attempts = attempts;
  std::vector<GameLog> logs;
  int gateway = 0;
  int partial = 0;
  for (auto& f : done) {
    if (f.record.outcome == Outcome::Void) {
      ++out.n_void;
    } else {
      ++out.n_valid;
    }
    gateway += f.record.gateway_failures;
    if (f.record.partial) ++partial;
    out.games.push_back(f.record);
    if (!f.record.partial) logs.push_back(std::move(f.log));
  }
  out.metrics = compute_report(logs, spec.setting == Setting::Homogeneous ||
                                         spec.setting == Setting::HomogeneousVariant1);

  std::vector<std::string> reasons;
  if (out.n_valid < wanted) reasons.push_back(fmt::format("{} of {} valid games", out.n_valid, wanted));
  if (gateway > 0) reasons.push_back(fmt::format("{} gateway failures", gateway));
  if (partial > 0) reasons.push_back(fmt::format("{} aborted games", partial));
  out.incomplete = !reasons.empty();
  for (const auto& r : reasons) {
    if (!out.incomplete_reason.empty()) out.incomplete_reason += "; ";
    out.incomplete_reason += r;
  }

  if (!batch_dir.empty()) {
    std::filesystem::create_directories(batch_dir);
    std::ofstream json(batch_dir / "report.json", std::ios::binary | std::ios::trunc);
    json << out.to_json().dump(2) << "\n";
    std::ofstream text(batch_dir / "report.txt", std::ios::binary | std::ios::trunc);
    text << report(out);
    if (!json || !text) throw IoError(fmt::format("cannot write report in {}", batch_dir.string()));
  }
  return out;
}

std::string report(const BatchReport& batch) {
  std::string out;
  if (batch.incomplete) out += fmt::format("INCOMPLETE: {}\n", batch.incomplete_reason);
  out += fmt::format("setting: {}\n", batch.setting);
  out += fmt::format("valid games: {} / {} requested ({} void, {} attempts)\n", batch.n_valid, batch.n_requested,
                     batch.n_void, batch.attempts);
  out += batch.metrics.to_text();
  out += fmt::format("\n{:<36}{:>14}{:>8}{:>8}{:>8}{:>8}\n", "game", "outcome", "T", "Ratio", "DC", "DC*");
  for (const auto& g : batch.games) {
    auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string("-"); };
    out += fmt::format("{:<36}{:>14}{:>8}{:>8}{:>8}{:>8}\n", g.game_id, to_string(g.outcome), g.metrics.rounds,
                       cell(g.metrics.ratio), cell(g.metrics.dc), cell(g.metrics.dc_star));
  }
  return out;
}

}  // namespace werewolf
