// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "metric_fixtures.hpp"
#include "support.hpp"
#include "werewolf/experiment.hpp"
#include "werewolf/ledger.hpp"
#include "werewolf/llm_agent.hpp"
#include "werewolf/metrics.hpp"
#include "werewolf/replay.hpp"
#include "werewolf/rng.hpp"
#include "werewolf/wwqa.hpp"

#ifndef WEREWOLF_FIXTURES
#define WEREWOLF_FIXTURES "tests/fixtures"
#endif

using namespace werewolf;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

GameResult scripted(const GameConfig& cfg, ScriptedPolicy policy, MemorySink& sink) {
  return run_game(cfg, AgentSet::uniform(std::make_shared<ScriptedAgent>(std::move(policy))), sink);
}

void reliability_table() {
  int n = 0;
  for (int c = kMinConfidence; c <= kMaxConfidence; ++c) {
    for (auto g : {RoleGuess::Werewolf, RoleGuess::Seer, RoleGuess::Guard, RoleGuess::Villager, RoleGuess::Uncertain}) {
      for (auto r : {Role::Werewolf, Role::Villager, Role::Seer, Role::Guard}) {
        expect(reliability_from(c, g, r) == testkit::reliability_oracle(c, g, r),
               fmt::format("c={} guess={} observer={}", c, to_string(g), to_string(r)));
        ++n;
      }
    }
  }
  expect(n == 120, "table size");
}

void split_property() {
  SeededRng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<StatementRecord> pool;
    std::map<PlayerId, int> scores;
    for (int p = 1; p <= 7; ++p) {
      if (rng.index(5) != 0) scores[PlayerId{p}] = 5 + static_cast<int>(rng.index(6));
    }
    const auto n = rng.index(10);
    for (std::size_t i = 0; i < n; ++i) {
      StatementRecord s;
      s.speaker = PlayerId{static_cast<int>(rng.index(7)) + 1};
      s.round = 1;
      s.text = fmt::format("s{}", i);
      pool.push_back(s);
    }
    auto split = split_statements(pool, scores, kDefaultAlpha);
    expect(split.truths.size() + split.falsehoods.size() == pool.size(), "partition size");
    std::size_t ti = 0, fi = 0;
    for (const auto& s : pool) {
      const int m = scores.contains(s.speaker) ? scores.at(s.speaker) : kMinConfidence;
      if (m > kDefaultAlpha) {
        expect(ti < split.truths.size() && split.truths[ti++].text == s.text, "truth order");
      } else {
        expect(fi < split.falsehoods.size() && split.falsehoods[fi++].text == s.text, "falsehood order");
      }
    }
  }
  StatementRecord six, seven;
  six.speaker = PlayerId{1};
  seven.speaker = PlayerId{2};
  const std::vector<StatementRecord> edge_pool{six, seven};
  auto edge = split_statements(edge_pool, {{PlayerId{1}, 6}, {PlayerId{2}, 7}}, kDefaultAlpha);
  expect(edge.falsehoods.size() == 1 && edge.falsehoods[0].speaker == PlayerId{1}, "m = 6 is a falsehood");
  expect(edge.truths.size() == 1 && edge.truths[0].speaker == PlayerId{2}, "m = 7 is a truth");
}

void win_oracle() {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto cfg = testkit::scripted_config(seed);
    auto state = init_game(cfg);
    for (int mask = 0; mask < 128; ++mask) {
      state.alive_day.clear();
      std::vector<Role> alive;
      for (int i = 0; i < 7; ++i) {
        if (mask & (1 << i)) {
          state.alive_day.insert(PlayerId{i + 1});
          alive.push_back(state.roles[static_cast<std::size_t>(i)]);
        }
      }
      expect(check_win(state, cfg) == testkit::win_oracle(alive), fmt::format("seed {} mask {}", seed, mask));
    }
  }
}

void metric_fixtures() {
  auto fixtures = testkit::metric_fixtures();
  expect(fixtures.size() == 20, "fixture count");
  bool ratio_one = false, ratio_two = false;
  for (const auto& f : fixtures) {
    const double r = ratio(f.log), dc = decision_change(f.log), dcs = decision_change_any(f.log);
    expect(std::abs(r - f.ratio.value()) < 1e-12, f.name + ": ratio");
    expect(std::abs(dc - f.dc.value()) < 1e-12, f.name + ": dc");
    expect(std::abs(dcs - f.dc_star.value()) < 1e-12, f.name + ": dc*");
    expect(dcs >= dc - 1e-15, f.name + ": dc* below dc");
    ratio_one |= f.ratio.num == f.ratio.den;
    ratio_two |= f.ratio.num == 2 * f.ratio.den;
  }
  expect(ratio_one && ratio_two, "ratio 1 and 2 cases present");
}

void determinism_and_replay() {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto mode = seed % 3 == 0 ? SheriffMode::Election : seed % 3 == 1 ? SheriffMode::SecretAssign
                                                                              : SheriffMode::ElectionOrVoid;
    auto cfg = testkit::scripted_config(seed, mode);
    MemorySink a, b;
    const auto first = scripted(cfg, testkit::varied_policy(), a).log.serialize();
    const auto second = scripted(cfg, testkit::varied_policy(), b).log.serialize();
    expect(first == second, fmt::format("seed {}: runs differ", seed));
    expect(replay(GameLog::parse(first)).log.serialize() == first, fmt::format("seed {}: replay differs", seed));
  }
}

void fallback_conformance() {
  ScriptedPolicy p = ScriptedPolicy::lowest_id();
  for (auto k : {RequestKind::Reason, RequestKind::NightKill, RequestKind::NightSee, RequestKind::NightProtect,
                 RequestKind::Statement, RequestKind::SheriffStatement, RequestKind::Vote, RequestKind::PseudoVote,
                 RequestKind::OrderChoice, RequestKind::Campaign, RequestKind::SheriffVote}) {
    p.malformed.insert(k);
  }
  std::set<int> night_targets;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto cfg = testkit::scripted_config(seed, SheriffMode::Election);
    MemorySink sink, again;
    auto result = scripted(cfg, p, sink);
    expect(result.log.serialize() == scripted(cfg, p, again).log.serialize(), "fallback play not reproducible");
    expect(result.log.of_type("belief").empty(), "belief updated after malformed reason");
    std::set<int> alive{1, 2, 3, 4, 5, 6, 7};
    for (const auto& e : result.log.events()) {
      if (e.type == "statement" || e.type == "campaign_statement") {
        const auto speaker = e.payload.at("speaker").get<PlayerId>();
        expect(e.payload.at("silent") == true, "statement not silent");
        expect(e.payload.at("text") == player_name(speaker) + " said nothing", "silence text");
      } else if (e.type == "vote" || e.type == "pseudo_vote" || e.type == "sheriff_vote") {
        expect(e.payload.at("choice").is_null(), e.type + " did not abstain");
      } else if (e.type == "night_action") {
        const int actor = e.actor->value;
        const int target = e.payload.at("target").get<int>();
        const auto action = e.payload.at("action").get<std::string>();
        expect(e.payload.at("fallback") == true, "night action not a fallback");
        expect(alive.contains(target), "night target not alive");
        if (action == "kill") {
          expect(result.log.header.roles[static_cast<std::size_t>(target - 1)] != Role::Werewolf, "wolf targeted");
        }
        if (action == "see") expect(target != actor, "seer saw self");
        night_targets.insert(target);
      } else if (e.type == "night_result" && !e.payload.at("death").is_null()) {
        alive.erase(e.payload.at("death").get<int>());
      } else if (e.type == "day_result" && !e.payload.at("eliminated").is_null()) {
        alive.erase(e.payload.at("eliminated").get<int>());
      }
    }
  }
  expect(night_targets.size() > 2, "night fallback choices never vary");
}

std::map<int, std::vector<nlohmann::json>> read_players(const fs::path& dir) {
  std::map<int, std::vector<nlohmann::json>> out;
  for (int seat = 1; seat <= 7; ++seat) {
    std::ifstream in(dir / fmt::format("player_{}.jsonl", seat));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) out[seat].push_back(nlohmann::json::parse(line));
    }
  }
  return out;
}

void pseudo_vote_blindness() {
  int audited = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    MemorySink sink;
    auto result = scripted(testkit::scripted_config(seed, SheriffMode::Election), testkit::varied_policy(), sink);
    auto v = testkit::audit_prompts(result.log, sink.players);
    expect(v.empty(), v.empty() ? "" : v.front());
    ++audited;
  }
  for (const auto& dir : find_game_logs(fs::path(WEREWOLF_FIXTURES) / "corpus")) {
    auto v = testkit::audit_prompts(GameLog::load(dir / "game.jsonl"), read_players(dir));
    expect(v.empty(), v.empty() ? "" : dir.filename().string() + ": " + v.front());
    ++audited;
  }
  expect(audited > 20, "corpus not found");
}

void void_rule() {
  int voids = 0;
  std::vector<GameLog> valid, all;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto cfg = testkit::scripted_config(seed);
    const auto state = init_game(cfg);
    const PlayerId designate = *state.designate;
    if (state.role_of(designate) == Role::Werewolf) continue;
    ScriptedPolicy p = testkit::varied_policy();
    p.night = [designate](const ActionRequest& r) {
      if (r.kind == RequestKind::NightKill) return designate;
      for (auto o : r.options) {
        if (o != designate) return o;
      }
      return r.options.front();
    };
    MemorySink sink;
    auto result = scripted(cfg, p, sink);
    expect(result.log.outcome() == Outcome::Void, fmt::format("seed {}: not void", seed));
    auto m = game_metrics(result.log);
    expect(!m.ratio && !m.dc && !m.dc_star && !m.completed, "void game has metrics");
    all.push_back(result.log);
    ++voids;
    MemorySink other;
    auto normal = scripted(testkit::scripted_config(seed + 100), testkit::varied_policy(), other);
    if (normal.log.outcome() != Outcome::Void) valid.push_back(normal.log);
    all.push_back(normal.log);
  }
  expect(voids >= 5, "too few designate kills");
  auto with_void = compute_report(all).to_json();
  auto without = compute_report(valid).to_json();
  expect(with_void["n_void"] == static_cast<int>(all.size() - valid.size()), "void count");
  for (const char* key : {"ratio", "dc", "dc_star", "n_games", "n_rounds", "per_role", "completion_rate", "win_rate"}) {
    expect(with_void[key] == without[key], fmt::format("void games changed {}", key));
  }
}

void spearman_oracle() {
  SeededRng rng(4242);
  int checked = 0, ties = 0;
  while (checked < 500) {
    const auto n = 2 + rng.index(10);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(static_cast<double>(rng.index(5)));
      y.push_back(static_cast<double>(rng.index(7)));
    }
    auto want = testkit::spearman_oracle(x, y);
    if (!want) continue;
    ties += std::set<double>(x.begin(), x.end()).size() < n;
    expect(std::abs(spearman(x, y) - *want) < 1e-12, fmt::format("case {}", checked));
    ++checked;
  }
  expect(ties > 100, "too few tied cases");
}

int count_examples(const std::string& text) {
  int n = 0;
  for (auto pos = text.find("Example "); pos != std::string::npos; pos = text.find("Example ", pos + 1)) ++n;
  return n;
}

void binary_qa_and_wwqa() {
  auto e = wwqa::binary_scores(40, 10, 10, 40);
  expect(std::abs(e.accuracy - 0.8) < 1e-12, fmt::format("accuracy {}", e.accuracy));
  expect(std::abs(e.f1 - 0.8) < 1e-12, fmt::format("f1 {}", e.f1));

  SeededRng rng(3);
  const auto seeds = wwqa::initial_pool(wwqa::QaKind::RuleBased);
  std::vector<wwqa::QAPair> pool;
  for (int i = 0; i < 10; ++i) {
    pool.push_back({fmt::format("Generated {}?", i), "", wwqa::QaKind::RuleBased, wwqa::Provenance::Generated});
  }
  auto first = wwqa::question_prompt(seeds, pool, 1, rng);
  expect(first.human_examples.size() == 5 && first.generated_examples.empty(), "iteration 1 mix");
  expect(count_examples(first.text) == 5, "iteration 1 example count");
  auto fourth = wwqa::question_prompt(seeds, pool, 4, rng);
  expect(fourth.human_examples.size() == 2 && fourth.generated_examples.size() == 3, "iteration 4 mix");
  expect(count_examples(fourth.text) == 5, "iteration 4 example count");
}

void offline_batch() {
  const fs::path fixtures(WEREWOLF_FIXTURES);
  std::shared_ptr<ReplayGateway> gw(ReplayGateway::load(fixtures / "corpus" / "heterogeneous"));
  expect(gw->size() > 0, "empty corpus");
  const auto out = fs::temp_directory_path() / fmt::format("werewolf-acceptance-{}", ::getpid());
  fs::remove_all(out);

  ExperimentSpec spec;
  spec.setting = Setting::Heterogeneous;
  spec.n_games = 6;
  spec.base.max_rounds = 6;
  spec.out_dir = out;
  spec.tested.name = "tested";
  spec.baseline.name = "baseline";
  spec.factory = [gw](Binding b, const GameConfig&) -> std::shared_ptr<Agent> {
    return std::make_shared<LlmAgent>(gw, b == Binding::Tested ? "tested" : "baseline");
  };
  auto batch = run_batch(spec);
  fs::remove_all(out);

  std::ifstream in(fixtures / "golden_heterogeneous.json");
  expect(in.good(), "golden report missing");
  const auto golden = nlohmann::json::parse(in);
  expect(batch.n_valid >= 5, fmt::format("{} valid games", batch.n_valid));
  expect(gw->misses() == 0, fmt::format("{} replay misses", gw->misses()));
  expect(batch.to_json() == golden, "batch report differs from the golden file");
}

struct Criterion {
  std::string name;
  double budget_s;
  std::function<void()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"reliability table matches the lookup oracle", 1, reliability_table},
      {"split operator partition and alpha boundary (1000 cases)", 5, split_property},
      {"win rule over every alive subset", 1, win_oracle},
      {"ratio / dc / dc* on 20 hand-computed fixtures", 5, metric_fixtures},
      {"50 scripted games deterministic and replayable", 30, determinism_and_replay},
      {"fallback conformance with malformed agents", 10, fallback_conformance},
      {"pseudo-vote blindness audit", 5, pseudo_vote_blindness},
      {"void rule and zero metric contribution", 5, void_rule},
      {"spearman against brute-force ranks (500 cases)", 5, spearman_oracle},
      {"binary QA scores and WWQA example mix", 5, binary_qa_and_wwqa},
      {"offline heterogeneous batch matches golden report", 60, offline_batch},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      c.run();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (error.empty() && secs > c.budget_s) error = fmt::format("took {:.2f}s, budget {:.0f}s", secs, c.budget_s);
    if (error.empty()) {
      std::cout << fmt::format("PASS  {} ({:.2f}s)\n", c.name, secs);
    } else {
      ++failed;
      std::cout << fmt::format("FAIL  {} ({:.2f}s): {}\n", c.name, secs, error);
    }
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
