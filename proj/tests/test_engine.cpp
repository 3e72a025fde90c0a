#include <doctest.h>

#include <set>

#include "support.hpp"
#include "werewolf/engine.hpp"
#include "werewolf/metrics.hpp"

using namespace werewolf;

namespace {
GameResult play(const GameConfig& c, ScriptedPolicy policy = testkit::varied_policy()) {
  MemorySink sink;
  return run_game(c, AgentSet::uniform(std::make_shared<ScriptedAgent>(std::move(policy))), sink);
}

std::set<PlayerId> seats(std::initializer_list<int> ids) {
  std::set<PlayerId> out;
  for (int i : ids) out.insert(PlayerId{i});
  return out;
}
}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("role multiset") {
    auto roles = standard_roles();
    CHECK(std::count(roles.begin(), roles.end(), Role::Werewolf) == 2);
    CHECK(std::count(roles.begin(), roles.end(), Role::Villager) == 3);
    CHECK(std::count(roles.begin(), roles.end(), Role::Seer) == 1);
    CHECK(std::count(roles.begin(), roles.end(), Role::Guard) == 1);
  }

  TEST_CASE("roles depend on the seed only") {
    auto a = testkit::scripted_config(9);
    auto b = a;
    b.repeat = 2;
    CHECK(init_game(a).roles == init_game(b).roles);
    CHECK(init_game(a).designate == init_game(b).designate);
    bool varies = false;
    for (std::uint64_t s = 1; s < 20; ++s) varies |= init_game(testkit::scripted_config(s)).roles != init_game(a).roles;
    CHECK(varies);
  }

  TEST_CASE("win rule over every alive subset") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      auto cfg = testkit::scripted_config(seed);
      cfg.max_rounds = 100;
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
        CHECK(rule_winner(alive) == testkit::win_oracle(alive));
        CHECK(check_win(state, cfg) == testkit::win_oracle(alive));
      }
    }
  }

  TEST_CASE("stop conditions come after the rule") {
    auto cfg = testkit::scripted_config(1);
    cfg.stop_on_sheriff_death = true;
    auto state = init_game(cfg);
    CHECK(check_win(state, cfg, PlayerId{1}) == Outcome::SheriffEliminated);
    state.round = cfg.max_rounds + 1;
    CHECK(check_win(state, cfg) == Outcome::RoundCapReached);
    for (auto w : state.werewolves()) state.alive_day.erase(w);
    CHECK(check_win(state, cfg, PlayerId{1}) == Outcome::VillagerWin);
  }

  TEST_CASE("night resolution") {
    auto saved = resolve_night(PlayerId{3}, PlayerId{3}, std::nullopt, std::nullopt);
    CHECK_FALSE(saved.death);
    CHECK(saved.announcement == "No player was killed.");
    auto killed = resolve_night(PlayerId{3}, PlayerId{4}, std::nullopt, std::nullopt);
    CHECK(killed.death == PlayerId{3});
    CHECK(killed.announcement == "player_3 was killed.");
  }

  TEST_CASE("vote tally") {
    std::vector<VoteRecord> votes{{PlayerId{1}, PlayerId{2}}, {PlayerId{3}, PlayerId{2}}, {PlayerId{2}, PlayerId{3}},
                                  {PlayerId{4}, std::nullopt}};
    auto out = tally_votes(votes, TiePolicy::NoElimination, nullptr);
    CHECK(out.eliminated == PlayerId{2});
    CHECK(out.tally.at(PlayerId{2}) == 2);
    CHECK(out.abstentions == 1);

    std::vector<VoteRecord> tie{{PlayerId{1}, PlayerId{2}}, {PlayerId{2}, PlayerId{1}}};
    CHECK_FALSE(tally_votes(tie, TiePolicy::NoElimination, nullptr).eliminated);
    SeededRng a(3), b(3);
    auto x = tally_votes(tie, TiePolicy::SeededRandom, &a);
    REQUIRE(x.eliminated);
    CHECK(x.eliminated == tally_votes(tie, TiePolicy::SeededRandom, &b).eliminated);
    CHECK_THROWS_AS(tally_votes(tie, TiePolicy::SeededRandom, nullptr), InternalError);

    std::vector<VoteRecord> nobody{{PlayerId{1}, std::nullopt}};
    CHECK_FALSE(tally_votes(nobody, TiePolicy::SeededRandom, &a).eliminated);
  }

  TEST_CASE("statement order") {
    auto alive = seats({1, 2, 4, 5, 7});
    CHECK(determine_statement_order(alive, PlayerId{4}, OrderSide::Right) ==
          PlayerList{PlayerId{5}, PlayerId{7}, PlayerId{1}, PlayerId{2}, PlayerId{4}});
    CHECK(determine_statement_order(alive, PlayerId{4}, OrderSide::Left) ==
          PlayerList{PlayerId{2}, PlayerId{1}, PlayerId{7}, PlayerId{5}, PlayerId{4}});
    CHECK(neighbor(alive, PlayerId{7}, OrderSide::Right) == PlayerId{1});
    CHECK(neighbor(alive, PlayerId{1}, OrderSide::Left) == PlayerId{7});
    CHECK_THROWS_AS(determine_statement_order(alive, PlayerId{3}, OrderSide::Left), InternalError);
  }

  TEST_CASE("succession picks the most trusted alive player") {
    std::map<PlayerId, BeliefRecord> beliefs;
    auto add = [&](int target, int m) {
      BeliefRecord b;
      b.target = PlayerId{target};
      b.reliability = m;
      beliefs[b.target] = b;
    };
    add(2, 7);
    add(3, 9);
    add(5, 9);
    add(6, 10);
    CHECK(succeed_sheriff(seats({2, 3, 5}), beliefs) == PlayerId{3});
    CHECK(succeed_sheriff(seats({4, 7}), beliefs) == PlayerId{4});
    CHECK_THROWS_AS(succeed_sheriff({}, beliefs), InternalError);
  }

  TEST_CASE("config validation") {
    GameConfig c;
    c.n_players = 6;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    GameConfig d;
    d.max_rounds = 0;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    GameConfig e;
    e.seed = 17;
    e.sheriff_mode = SheriffMode::ElectionThenSwap;
    auto back = GameConfig::from_json(e.to_json());
    CHECK(back.seed == 17);
    CHECK(back.sheriff_mode == SheriffMode::ElectionThenSwap);
  }

  TEST_CASE("scripted games hold the table invariants") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      auto cfg = testkit::scripted_config(seed);
      auto result = play(cfg);
      const auto& log = result.log;
      CAPTURE(seed);
      REQUIRE(log.outcome());
      CHECK(log.events().back().type == "outcome");
      for (std::size_t i = 0; i < log.events().size(); ++i) CHECK(log.events()[i].seq == static_cast<std::int64_t>(i + 1));

      for (const auto* e : log.of_type("order")) {
        const auto& order = e->payload.at("order");
        if (!e->payload.at("sheriff").is_null()) CHECK(order.back() == e->payload.at("sheriff"));
        CHECK(order.size() == e->payload.at("alive").size());
      }
      for (const auto* e : log.of_type("belief")) {
        const auto observer = e->payload.at("observer").get<int>();
        const auto role = log.header.roles[static_cast<std::size_t>(observer - 1)];
        CHECK(e->payload.at("reliability").get<int>() ==
              testkit::reliability_oracle(e->payload.at("confidence").get<int>(),
                                          e->payload.at("role").get<RoleGuess>(), role));
        CHECK(e->payload.at("target") != e->payload.at("observer"));
      }
      for (const auto* e : log.of_type("vote")) CHECK(e->payload.at("choice") != e->payload.at("voter"));

      std::map<int, int> pseudo_per_round, sheriff_of_round;
      for (const auto* e : log.of_type("order")) {
        if (!e->payload.at("sheriff").is_null()) sheriff_of_round[e->round] = e->payload.at("sheriff").get<int>();
      }
      for (const auto* e : log.of_type("pseudo_vote")) {
        ++pseudo_per_round[e->round];
        CHECK(e->payload.at("voter").get<int>() != sheriff_of_round.at(e->round));
      }
    }
  }

  TEST_CASE("scripted games are reproducible") {
    for (std::uint64_t seed : {3u, 8u, 21u}) {
      auto cfg = testkit::scripted_config(seed, SheriffMode::Election);
      CHECK(play(cfg).log.serialize() == play(cfg).log.serialize());
    }
  }

  TEST_CASE("the repeat index changes play but not roles") {
    auto a = testkit::scripted_config(4, SheriffMode::Election);
    auto b = a;
    b.repeat = 1;
    auto ra = play(a), rb = play(b);
    CHECK(ra.log.header.roles == rb.log.header.roles);
  }

  TEST_CASE("no prompt leaks the sheriff summary into pseudo-votes or shows votes early") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      MemorySink sink;
      auto result = run_game(testkit::scripted_config(seed), AgentSet::uniform(std::make_shared<ScriptedAgent>(testkit::varied_policy())), sink);
      CHECK(testkit::audit_prompts(result.log, sink.players).empty());
    }
  }

  TEST_CASE("the designate dying on night one voids the game") {
    int voids = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      auto cfg = testkit::scripted_config(seed);
      auto state = init_game(cfg);
      auto result = play(cfg);
      const auto* night = result.log.of_type("night_result").front();
      const bool designate_died = night->payload.at("death") == nlohmann::json(*state.designate);
      CHECK((result.log.outcome() == Outcome::Void) == designate_died);
      if (designate_died) {
        ++voids;
        CHECK(result.log.of_type("sheriff").empty());
        CHECK(result.log.of_type("vote").empty());
      }
    }
    CHECK(voids > 0);
  }

  TEST_CASE("election-or-void requires the tested seat to win") {
    int voided = 0, kept = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto cfg = testkit::scripted_config(seed, SheriffMode::ElectionOrVoid);
      auto state = init_game(cfg);
      REQUIRE(state.tested_seat);
      auto result = play(cfg);
      auto elected = result.log.of_type("election_result");
      if (result.log.outcome() == Outcome::Void) {
        ++voided;
      } else {
        ++kept;
        REQUIRE(elected.size() == 1);
        CHECK(elected.front()->payload.at("winner") == nlohmann::json(*state.tested_seat));
      }
      for (const auto* e : elected) {
        const auto& cands = e->payload.at("candidates");
        CHECK(std::find(cands.begin(), cands.end(), nlohmann::json(*state.tested_seat)) != cands.end());
        CHECK(cands.size() == 3);
      }
    }
    CHECK(voided + kept == 20);
  }

  TEST_CASE("sheriff elimination can stop the game") {
    auto policy = testkit::varied_policy();
    bool seen = false;
    for (std::uint64_t seed = 1; seed <= 40 && !seen; ++seed) {
      auto cfg = testkit::scripted_config(seed, SheriffMode::Election);
      cfg.sheriff_succession = false;
      cfg.stop_on_sheriff_death = true;
      auto result = play(cfg, policy);
      if (result.log.outcome() == Outcome::SheriffEliminated) {
        seen = true;
        const auto& out = result.log.events().back().payload;
        CHECK(std::find(out.at("alive").begin(), out.at("alive").end(), out.at("first_sheriff")) == out.at("alive").end());
      }
    }
    CHECK(seen);
  }

  TEST_CASE("succession emits a new sheriff") {
    bool seen = false;
    for (std::uint64_t seed = 1; seed <= 60 && !seen; ++seed) {
      auto result = play(testkit::scripted_config(seed, SheriffMode::Election));
      for (const auto* e : result.log.of_type("sheriff")) {
        if (e->payload.at("reason") == "succession") {
          seen = true;
          CHECK(e->payload.at("sheriff") != e->payload.at("previous"));
        }
      }
    }
    CHECK(seen);
  }

  TEST_CASE("round cap") {
    ScriptedPolicy p = testkit::varied_policy();
    p.vote = [](const ActionRequest&) -> VoteChoice { return std::nullopt; };
    p.night = [](const ActionRequest& r) { return r.options.front(); };
    auto cfg = testkit::scripted_config(5, SheriffMode::Election);
    cfg.max_rounds = 1;
    cfg.sheriff_succession = true;
    auto result = play(cfg, p);
    const auto o = *result.log.outcome();
    CHECK((o == Outcome::RoundCapReached || o == Outcome::WerewolfWin || o == Outcome::VillagerWin));
    for (const auto* e : result.log.of_type("order")) CHECK(e->round == 1);
  }

  TEST_CASE("forced-malformed agents always fall back") {
    ScriptedPolicy p = ScriptedPolicy::lowest_id();
    for (auto k : {RequestKind::Reason, RequestKind::NightKill, RequestKind::NightSee, RequestKind::NightProtect,
                   RequestKind::Statement, RequestKind::SheriffStatement, RequestKind::Vote, RequestKind::PseudoVote,
                   RequestKind::OrderChoice, RequestKind::Campaign, RequestKind::SheriffVote}) {
      p.malformed.insert(k);
    }
    auto cfg = testkit::scripted_config(2, SheriffMode::Election);
    cfg.retries = 2;
    auto result = play(cfg, p);
    CHECK(result.log.outcome());
    for (const auto* e : result.log.of_type("agent_output")) {
      CHECK(e->payload.at("attempts").size() == 3);
      CHECK(e->payload.at("response").at("fallback") == true);
    }
    CHECK(result.log.of_type("belief").empty());
    for (const auto* e : result.log.of_type("vote")) CHECK(e->payload.at("choice").is_null());
    for (const auto* e : result.log.of_type("statement")) CHECK(e->payload.at("silent") == true);
    CHECK(result.invalid_outputs == 3 * static_cast<int>(result.log.of_type("agent_output").size()));
  }

  TEST_CASE("a human seat is pinned as designate in secret assignment") {
    auto cfg = testkit::scripted_config(3);
    cfg.human_seat = PlayerId{6};
    CHECK(init_game(cfg).designate == PlayerId{6});
  }

  TEST_CASE("void games contribute no metrics") {
    std::vector<GameLog> logs;
    int voids = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      auto result = play(testkit::scripted_config(seed));
      if (result.log.outcome() == Outcome::Void) ++voids;
      logs.push_back(result.log);
    }
    REQUIRE(voids > 0);
    auto all = compute_report(logs);
    std::vector<GameLog> valid;
    for (const auto& l : logs) {
      if (l.outcome() != Outcome::Void) valid.push_back(l);
    }
    auto only_valid = compute_report(valid);
    CHECK(all.n_void == voids);
    CHECK(all.n_games == static_cast<int>(valid.size()));
    CHECK(all.ratio == only_valid.ratio);
    CHECK(all.dc == only_valid.dc);
    CHECK(all.n_rounds == only_valid.n_rounds);
  }
}
