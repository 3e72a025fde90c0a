#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "werewolf/heuristic_model.hpp"
#include "werewolf/wwqa.hpp"

using namespace werewolf;
using namespace werewolf::wwqa;

namespace {
std::vector<QAPair> generated(QaKind kind, int n) {
  std::vector<QAPair> out;
  for (int i = 0; i < n; ++i) out.push_back(QAPair{fmt::format("Generated question {}?", i), "", kind, Provenance::Generated});
  return out;
}

int count_examples(const std::string& text) {
  int n = 0;
  for (auto pos = text.find("Example "); pos != std::string::npos; pos = text.find("Example ", pos + 1)) ++n;
  return n;
}

std::string json_list(int n, const std::string& stem) {
  auto arr = nlohmann::json::array();
  for (int i = 0; i < n; ++i) arr.push_back(fmt::format("{} {}?", stem, i));
  return arr.dump();
}

std::vector<QAPair> binary_set(int yes_right, int yes_wrong, int no_wrong, int no_right) {
  std::vector<QAPair> out;
  auto add = [&](int n, const char* gold, const char* reply) {
    for (int i = 0; i < n; ++i) {
      out.push_back(QAPair{fmt::format("{}|{}|{}", gold, reply, out.size()), gold, QaKind::Binary, Provenance::Generated});
    }
  };
  add(yes_right, "Yes", "Yes");
  add(yes_wrong, "Yes", "No");
  add(no_wrong, "No", "Yes");
  add(no_right, "No", "No");
  return out;
}

std::string reply_from_question(const std::string& q) { return q.substr(q.find('|') + 1, q.rfind('|') - q.find('|') - 1); }
}  // namespace

TEST_SUITE("wwqa") {
  TEST_CASE("seed pools") {
    for (auto k : {QaKind::RuleBased, QaKind::SituationBased, QaKind::Binary}) {
      auto pool = initial_pool(k);
      CHECK(pool.items.size() == 5);
      for (const auto& q : pool.items) {
        CHECK(q.provenance == Provenance::HumanSeed);
        CHECK(q.kind == k);
        CHECK_FALSE(q.question.empty());
      }
    }
    for (const auto& q : initial_pool(QaKind::Binary).items) CHECK(parse_yes_no(q.answer));
  }

  TEST_CASE("early iterations use every seed") {
    SeededRng rng(1);
    const auto seeds = initial_pool(QaKind::RuleBased);
    for (int it = 1; it <= 3; ++it) {
      auto p = question_prompt(seeds, generated(QaKind::RuleBased, 20), it, rng);
      CHECK(p.human_examples.size() == 5);
      CHECK(p.generated_examples.empty());
      CHECK(count_examples(p.text) == 5);
    }
  }

  TEST_CASE("later iterations mix two seeds and three generated") {
    SeededRng rng(1);
    const auto seeds = initial_pool(QaKind::SituationBased);
    auto pool = generated(QaKind::SituationBased, 12);
    for (int it = 4; it <= 8; ++it) {
      auto p = question_prompt(seeds, pool, it, rng);
      CHECK(p.human_examples.size() == 2);
      CHECK(p.generated_examples.size() == 3);
      CHECK(count_examples(p.text) == 5);
      std::set<std::string> uniq(p.generated_examples.begin(), p.generated_examples.end());
      CHECK(uniq.size() == 3);
    }
    auto few = question_prompt(seeds, generated(QaKind::SituationBased, 1), 4, rng);
    CHECK(few.human_examples.size() == 4);
    CHECK(few.generated_examples.size() == 1);
    CHECK_THROWS_AS(question_prompt(seeds, pool, 0, rng), ConfigError);
  }

  TEST_CASE("other kinds in the pool are not examples") {
    SeededRng rng(2);
    auto p = question_prompt(initial_pool(QaKind::Binary), generated(QaKind::RuleBased, 10), 5, rng);
    CHECK(p.generated_examples.empty());
    CHECK(p.human_examples.size() == 5);
  }

  TEST_CASE("generation keeps at most ten per iteration") {
    SeededRng rng(3);
    std::vector<QAPair> pool;
    int calls = 0;
    Generator g = [&](const std::string& prompt) {
      ++calls;
      if (prompt.find("draft") != std::string::npos) {
        // echo the numbered drafts back as a list
        return json_list(10, "Drafted question");
      }
      return json_list(12, "Drafted question");
    };
    auto r = generate_questions(initial_pool(QaKind::RuleBased), pool, 1, g, rng);
    CHECK_FALSE(r.error);
    CHECK(calls == 2);
    CHECK(r.added.size() == 10);
    CHECK(pool.size() == 10);
  }

  TEST_CASE("a revision that returns too many is cut again") {
    SeededRng rng(3);
    std::vector<QAPair> pool;
    Generator g = [&](const std::string&) { return json_list(14, "Q"); };
    auto r = generate_questions(initial_pool(QaKind::RuleBased), pool, 1, g, rng);
    CHECK(r.added.size() == 10);
  }

  TEST_CASE("duplicates of seeds and of the pool are dropped") {
    SeededRng rng(4);
    const auto seeds = initial_pool(QaKind::RuleBased);
    std::vector<QAPair> pool = generated(QaKind::RuleBased, 1);
    Generator g = [&](const std::string&) {
      nlohmann::json arr = {seeds.items[0].question, "  " + pool[0].question + "  ", "Brand new one?", "BRAND new one?"};
      return arr.dump();
    };
    auto r = generate_questions(seeds, pool, 2, g, rng);
    REQUIRE(r.added.size() == 1);
    CHECK(r.added[0] == "Brand new one?");
    CHECK(pool.size() == 2);
  }

  TEST_CASE("a failing generator skips the iteration") {
    SeededRng rng(5);
    std::vector<QAPair> pool;
    Generator boom = [](const std::string&) -> std::string { throw std::runtime_error("HTTP 500"); };
    auto r = generate_questions(initial_pool(QaKind::Binary), pool, 1, boom, rng);
    REQUIRE(r.error);
    CHECK(r.error->find("HTTP 500") != std::string::npos);
    CHECK(pool.empty());
    Generator empty = [](const std::string&) { return std::string("   "); };
    CHECK(generate_questions(initial_pool(QaKind::Binary), pool, 2, empty, rng).error);
  }

  TEST_CASE("question list formats") {
    CHECK(parse_question_list(R"(["a?", " b? ", ""])") == std::vector<std::string>{"a?", "b?"});
    CHECK(parse_question_list(R"({"questions": ["x?", {"question": "y?"}]})") == std::vector<std::string>{"x?", "y?"});
    CHECK(parse_question_list("1. first?\n2) second?\n- third?\n\n") ==
          std::vector<std::string>{"first?", "second?", "third?"});
    CHECK(normalize_question("  What's   the RULE? ") == normalize_question("whats the rule"));
  }

  TEST_CASE("answers are drafted then revised") {
    std::vector<QAPair> pool{{"Rule q?", "", QaKind::RuleBased, Provenance::Generated},
                             {"Binary q?", "", QaKind::Binary, Provenance::Generated},
                             {"Bad binary?", "", QaKind::Binary, Provenance::Generated}};
    Generator g = [](const std::string& prompt) -> std::string {
      const bool revision = prompt.find("Draft answer:") != std::string::npos;
      if (prompt.find("Bad binary?") != std::string::npos) return "Maybe";
      if (prompt.find("Binary q?") != std::string::npos) return revision ? "yes." : "No";
      return revision ? "Final answer." : "Draft.";
    };
    auto out = generate_answers(pool, g);
    REQUIRE(out.pairs.size() == 2);
    CHECK(out.pairs[0].answer == "Final answer.");
    CHECK(out.pairs[1].answer == "Yes");
    CHECK(out.errors.size() == 1);
    CHECK_THROWS_AS(generate_answers({}, g), ConfigError);
  }

  TEST_CASE("split sizes") {
    std::vector<QAPair> pool;
    for (int i = 0; i < 1553; ++i) pool.push_back(QAPair{fmt::format("q{}", i), "a", QaKind::RuleBased});
    std::vector<QAPair> train, val;
    auto c = split_dataset(pool, 1453, 100, 9, &train, &val);
    CHECK(c.train == 1453);
    CHECK(c.validation == 100);
    CHECK(train.size() == 1453);
    CHECK(val.size() == 100);
    std::set<std::string> seen;
    for (const auto& p : train) seen.insert(p.question);
    for (const auto& p : val) CHECK_FALSE(seen.contains(p.question));

    std::vector<QAPair> again;
    split_dataset(pool, 1453, 100, 9, &again, nullptr);
    CHECK(again == train);

    try {
      split_dataset(pool, 1453, 101, 9, nullptr, nullptr);
      FAIL("overlap accepted");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("overlapping splits") != std::string::npos);
    }
    try {
      split_dataset(pool, 2000, 0, 9, nullptr, nullptr);
      FAIL("oversize accepted");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("split larger than pool") != std::string::npos);
    }
  }

  TEST_CASE("export writes prompt and response records") {
    auto dir = std::filesystem::temp_directory_path() / ("werewolf-wwqa-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::vector<QAPair> pool;
    for (int i = 0; i < 6; ++i) pool.push_back(QAPair{fmt::format("q{}?", i), i % 2 ? "Yes" : "No", QaKind::Binary});
    export_dataset(pool, 4, 2, 1, dir);
    std::ifstream in(dir / "train.jsonl");
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      auto j = nlohmann::json::parse(line);
      CHECK(j.contains("prompt"));
      CHECK(j.contains("response"));
      ++n;
    }
    CHECK(n == 4);

    save_dataset(dir / "pool.jsonl", pool);
    CHECK(load_dataset(dir / "pool.jsonl") == pool);
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(load_dataset(dir / "pool.jsonl"), IoError);
  }

  TEST_CASE("binary labels must be literal") {
    auto j = QAPair{"q", "Yes", QaKind::Binary}.to_json();
    CHECK(QAPair::from_json(j).answer == "Yes");
    j["answer"] = "Probably";
    CHECK_THROWS_AS(QAPair::from_json(j), ConfigError);
  }

  TEST_CASE("binary scoring from a confusion matrix") {
    auto e = binary_scores(40, 10, 10, 40);
    CHECK(e.n == 100);
    CHECK(e.accuracy == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(e.f1 == doctest::Approx(0.8).epsilon(1e-12));
    auto u = binary_scores(40, 10, 10, 30, 5, 5);
    CHECK(u.n == 100);
    CHECK(u.unparsed == 10);
    CHECK(u.fn == 15);
    CHECK(u.accuracy == doctest::Approx(0.7));
    CHECK(u.parse_failure_rate == doctest::Approx(0.1));
  }

  TEST_CASE("binary evaluation end to end") {
    auto data = binary_set(40, 10, 10, 40);
    auto e = eval_binary(reply_from_question, data);
    CHECK(e.tp == 40);
    CHECK(e.fn == 10);
    CHECK(e.fp == 10);
    CHECK(e.tn == 40);
    CHECK(e.accuracy == doctest::Approx(0.8));
    CHECK(e.f1 == doctest::Approx(0.8));

    auto mute = eval_binary([](const std::string&) -> std::string { throw std::runtime_error("down"); }, data);
    CHECK(mute.unparsed == 100);
    CHECK(mute.accuracy == 0.0);
    CHECK(mute.parse_failure_rate == 1.0);

    CHECK(parse_yes_no("  Yes, because...") == true);
    CHECK(parse_yes_no("no.") == false);
    CHECK_FALSE(parse_yes_no("Nope"));
    CHECK_FALSE(parse_yes_no(""));
  }

  TEST_CASE("heuristic generator drives a full iteration") {
    SeededRng rng(8);
    std::vector<QAPair> pool;
    Generator g = [](const std::string& p) { return heuristic_reply(p); };
    auto r = generate_questions(initial_pool(QaKind::RuleBased), pool, 1, g, rng);
    CHECK_FALSE(r.error);
    CHECK(r.added.size() == 10);
    auto answers = generate_answers(pool, g);
    CHECK(answers.pairs.size() + answers.errors.size() == 10);
  }

  TEST_CASE("review flags") {
    std::vector<QAPair> pairs(3);
    CHECK(set_reviewed(pairs, {0, 2}, true) == 2);
    CHECK(set_reviewed(pairs, {0}, true) == 0);
    CHECK(pairs[2].reviewed);
    CHECK_THROWS(set_reviewed(pairs, {5}, true));
  }
}
