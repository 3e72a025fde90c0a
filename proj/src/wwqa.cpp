#include "werewolf/wwqa.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "werewolf/agent.hpp"

namespace werewolf::wwqa {

namespace {

QAPair seed(QaKind kind, std::string q, std::string a) {
  return QAPair{std::move(q), std::move(a), kind, Provenance::HumanSeed, true};
}

std::string_view kind_description(QaKind kind) {
  switch (kind) {
    case QaKind::RuleBased: return "rule-based questions that ask directly about the game rules";
    case QaKind::SituationBased:
      return "situation-based questions that describe a concrete game state and need a short chain "
             "of reasoning to answer";
    case QaKind::Binary: return "yes/no questions whose correct answer is exactly Yes or No";
  }
  return "";
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::size_t> sample(std::size_t n, std::size_t k, SeededRng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  idx.resize(std::min(k, n));
  return idx;
}

std::string strip_list_marker(std::string line) {
  line = trim(line);
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')' || line[i] == ':')) {
    line = line.substr(i + 1);
  } else if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
    line = line.substr(1);
  }
  line = trim(line);
  if (line.size() >= 2 && line.front() == '"' && line.back() == '"') line = line.substr(1, line.size() - 2);
  for (std::string_view prefix : {"Question:", "Q:"}) {
    if (line.rfind(prefix, 0) == 0) line = trim(line.substr(prefix.size()));
  }
  return line;
}

std::optional<nlohmann::json> find_json(const std::string& text) {
  for (char open : {'[', '{'}) {
    auto b = text.find(open);
    auto e = text.rfind(open == '[' ? ']' : '}');
    if (b == std::string::npos || e == std::string::npos || e < b) continue;
    auto j = nlohmann::json::parse(text.substr(b, e - b + 1), nullptr, false);
    if (!j.is_discarded()) return j;
  }
  return std::nullopt;
}

std::string clean_answer(const std::string& text) {
  auto t = trim(text);
  for (std::string_view prefix : {"Answer:", "A:", "Final answer:"}) {
    if (t.rfind(prefix, 0) == 0) t = trim(t.substr(prefix.size()));
  }
  return t;
}

}  // namespace

std::string_view to_string(QaKind kind) {
  switch (kind) {
    case QaKind::RuleBased: return "rule-based";
    case QaKind::SituationBased: return "situation-based";
    case QaKind::Binary: return "binary";
  }
  return "?";
}

std::optional<QaKind> parse_kind(std::string_view text) {
  for (auto k : {QaKind::RuleBased, QaKind::SituationBased, QaKind::Binary}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

nlohmann::json QAPair::to_json() const {
  return {{"question", question}, {"answer", answer}, {"kind", kind}, {"provenance", provenance}, {"reviewed", reviewed}};
}

QAPair QAPair::from_json(const nlohmann::json& j) {
  QAPair p;
  p.question = j.at("question").get<std::string>();
  p.answer = j.value("answer", std::string());
  auto kind = parse_kind(j.at("kind").get<std::string>());
  if (!kind) throw ConfigError(fmt::format("unknown QA kind '{}'", j.at("kind").get<std::string>()));
  p.kind = *kind;
  const auto prov = j.value("provenance", std::string("generated"));
  if (prov == "human-seed") {
    p.provenance = Provenance::HumanSeed;
  } else if (prov == "generated") {
    p.provenance = Provenance::Generated;
  } else {
    throw ConfigError(fmt::format("unknown provenance '{}'", prov));
  }
  p.reviewed = j.value("reviewed", false);
  if (p.kind == QaKind::Binary && !p.answer.empty() && p.answer != "Yes" && p.answer != "No") {
    throw ConfigError(fmt::format("binary answer must be Yes or No, got '{}'", p.answer));
  }
  return p;
}

ExamplePool initial_pool(QaKind kind) {
  ExamplePool pool{kind, {}};
  auto& v = pool.items;
  switch (kind) {
    case QaKind::RuleBased:
      v.push_back(seed(kind, "Which player leaves the game at the end of the voting phase?",
                       "The player who received the most votes is eliminated."));
      v.push_back(seed(kind, "How do the Werewolves decide whom to kill at night?",
                       "Each Werewolf picks a target and the player picked by the most Werewolves is killed."));
      v.push_back(seed(kind, "What do the Villagers do during the night?", "Nothing, Villagers have no night action."));
      v.push_back(seed(kind, "When does the Sheriff speak in the discussion phase?",
                       "The Sheriff speaks after every other player and also votes last."));
      v.push_back(seed(kind, "What can the Guard do at night?",
                       "The Guard protects one player, who then cannot be killed by the Werewolves that night."));
      break;
    case QaKind::SituationBased:
      v.push_back(seed(kind,
                       "The Seer checks player_4 at night and learns player_4 is a Werewolf. Does the "
                       "announcement the next morning reveal this?",
                       "No. Only the night's death, or the fact that nobody died, is announced. The Seer's "
                       "result stays private to the Seer."));
      v.push_back(seed(kind,
                       "The Guard protects player_2 and the Werewolves choose player_2 the same night. What "
                       "is announced in the morning?",
                       "That no player was killed, because the Guard's protection stops the kill."));
      v.push_back(seed(kind,
                       "Two Werewolves and three other players are alive, and the village eliminates one "
                       "Werewolf. Is the game over?",
                       "No. One Werewolf and three other players remain, so neither side has met its win "
                       "condition yet."));
      v.push_back(seed(kind,
                       "Player_6 is the last Werewolf alive and receives the most votes. Who wins?",
                       "The village side wins, because every Werewolf has been eliminated."));
      v.push_back(seed(kind,
                       "The Sheriff sits at player_3 and chooses Left. Who speaks first in the discussion?",
                       "The player on the Sheriff's left speaks first and the order continues away from the "
                       "Sheriff, who speaks last."));
      break;
    case QaKind::Binary:
      v.push_back(seed(kind, "Do the Werewolves know who the other Werewolves are?", "Yes"));
      v.push_back(seed(kind, "Does the Sheriff speak first in the discussion phase?", "No"));
      v.push_back(seed(kind, "Can the Guard protect a player from the Werewolves' kill?", "Yes"));
      v.push_back(seed(kind, "Is the Seer's result announced to every player?", "No"));
      v.push_back(seed(kind, "Do the Werewolves win once they equal the rest of the alive players in number?", "Yes"));
      break;
  }
  return pool;
}

GenerationPrompt question_prompt(const ExamplePool& seeds, const std::vector<QAPair>& question_pool,
                                 int iteration, SeededRng& rng) {
  if (iteration < 1) throw ConfigError("iterations are numbered from 1");
  GenerationPrompt p;
  if (iteration <= kWarmupIterations) {
    for (const auto& s : seeds.items) p.human_examples.push_back(s.question);
  } else {
    std::vector<const QAPair*> generated;
    for (const auto& q : question_pool) {
      if (q.kind == seeds.kind && q.provenance == Provenance::Generated) generated.push_back(&q);
    }
    const auto n_generated = std::min<std::size_t>(kGeneratedExamplesLater, generated.size());
    const auto n_human = kSeedsPerPool - static_cast<int>(n_generated) > kHumanExamplesLater
                             ? kSeedsPerPool - n_generated
                             : static_cast<std::size_t>(kHumanExamplesLater);
    for (auto i : sample(seeds.items.size(), n_human, rng)) p.human_examples.push_back(seeds.items[i].question);
    for (auto i : sample(generated.size(), n_generated, rng)) p.generated_examples.push_back(generated[i]->question);
  }

  std::string text = "You are helping to build a question-answering dataset about the following Werewolf game.\n\n";
  text += werewolf::game_rules_text();
  text += fmt::format("\n\nHere are some example {}:\n", kind_description(seeds.kind));
  int n = 0;
  for (const auto& q : p.human_examples) text += fmt::format("Example {}: {}\n", ++n, q);
  for (const auto& q : p.generated_examples) text += fmt::format("Example {}: {}\n", ++n, q);
  text += fmt::format(
      "\nWrite {} new {} that are different from the examples and can be answered from the rules above. "
      "Reply with a JSON list of {} strings and nothing else.",
      kQuestionsPerIteration, kind_description(seeds.kind), kQuestionsPerIteration);
  p.text = std::move(text);
  return p;
}

std::string question_revision_prompt(QaKind kind, const std::vector<std::string>& questions) {
  std::string text = werewolf::game_rules_text();
  text += fmt::format(
      "\n\nBelow are draft {}. Check each one against the rules above. Correct any question that is "
      "unclear, contradicts the rules or cannot be answered from them, and drop questions that cannot be "
      "fixed. Reply with the corrected questions as a JSON list of strings, in the original order.\n\n",
      kind_description(kind));
  int n = 0;
  for (const auto& q : questions) text += fmt::format("{}. {}\n", ++n, q);
  return text;
}

std::string answer_prompt(const QAPair& question) {
  std::string text = werewolf::game_rules_text();
  text += "\n\nAnswer the following question according to the rules above.";
  if (question.kind == QaKind::Binary) text += " Reply with Yes or No only.";
  text += fmt::format("\nQuestion: {}\nAnswer:", question.question);
  return text;
}

std::string answer_revision_prompt(const QAPair& question, const std::string& draft) {
  std::string text = werewolf::game_rules_text();
  text += fmt::format(
      "\n\nCheck the draft answer below against the rules above and correct it if it is wrong or "
      "incomplete.{}\nQuestion: {}\nDraft answer: {}\nReply with the final answer only.",
      question.kind == QaKind::Binary ? " The final answer must be Yes or No." : "", question.question, draft);
  return text;
}

std::vector<std::string> parse_question_list(const std::string& text) {
  std::vector<std::string> out;
  if (auto j = find_json(text)) {
    const nlohmann::json* list = nullptr;
    if (j->is_array()) {
      list = &*j;
    } else if (j->is_object() && j->contains("questions") && (*j)["questions"].is_array()) {
      list = &(*j)["questions"];
    }
    if (list) {
      for (const auto& item : *list) {
        if (item.is_string()) {
          auto q = trim(item.get<std::string>());
          if (!q.empty()) out.push_back(q);
        } else if (item.is_object() && item.contains("question") && item["question"].is_string()) {
          auto q = trim(item["question"].get<std::string>());
          if (!q.empty()) out.push_back(q);
        }
      }
      return out;
    }
  }
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto q = strip_list_marker(line);
    if (!q.empty()) out.push_back(q);
  }
  return out;
}

std::string normalize_question(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '_') {
      if (space && !out.empty()) out += ' ';
      space = false;
      out += static_cast<char>(std::tolower(u));
    } else if (std::isspace(u)) {
      space = true;
    }
  }
  return out;
}

IterationResult generate_questions(const ExamplePool& seeds, std::vector<QAPair>& question_pool, int iteration,
                                   const Generator& generator, SeededRng& rng) {
  IterationResult r;
  r.iteration = iteration;
  r.prompt = question_prompt(seeds, question_pool, iteration, rng);
  std::vector<std::string> drafts;
  try {
    drafts = parse_question_list(generator(r.prompt.text));
    if (drafts.empty()) throw std::runtime_error("no questions in reply");
    if (drafts.size() > kQuestionsPerIteration) drafts.resize(kQuestionsPerIteration);
    auto revised = parse_question_list(generator(question_revision_prompt(seeds.kind, drafts)));
    if (revised.empty()) throw std::runtime_error("no questions in revision reply");
    drafts = std::move(revised);
    if (drafts.size() > kQuestionsPerIteration) drafts.resize(kQuestionsPerIteration);
  } catch (const std::exception& e) {
    r.error = fmt::format("iteration {} skipped: {}", iteration, e.what());
    return r;
  }

  std::set<std::string> seen;
  for (const auto& s : seeds.items) seen.insert(normalize_question(s.question));
  for (const auto& q : question_pool) seen.insert(normalize_question(q.question));
  for (auto& q : drafts) {
    auto key = normalize_question(q);
    if (key.empty() || !seen.insert(key).second) continue;
    question_pool.push_back(QAPair{q, "", seeds.kind, Provenance::Generated, false});
    r.added.push_back(q);
  }
  return r;
}

AnswerResult generate_answers(const std::vector<QAPair>& question_pool, const Generator& generator) {
  if (question_pool.empty()) throw ConfigError("question pool is empty");
  AnswerResult out;
  for (std::size_t i = 0; i < question_pool.size(); ++i) {
    const auto& q = question_pool[i];
    try {
      auto draft = clean_answer(generator(answer_prompt(q)));
      if (draft.empty()) throw std::runtime_error("empty draft answer");
      auto answer = clean_answer(generator(answer_revision_prompt(q, draft)));
      if (answer.empty()) throw std::runtime_error("empty revised answer");
      if (q.kind == QaKind::Binary) {
        auto yes = parse_yes_no(answer);
        if (!yes) throw std::runtime_error(fmt::format("not a Yes/No answer: {}", answer));
        answer = *yes ? "Yes" : "No";
      }
      QAPair pair = q;
      pair.answer = std::move(answer);
      pair.provenance = Provenance::Generated;
      pair.reviewed = false;
      out.pairs.push_back(std::move(pair));
    } catch (const std::exception& e) {
      out.errors.push_back(fmt::format("item {} dropped ({}): {}", i, q.question, e.what()));
    }
  }
  return out;
}

std::string instruction_prompt(const QAPair& pair) {
  std::string text = "Answer the following question about the Werewolf game.";
  if (pair.kind == QaKind::Binary) text += " Reply with Yes or No.";
  return text + "\nQuestion: " + pair.question;
}

ExportCounts split_dataset(const std::vector<QAPair>& pool, int n_train, int n_validation, std::uint64_t seed,
                           std::vector<QAPair>* train, std::vector<QAPair>* validation) {
  const int n = static_cast<int>(pool.size());
  if (n_train < 0 || n_validation < 0) throw ConfigError("split sizes must be non-negative");
  if (n_train > n || n_validation > n) {
    throw ConfigError(fmt::format("split larger than pool: {} + {} requested, pool has {}", n_train, n_validation, n));
  }
  if (n_train + n_validation > n) {
    throw ConfigError(fmt::format("overlapping splits: {} + {} exceeds pool of {}", n_train, n_validation, n));
  }
  SeededRng rng(seed);
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  for (int i = 0; i < n_train + n_validation; ++i) {
    auto* dst = i < n_train ? train : validation;
    if (dst) dst->push_back(pool[idx[i]]);
  }
  return ExportCounts{n_train, n_validation, n};
}

ExportCounts export_dataset(const std::vector<QAPair>& pool, int n_train, int n_validation, std::uint64_t seed,
                            const std::filesystem::path& dir) {
  std::vector<QAPair> train;
  std::vector<QAPair> validation;
  auto counts = split_dataset(pool, n_train, n_validation, seed, &train, &validation);
  std::filesystem::create_directories(dir);
  auto write = [&](const std::filesystem::path& path, const std::vector<QAPair>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (const auto& p : rows) {
      out << nlohmann::json{{"prompt", instruction_prompt(p)}, {"response", p.answer}}.dump() << "\n";
    }
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  };
  write(dir / "train.jsonl", train);
  write(dir / "validation.jsonl", validation);
  return counts;
}

std::vector<QAPair> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  std::vector<QAPair> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError(fmt::format("{}:{}: not JSON", path.string(), n));
    out.push_back(QAPair::from_json(j));
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<QAPair>& pairs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& p : pairs) out << p.to_json().dump() << "\n";
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
}

std::optional<bool> parse_yes_no(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && !std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
  std::string token;
  while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
    token += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
    ++i;
  }
  if (token == "yes") return true;
  if (token == "no") return false;
  return std::nullopt;
}

nlohmann::json BinaryEval::to_json() const {
  return {{"n", n},   {"tp", tp}, {"fp", fp},
          {"fn", fn}, {"tn", tn}, {"unparsed", unparsed},
          {"accuracy", accuracy}, {"f1", f1}, {"parse_failure_rate", parse_failure_rate}};
}

BinaryEval binary_scores(int tp, int fp, int fn, int tn, int unparsed_yes, int unparsed_no) {
  BinaryEval e;
  // an unparsed reply to a Yes question misses a positive; to a No question it is just wrong
  e.tp = tp;
  e.fp = fp;
  e.fn = fn + unparsed_yes;
  e.tn = tn;
  e.unparsed = unparsed_yes + unparsed_no;
  e.n = tp + fp + fn + tn + e.unparsed;
  if (e.n > 0) {
    e.accuracy = static_cast<double>(tp + tn) / e.n;
    e.parse_failure_rate = static_cast<double>(e.unparsed) / e.n;
  }
  const int denom = 2 * e.tp + e.fp + e.fn;
  e.f1 = denom > 0 ? static_cast<double>(2 * e.tp) / denom : 0.0;
  return e;
}

BinaryEval eval_binary(const AnswerFunction& model, const std::vector<QAPair>& dataset) {
  if (dataset.empty()) throw ConfigError("binary dataset is empty");
  int tp = 0, fp = 0, fn = 0, tn = 0, uy = 0, un = 0;
  for (const auto& pair : dataset) {
    if (pair.kind != QaKind::Binary) throw ConfigError(fmt::format("not a binary pair: {}", pair.question));
    auto gold = parse_yes_no(pair.answer);
    if (!gold) throw ConfigError(fmt::format("binary pair without Yes/No label: {}", pair.question));
    std::optional<bool> got;
    try {
      got = parse_yes_no(model(pair.question));
    } catch (const std::exception&) {
      got.reset();
    }
    if (!got) {
      ++(*gold ? uy : un);
    } else if (*got && *gold) {
      ++tp;
    } else if (*got) {
      ++fp;
    } else if (*gold) {
      ++fn;
    } else {
      ++tn;
    }
  }
  return binary_scores(tp, fp, fn, tn, uy, un);
}

int set_reviewed(std::vector<QAPair>& pairs, const std::vector<int>& indices, bool reviewed) {
  int changed = 0;
  for (int i : indices) {
    if (i < 0 || i >= static_cast<int>(pairs.size())) {
      throw ConfigError(fmt::format("index {} out of range (dataset has {} pairs)", i, pairs.size()));
    }
    if (pairs[i].reviewed != reviewed) {
      pairs[i].reviewed = reviewed;
      ++changed;
    }
  }
  return changed;
}

}  // namespace werewolf::wwqa
