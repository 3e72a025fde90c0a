#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "werewolf/core.hpp"
#include "werewolf/rng.hpp"

namespace werewolf::wwqa {

enum class QaKind { RuleBased, SituationBased, Binary };
enum class Provenance { HumanSeed, Generated };

NLOHMANN_JSON_SERIALIZE_ENUM(QaKind, {{QaKind::RuleBased, "rule-based"},
                                      {QaKind::SituationBased, "situation-based"},
                                      {QaKind::Binary, "binary"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Provenance, {{Provenance::HumanSeed, "human-seed"},
                                          {Provenance::Generated, "generated"}})

std::string_view to_string(QaKind kind);
std::optional<QaKind> parse_kind(std::string_view text);

struct QAPair {
  std::string question;
  std::string answer;  // empty while the question waits in the question pool
  QaKind kind = QaKind::RuleBased;
  Provenance provenance = Provenance::Generated;
  bool reviewed = false;

  nlohmann::json to_json() const;
  static QAPair from_json(const nlohmann::json& j);
  bool operator==(const QAPair&) const = default;
};

struct ExamplePool {
  QaKind kind = QaKind::RuleBased;
  std::vector<QAPair> items;
};

inline constexpr int kSeedsPerPool = 5;
inline constexpr int kQuestionsPerIteration = 10;
inline constexpr int kWarmupIterations = 3;
inline constexpr int kHumanExamplesLater = 2;
inline constexpr int kGeneratedExamplesLater = 3;

// The five human-written seeds for a kind.
ExamplePool initial_pool(QaKind kind);

// Text in, text out. Throws on failure.
using Generator = std::function<std::string(const std::string& prompt)>;

struct GenerationPrompt {
  std::string text;
  std::vector<std::string> human_examples;
  std::vector<std::string> generated_examples;
  int example_count() const { return static_cast<int>(human_examples.size() + generated_examples.size()); }
};

// Iterations are 1-based. Up to the third every seed is used; later iterations sample
// 2 seeds and 3 pooled questions (fewer pooled ones if the pool is still small).
GenerationPrompt question_prompt(const ExamplePool& seeds, const std::vector<QAPair>& question_pool,
                                 int iteration, SeededRng& rng);
std::string question_revision_prompt(QaKind kind, const std::vector<std::string>& questions);
std::string answer_prompt(const QAPair& question);
std::string answer_revision_prompt(const QAPair& question, const std::string& draft);

// Accepts a JSON list of strings, {"questions": [...]}, or one question per line with
// optional numbering or bullets.
std::vector<std::string> parse_question_list(const std::string& text);
std::string normalize_question(std::string_view text);

struct IterationResult {
  int iteration = 0;
  GenerationPrompt prompt;
  std::vector<std::string> added;
  std::optional<std::string> error;  // set when the iteration was skipped
};

// One generation round; survivors are appended to `question_pool` (answers empty).
IterationResult generate_questions(const ExamplePool& seeds, std::vector<QAPair>& question_pool, int iteration,
                                   const Generator& generator, SeededRng& rng);

struct AnswerResult {
  std::vector<QAPair> pairs;
  std::vector<std::string> errors;  // one line per dropped item
};

AnswerResult generate_answers(const std::vector<QAPair>& question_pool, const Generator& generator);

struct ExportCounts {
  int train = 0;
  int validation = 0;
  int pool = 0;
};

// prompt/response records; `train.jsonl` and `validation.jsonl` under `dir`.
std::string instruction_prompt(const QAPair& pair);
ExportCounts split_dataset(const std::vector<QAPair>& pool, int n_train, int n_validation, std::uint64_t seed,
                           std::vector<QAPair>* train, std::vector<QAPair>* validation);
ExportCounts export_dataset(const std::vector<QAPair>& pool, int n_train, int n_validation, std::uint64_t seed,
                            const std::filesystem::path& dir);

std::vector<QAPair> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<QAPair>& pairs);

// Leading-token Yes/No match, case-insensitive.
std::optional<bool> parse_yes_no(std::string_view text);

struct BinaryEval {
  int n = 0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int tn = 0;
  int unparsed = 0;  // always counted wrong
  double accuracy = 0.0;
  double f1 = 0.0;
  double parse_failure_rate = 0.0;

  nlohmann::json to_json() const;
};

// From a confusion matrix (Yes = positive).
BinaryEval binary_scores(int tp, int fp, int fn, int tn, int unparsed_yes = 0, int unparsed_no = 0);

using AnswerFunction = std::function<std::string(const std::string& question)>;
BinaryEval eval_binary(const AnswerFunction& model, const std::vector<QAPair>& dataset);

// Toggles the reviewed flag; indices are 0-based. Returns how many flags changed.
int set_reviewed(std::vector<QAPair>& pairs, const std::vector<int>& indices, bool reviewed);

}  // namespace werewolf::wwqa
