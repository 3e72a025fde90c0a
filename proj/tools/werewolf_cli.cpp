// werewolf: batch runs, metrics, replay verification, WWQA dataset tools and the console host.
//
// exit codes: 0 ok, 1 usage or configuration error, 2 verification failure,
//             3 gateway failure or incomplete batch
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "werewolf/config_file.hpp"
#include "werewolf/console.hpp"
#include "werewolf/digest.hpp"
#include "werewolf/experiment.hpp"
#include "werewolf/heuristic_model.hpp"
#include "werewolf/llm_agent.hpp"
#include "werewolf/replay.hpp"
#include "werewolf/wwqa.hpp"

using namespace werewolf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;
constexpr int kExitGateway = 3;

struct Verification : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Incomplete : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by every subcommand that talks to a model.
struct ModelOptions {
  std::string config;
  std::string agents = "llm";  // llm | heuristic | scripted
  std::string replay;
  std::string base_url;
  std::string tested_model;
  std::string baseline_model;
  std::string api_key_env;

  void add(CLI::App* cmd, bool with_baseline = true) {
    cmd->add_option("--config", config, "INI file with [experiment], [tested], [baseline]")->check(CLI::ExistingFile);
    cmd->add_option("--agents", agents, "llm, heuristic or scripted")
        ->check(CLI::IsMember({"llm", "heuristic", "scripted"}));
    cmd->add_option("--replay", replay, "serve completions from recorded logs below this directory")
        ->check(CLI::ExistingDirectory);
    cmd->add_option("--base-url", base_url, "override base_url of every endpoint");
    cmd->add_option("--tested-model", tested_model, "override the tested model name");
    if (with_baseline) cmd->add_option("--baseline-model", baseline_model, "override the baseline model name");
    cmd->add_option("--api-key-env", api_key_env, "environment variable holding the API key");
  }

  void apply(ExperimentSpec& spec) const {
    if (!config.empty()) load_experiment_config(config, spec);
    for (auto* e : {&spec.tested, &spec.baseline}) {
      if (!base_url.empty()) e->base_url = base_url;
      if (!api_key_env.empty()) e->api_key_env = api_key_env;
    }
    if (!tested_model.empty()) spec.tested.model = tested_model;
    if (!baseline_model.empty()) spec.baseline.model = baseline_model;
    if (spec.tested.name == "default") spec.tested.name = "tested";
    if (spec.baseline.name == "default") spec.baseline.name = "baseline";
  }
};

struct Backends {
  std::shared_ptr<CompletionBackend> tested;
  std::shared_ptr<CompletionBackend> baseline;
  std::shared_ptr<ReplayGateway> replay;
};

std::string label(const ModelEndpoint& e) { return e.model.empty() ? e.name : e.model; }

Backends make_backends(const ModelOptions& opts, const ExperimentSpec& spec) {
  Backends b;
  if (!opts.replay.empty()) {
    b.replay = std::shared_ptr<ReplayGateway>(ReplayGateway::load(opts.replay));
    if (b.replay->size() == 0) throw ConfigError(fmt::format("no recorded exchanges below {}", opts.replay));
    b.tested = b.baseline = b.replay;
  } else if (opts.agents == "heuristic") {
    b.tested = b.baseline = std::make_shared<HeuristicBackend>();
  } else if (opts.agents == "llm") {
    for (const auto* e : {&spec.tested, &spec.baseline}) {
      if (e->base_url.empty() || e->model.empty()) {
        throw ConfigError(fmt::format("endpoint '{}' needs base_url and model (config file or flags)", e->name));
      }
    }
    b.tested = std::make_shared<HttpGateway>(spec.tested);
    b.baseline = std::make_shared<HttpGateway>(spec.baseline);
  }
  return b;
}

AgentFactory make_factory(const ModelOptions& opts, const ExperimentSpec& spec, const Backends& backends,
                          std::function<std::shared_ptr<Agent>(const GameConfig&)> human = {}) {
  const bool scripted = opts.agents == "scripted" && opts.replay.empty();
  const auto tested_label = label(spec.tested);
  const auto baseline_label = label(spec.baseline);
  return [=](Binding binding, const GameConfig& config) -> std::shared_ptr<Agent> {
    switch (binding) {
      case Binding::Human:
        if (!human) throw ConfigError("this setting needs a human seat; use the serve subcommand");
        return human(config);
      case Binding::Tested:
        if (scripted) return std::make_shared<ScriptedAgent>(ScriptedPolicy::lowest_id(), tested_label);
        return std::make_shared<LlmAgent>(backends.tested, tested_label);
      case Binding::Baseline:
        if (scripted) return std::make_shared<ScriptedAgent>(ScriptedPolicy::lowest_id(), baseline_label);
        return std::make_shared<LlmAgent>(backends.baseline, baseline_label);
    }
    throw InternalError("unknown binding");
  };
}

wwqa::Generator make_generator(const ModelOptions& opts) {
  ExperimentSpec spec;
  opts.apply(spec);
  std::shared_ptr<CompletionBackend> backend;
  if (opts.agents == "heuristic") {
    backend = std::make_shared<HeuristicBackend>();
  } else {
    if (spec.tested.base_url.empty() || spec.tested.model.empty()) {
      throw ConfigError("the [tested] endpoint needs base_url and model");
    }
    backend = std::make_shared<HttpGateway>(spec.tested);
  }
  return [backend](const std::string& prompt) {
    return backend->complete(CompletionCall{prompt, sha256_hex(prompt), "wwqa", PlayerId{0}});
  };
}

std::vector<GameLog> load_logs(const std::filesystem::path& root) {
  std::vector<GameLog> logs;
  for (const auto& p : find_game_logs(root)) logs.push_back(GameLog::load(p));
  if (logs.empty()) throw ConfigError(fmt::format("no game logs below {}", root.string()));
  return logs;
}

// --- subcommands ---

struct RunArgs {
  ModelOptions model;
  std::string setting;
  int n_games = 0;
  int repeats = 0;
  std::string seeds;
  int parallel = 0;
  int max_rounds = 0;
  std::string out;
  std::string batch;
  bool json = false;
};

int cmd_run(const RunArgs& a) {
  ExperimentSpec spec;
  a.model.apply(spec);
  if (!a.setting.empty()) {
    auto s = parse_setting(a.setting);
    if (!s) throw ConfigError(fmt::format("unknown setting '{}'", a.setting));
    spec.setting = *s;
  }
  if (a.n_games > 0) spec.n_games = a.n_games;
  if (a.repeats > 0) spec.repeats = a.repeats;
  if (!a.seeds.empty()) spec.seeds = parse_seed_list(a.seeds);
  if (a.parallel > 0) spec.parallel = a.parallel;
  if (a.max_rounds > 0) spec.base.max_rounds = a.max_rounds;
  if (!a.out.empty()) spec.out_dir = a.out;
  if (!a.batch.empty()) spec.batch_name = a.batch;
  if (spec.out_dir.empty()) spec.out_dir = "runs";

  auto backends = make_backends(a.model, spec);
  spec.factory = make_factory(a.model, spec, backends);
  auto batch = run_batch(spec);
  std::cout << (a.json ? batch.to_json().dump(2) + "\n" : report(batch));
  if (backends.replay && backends.replay->misses() > 0) {
    std::cerr << fmt::format("{} prompts had no recorded completion\n", backends.replay->misses());
  }
  if (batch.incomplete) throw Incomplete(batch.incomplete_reason);
  return kExitOk;
}

int cmd_metrics(const std::string& dir, bool json, bool non_sheriff, int human) {
  auto logs = load_logs(dir);
  auto rep = compute_report(logs, non_sheriff);
  if (json) {
    auto j = rep.to_json();
    if (human > 0) j["human_agreement"] = human_agreement(logs, PlayerId{human});
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << rep.to_text();
    if (human > 0) std::cout << fmt::format("human agreement (Spearman): {:.3f}\n", human_agreement(logs, PlayerId{human}));
  }
  return kExitOk;
}

int cmd_replay(const std::string& target) {
  std::vector<std::filesystem::path> paths;
  const std::filesystem::path p(target);
  if (std::filesystem::is_regular_file(p) || std::filesystem::exists(p / "game.jsonl")) {
    paths.push_back(p);
  } else {
    paths = find_game_logs(p);
  }
  if (paths.empty()) throw ConfigError(fmt::format("no game logs at {}", target));
  int failed = 0;
  for (const auto& path : paths) {
    auto log = GameLog::load(path);
    try {
      auto r = replay(log);
      std::cout << fmt::format("ok {} ({} events)\n", log.header.game_id, r.log.events().size());
    } catch (const ReplayMismatch& e) {
      ++failed;
      std::cout << fmt::format("MISMATCH {} at seq {}: {}\n", log.header.game_id, e.seq(), e.what());
    }
  }
  if (failed > 0) throw Verification(fmt::format("{} of {} logs did not replay", failed, paths.size()));
  return kExitOk;
}

struct ServeArgs {
  ModelOptions model;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_root;
  std::string session = "s1";
  int seat = 1;
  std::string setting = "human-evaluation";
  std::uint64_t seed = 1;
  std::string out;
  double timeout_seconds = 0;
  int linger = 5;
};

int cmd_serve(const ServeArgs& a) {
  ExperimentSpec spec;
  a.model.apply(spec);
  auto setting = parse_setting(a.setting);
  if (!setting || (*setting != Setting::HumanEvaluation && *setting != Setting::HumanBaseline)) {
    throw ConfigError("serve runs human-evaluation or human-baseline games");
  }
  spec.setting = *setting;
  spec.base.human_seat = PlayerId{a.seat};
  GameConfig config = config_for(spec.setting, spec.base);
  config.seed = a.seed;
  config.game_id = fmt::format("{}-{}", game_id_for(spec.setting, a.seed, 0), a.session);
  config.validate();

  auto registry = std::make_shared<console::SessionRegistry>();
  auto channel = registry->open(a.session, PlayerId{a.seat});
  std::optional<std::chrono::milliseconds> timeout;
  if (a.timeout_seconds > 0) timeout = std::chrono::milliseconds(static_cast<long>(a.timeout_seconds * 1000));
  auto backends = make_backends(a.model, spec);
  auto factory = make_factory(a.model, spec, backends, [&](const GameConfig&) {
    return std::make_shared<console::HumanAgent>(channel, timeout);
  });

  console::ServerOptions options;
  options.host = a.host;
  options.port = static_cast<unsigned short>(a.port);
  options.static_root = a.static_root;
  console::ConsoleServer server(registry, options);
  server.start();
  std::cout << fmt::format("console on http://{}:{}/  seat endpoint ws://{}:{}/session/{}/seat/{}", a.host,
                           server.port(), a.host, server.port(), a.session, a.seat)
            << std::endl;

  Game game(config);
  auto agents = bind_agents(spec.setting, game.state(), config, factory);
  std::unique_ptr<LogSink> sink;
  if (a.out.empty()) {
    sink = std::make_unique<NullSink>();
  } else {
    sink = std::make_unique<DirectorySink>(std::filesystem::path(a.out) / config.game_id);
  }
  auto result = game.run(std::move(agents), *sink);
  const auto outcome = result.state.outcome.value_or(Outcome::Void);
  channel->close(fmt::format("game over: {}", to_string(outcome)));
  std::cout << fmt::format("game {} finished: {}", config.game_id, to_string(outcome)) << std::endl;
  std::this_thread::sleep_for(std::chrono::seconds(a.linger));
  server.stop();
  return kExitOk;
}

int cmd_review(const std::string& file, const std::vector<int>& set, const std::vector<int>& unset, bool all) {
  auto pairs = wwqa::load_dataset(file);
  if (set.empty() && unset.empty() && !all) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& p = pairs[i];
      std::cout << fmt::format("{:>5} [{}] {:<16} {} => {}\n", i, p.reviewed ? "x" : " ", wwqa::to_string(p.kind),
                               p.question, p.answer);
    }
    return kExitOk;
  }
  std::vector<int> everything;
  if (all) {
    for (std::size_t i = 0; i < pairs.size(); ++i) everything.push_back(static_cast<int>(i));
  }
  int changed = wwqa::set_reviewed(pairs, all ? everything : set, true);
  changed += wwqa::set_reviewed(pairs, unset, false);
  wwqa::save_dataset(file, pairs);
  std::cout << fmt::format("{} flags changed\n", changed);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Werewolf simulation with a Sheriff role"};
  app.require_subcommand(1);

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "play a batch of games and report metrics");
  run.model.add(c_run);
  c_run->add_option("--setting", run.setting, "heterogeneous, homogeneous, homogeneous-variant1, ...");
  c_run->add_option("--n-games", run.n_games, "valid games wanted");
  c_run->add_option("--repeats", run.repeats, "games per seed");
  c_run->add_option("--seeds", run.seeds, "e.g. 1,2,5-9");
  c_run->add_option("--parallel", run.parallel, "games run at once");
  c_run->add_option("--max-rounds", run.max_rounds, "round cap");
  c_run->add_option("--out", run.out, "log directory (default: runs)");
  c_run->add_option("--batch", run.batch, "batch sub-directory name (default: the setting)");
  c_run->add_flag("--json", run.json, "print the report as JSON");

  std::string metrics_dir;
  bool metrics_json = false;
  bool metrics_non_sheriff = false;
  int metrics_human = 0;
  auto* c_metrics = app.add_subcommand("metrics", "compute metrics from logs on disk");
  c_metrics->add_option("dir", metrics_dir, "directory with game logs")->required()->check(CLI::ExistingPath);
  c_metrics->add_flag("--json", metrics_json, "print JSON");
  c_metrics->add_flag("--non-sheriff", metrics_non_sheriff, "add per-role rows for non-Sheriff seats");
  c_metrics->add_option("--human", metrics_human, "seat whose scores are correlated with the others'");

  std::string replay_target;
  auto* c_replay = app.add_subcommand("replay", "re-run recorded games and compare logs");
  c_replay->add_option("path", replay_target, "game directory, game.jsonl, or a tree of them")
      ->required()
      ->check(CLI::ExistingPath);

  auto* c_wwqa = app.add_subcommand("wwqa", "question-answering dataset tools");
  c_wwqa->require_subcommand(1);
  ModelOptions qa_model;
  std::string qa_kind = "rule-based";
  int qa_iterations = 5;
  int qa_start = 1;
  std::uint64_t qa_seed = 1;
  std::string qa_in;
  std::string qa_out;
  int qa_train = 0;
  int qa_validation = 0;

  auto* c_gen = c_wwqa->add_subcommand("gen", "grow a question pool");
  qa_model.add(c_gen, false);
  c_gen->add_option("--kind", qa_kind, "rule-based, situation-based or binary")
      ->check(CLI::IsMember({"rule-based", "situation-based", "binary"}));
  c_gen->add_option("--iterations", qa_iterations, "generation rounds")->check(CLI::PositiveNumber);
  c_gen->add_option("--start-iteration", qa_start, "number of the first round (continuing a pool)")
      ->check(CLI::PositiveNumber);
  c_gen->add_option("--seed", qa_seed, "example sampling seed");
  c_gen->add_option("--out", qa_out, "question pool (jsonl); extended if it exists")->required();

  auto* c_answer = c_wwqa->add_subcommand("answer", "answer a question pool");
  qa_model.add(c_answer, false);
  c_answer->add_option("--in", qa_in, "question pool")->required()->check(CLI::ExistingFile);
  c_answer->add_option("--out", qa_out, "Q&A pairs (jsonl)")->required();

  auto* c_export = c_wwqa->add_subcommand("export", "write train/validation prompt-response files");
  c_export->add_option("--in", qa_in, "Q&A pairs")->required()->check(CLI::ExistingFile);
  c_export->add_option("--train", qa_train, "training records")->required();
  c_export->add_option("--validation", qa_validation, "validation records")->required();
  c_export->add_option("--seed", qa_seed, "split seed");
  c_export->add_option("--out", qa_out, "output directory")->required();

  auto* c_eval = c_wwqa->add_subcommand("eval", "binary QA accuracy and F1");
  qa_model.add(c_eval, false);
  c_eval->add_option("--in", qa_in, "binary Q&A pairs")->required()->check(CLI::ExistingFile);

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "host a game with a human seat behind the web console");
  serve.model.add(c_serve);
  c_serve->add_option("--host", serve.host, "bind address");
  c_serve->add_option("--port", serve.port, "port, 0 picks a free one");
  c_serve->add_option("--static", serve.static_root, "console assets directory");
  c_serve->add_option("--session", serve.session, "session id");
  c_serve->add_option("--seat", serve.seat, "human seat")->check(CLI::Range(1, 7));
  c_serve->add_option("--setting", serve.setting, "human-evaluation or human-baseline");
  c_serve->add_option("--seed", serve.seed, "game seed");
  c_serve->add_option("--out", serve.out, "log directory");
  c_serve->add_option("--timeout", serve.timeout_seconds, "seconds per human answer, 0 waits forever");
  c_serve->add_option("--linger", serve.linger, "seconds to keep serving after the game ends");

  std::string review_file;
  std::vector<int> review_set;
  std::vector<int> review_unset;
  bool review_all = false;
  auto* c_review = app.add_subcommand("review", "list or toggle reviewed flags of a dataset");
  c_review->add_option("file", review_file, "Q&A pairs (jsonl)")->required()->check(CLI::ExistingFile);
  c_review->add_option("--set", review_set, "indices to mark reviewed");
  c_review->add_option("--unset", review_unset, "indices to mark unreviewed");
  c_review->add_flag("--all", review_all, "mark every pair reviewed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_run) return cmd_run(run);
    if (*c_metrics) return cmd_metrics(metrics_dir, metrics_json, metrics_non_sheriff, metrics_human);
    if (*c_replay) return cmd_replay(replay_target);
    if (*c_serve) return cmd_serve(serve);
    if (*c_review) return cmd_review(review_file, review_set, review_unset, review_all);
    if (*c_gen) {
      const auto kind = *wwqa::parse_kind(qa_kind);
      std::vector<wwqa::QAPair> pool;
      if (std::filesystem::exists(qa_out)) pool = wwqa::load_dataset(qa_out);
      auto seeds = wwqa::initial_pool(kind);
      auto generator = make_generator(qa_model);
      SeededRng rng(qa_seed);
      int done = 0;
      for (int it = qa_start; it < qa_start + qa_iterations; ++it) {
        auto r = wwqa::generate_questions(seeds, pool, it, generator, rng);
        if (r.error) std::cerr << *r.error << "\n";
        done += static_cast<int>(r.added.size());
      }
      wwqa::save_dataset(qa_out, pool);
      std::cout << fmt::format("{} new questions, pool holds {}\n", done, pool.size());
      return kExitOk;
    }
    if (*c_answer) {
      auto pool = wwqa::load_dataset(qa_in);
      auto r = wwqa::generate_answers(pool, make_generator(qa_model));
      for (const auto& e : r.errors) std::cerr << e << "\n";
      wwqa::save_dataset(qa_out, r.pairs);
      std::cout << fmt::format("{} pairs written, {} dropped\n", r.pairs.size(), r.errors.size());
      return kExitOk;
    }
    if (*c_export) {
      auto counts = wwqa::export_dataset(wwqa::load_dataset(qa_in), qa_train, qa_validation, qa_seed, qa_out);
      std::cout << fmt::format("train {} validation {} (pool {})\n", counts.train, counts.validation, counts.pool);
      return kExitOk;
    }
    if (*c_eval) {
      auto generator = make_generator(qa_model);
      auto data = wwqa::load_dataset(qa_in);
      auto e = wwqa::eval_binary([&](const std::string& q) {
        wwqa::QAPair probe{q, "", wwqa::QaKind::Binary, wwqa::Provenance::Generated, false};
        return generator(wwqa::answer_prompt(probe));
      }, data);
      std::cout << e.to_json().dump(2) << "\n";
      return kExitOk;
    }
  } catch (const Verification& e) {
    std::cerr << e.what() << "\n";
    return kExitVerify;
  } catch (const ReplayMismatch& e) {
    std::cerr << fmt::format("replay mismatch at seq {}: {}\n", e.seq(), e.what());
    return kExitVerify;
  } catch (const Incomplete& e) {
    std::cerr << "batch incomplete: " << e.what() << "\n";
    return kExitGateway;
  } catch (const GatewayError& e) {
    std::cerr << fmt::format("gateway error ({}): {}\n", to_string(e.reason()), e.what());
    return kExitGateway;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
