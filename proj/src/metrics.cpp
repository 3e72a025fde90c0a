#include "werewolf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "werewolf/ledger.hpp"

namespace werewolf {

int RoundSnapshot::m(PlayerId observer, PlayerId target) const {
  auto it = beliefs.find({observer.value, target.value});
  return it == beliefs.end() ? kDefaultReliability : it->second;
}

namespace {

VoteChoice read_choice(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<PlayerId>();
}

std::optional<double> mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

template <class F>
double mean_over_rounds(const GameLog& log, F per_round, const char* what) {
  std::vector<double> values;
  for (const auto& r : extract_rounds(log)) {
    if (auto v = per_round(r)) values.push_back(*v);
  }
  if (values.empty()) {
    throw MetricError(fmt::format("{}: no eligible round in {}", what, log.header.game_id));
  }
  return *mean(values);
}

bool eligible(const RoundSnapshot& r) { return r.sheriff && r.n_alive() >= 3; }

Role role_in(const GameLog& log, PlayerId p) {
  const auto idx = static_cast<std::size_t>(p.value - 1);
  if (idx >= log.header.roles.size()) throw MetricError(fmt::format("no role recorded for seat {}", p.value));
  return log.header.roles[idx];
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string("n/a"); }

}  // namespace

std::vector<RoundSnapshot> extract_rounds(const GameLog& log) {
  std::vector<RoundSnapshot> rounds;
  std::map<std::pair<int, int>, int> latest;
  std::optional<RoundSnapshot> current;
  for (const auto& e : log.events()) {
    if (e.type == "belief") {
      latest[{e.payload.at("observer").get<int>(), e.payload.at("target").get<int>()}] =
          e.payload.at("reliability").get<int>();
    } else if (e.type == "order") {
      current = RoundSnapshot{};
      current->round = e.round;
      current->alive = e.payload.at("alive").get<PlayerList>();
      current->sheriff = read_choice(e.payload.at("sheriff"));
    } else if (e.type == "pseudo_vote" && current) {
      current->pseudo[e.payload.at("voter").get<int>()] = read_choice(e.payload.at("choice"));
    } else if (e.type == "vote" && current) {
      const int voter = e.payload.at("voter").get<int>();
      current->final_votes[voter] = read_choice(e.payload.at("choice"));
      for (auto target : current->alive) {
        if (target.value == voter) continue;
        if (auto it = latest.find({voter, target.value}); it != latest.end()) {
          current->beliefs[{voter, target.value}] = it->second;
        }
      }
    } else if (e.type == "day_result" && current) {
      rounds.push_back(std::move(*current));
      current.reset();
    }
  }
  return rounds;
}

std::optional<double> round_focus_ratio(const RoundSnapshot& r, PlayerId focus) {
  if (r.n_alive() < 3 || std::find(r.alive.begin(), r.alive.end(), focus) == r.alive.end()) return std::nullopt;
  long sum1 = 0, n1 = 0, sum2 = 0, n2 = 0;
  for (auto i : r.alive) {
    if (i == focus) continue;
    sum2 += r.m(i, focus);
    ++n2;
    for (auto j : r.alive) {
      if (j == focus || j == i) continue;
      sum1 += r.m(i, j);
      ++n1;
    }
  }
  if (n1 == 0 || n2 == 0 || sum1 == 0) return std::nullopt;
  // (sum2 / n2) / (sum1 / n1), kept as one rational division
  return static_cast<double>(sum2 * n1) / static_cast<double>(n2 * sum1);
}

std::optional<double> round_ratio(const RoundSnapshot& r) {
  if (!eligible(r)) return std::nullopt;
  return round_focus_ratio(r, *r.sheriff);
}

namespace {

std::optional<double> dc_impl(const RoundSnapshot& r, bool any_change) {
  if (!eligible(r)) return std::nullopt;
  const auto sheriff = *r.sheriff;
  auto sv = r.final_votes.find(sheriff.value);
  if (sv == r.final_votes.end()) throw MetricError(fmt::format("round {}: the Sheriff did not vote", r.round));
  int hits = 0;
  for (auto i : r.alive) {
    if (i == sheriff) continue;
    auto p = r.pseudo.find(i.value);
    auto f = r.final_votes.find(i.value);
    if (p == r.pseudo.end() || f == r.final_votes.end()) {
      throw MetricError(fmt::format("round {}: missing pseudo or final vote for {}", r.round, player_name(i)));
    }
    const bool hit = any_change ? p->second != f->second
                                : (p->second != sv->second && f->second == sv->second);
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(r.n_alive() - 1);
}

}  // namespace

std::optional<double> round_dc(const RoundSnapshot& r) { return dc_impl(r, false); }
std::optional<double> round_dc_star(const RoundSnapshot& r) { return dc_impl(r, true); }

double ratio(const GameLog& log) {
  return mean_over_rounds(log, [](const RoundSnapshot& r) { return round_ratio(r); }, "Ratio");
}

double decision_change(const GameLog& log) {
  return mean_over_rounds(log, [](const RoundSnapshot& r) { return round_dc(r); }, "DC");
}

double decision_change_any(const GameLog& log) {
  return mean_over_rounds(log, [](const RoundSnapshot& r) { return round_dc_star(r); }, "DC*");
}

std::optional<double> focus_ratio(const GameLog& log, PlayerId focus) {
  std::vector<double> values;
  for (const auto& r : extract_rounds(log)) {
    if (auto v = round_focus_ratio(r, focus)) values.push_back(*v);
  }
  return mean(values);
}

nlohmann::json GameMetrics::to_json() const {
  return {{"game_id", game_id},
          {"outcome", outcome},
          {"sheriff", sheriff ? nlohmann::json(*sheriff) : nlohmann::json(nullptr)},
          {"sheriff_role", sheriff_role ? nlohmann::json(*sheriff_role) : nlohmann::json(nullptr)},
          {"ratio", opt(ratio)},
          {"dc", opt(dc)},
          {"dc_star", opt(dc_star)},
          {"rounds", rounds},
          {"completed", completed},
          {"sheriff_team_won", sheriff_team_won}};
}

GameMetrics game_metrics(const GameLog& log) {
  GameMetrics g;
  g.game_id = log.header.game_id;
  g.outcome = log.outcome().value_or(Outcome::Void);
  PlayerList alive_at_end;
  for (const auto* e : log.of_type("outcome")) {
    alive_at_end = e->payload.at("alive").get<PlayerList>();
    if (e->payload.contains("first_sheriff")) g.sheriff = read_choice(e->payload.at("first_sheriff"));
  }
  if (g.sheriff) g.sheriff_role = role_in(log, *g.sheriff);

  std::vector<double> ratios, dcs, dc_stars;
  for (const auto& r : extract_rounds(log)) {
    auto v = round_ratio(r);
    if (!v) continue;
    ratios.push_back(*v);
    dcs.push_back(*round_dc(r));
    dc_stars.push_back(*round_dc_star(r));
  }
  g.rounds = static_cast<int>(ratios.size());
  g.ratio = mean(ratios);
  g.dc = mean(dcs);
  g.dc_star = mean(dc_stars);

  const bool rule_end = g.outcome == Outcome::WerewolfWin || g.outcome == Outcome::VillagerWin;
  const bool sheriff_alive =
      g.sheriff && std::find(alive_at_end.begin(), alive_at_end.end(), *g.sheriff) != alive_at_end.end();
  g.completed = rule_end && sheriff_alive;
  if (g.completed) {
    const bool wolf = *g.sheriff_role == Role::Werewolf;
    g.sheriff_team_won = (g.outcome == Outcome::WerewolfWin) == wolf;
  }
  return g;
}

BatchRates batch_rates(const std::vector<GameMetrics>& games) {
  BatchRates rates;
  for (const auto& g : games) {
    if (g.outcome == Outcome::Void) continue;
    ++rates.n_games;
    if (g.completed) ++rates.n_completed;
  }
  if (rates.n_games == 0) throw MetricError("batch rates need at least one non-void game");
  int wins = 0;
  for (const auto& g : games) {
    if (g.outcome != Outcome::Void && g.completed && g.sheriff_team_won) ++wins;
  }
  rates.completion_rate = static_cast<double>(rates.n_completed) / rates.n_games;
  rates.win_rate = rates.n_completed == 0 ? 0.0 : static_cast<double>(wins) / rates.n_completed;
  rates.c_times_w = rates.completion_rate * rates.win_rate;
  return rates;
}

std::vector<RoleRow> per_role_breakdown(const std::vector<GameLog>& logs, bool include_non_sheriff) {
  const Role order[] = {Role::Werewolf, Role::Seer, Role::Guard, Role::Villager};
  std::map<std::pair<Role, bool>, std::vector<double>> ratios, dcs;
  for (const auto& log : logs) {
    if (log.outcome() == Outcome::Void) continue;
    const auto g = game_metrics(log);
    if (g.sheriff && g.ratio) {
      ratios[{*g.sheriff_role, true}].push_back(*g.ratio);
      if (g.dc) dcs[{*g.sheriff_role, true}].push_back(*g.dc);
    }
    if (!include_non_sheriff) continue;
    for (int i = 1; i <= static_cast<int>(log.header.roles.size()); ++i) {
      const PlayerId p{i};
      if (p == g.sheriff) continue;
      if (auto v = focus_ratio(log, p)) ratios[{role_in(log, p), false}].push_back(*v);
    }
  }
  std::vector<RoleRow> rows;
  for (bool sheriff : {true, false}) {
    if (!sheriff && !include_non_sheriff) continue;
    for (auto role : order) {
      RoleRow row;
      row.role = role;
      row.is_sheriff = sheriff;
      const auto& rs = ratios[{role, sheriff}];
      row.n = static_cast<int>(rs.size());
      row.ratio = mean(rs);
      if (sheriff) row.dc = mean(dcs[{role, sheriff}]);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw MetricError("spearman: vectors differ in length");
  if (x.size() < 2) throw MetricError("spearman: need at least two observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) throw MetricError("spearman: zero rank variance");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::pair<double, double>> human_agreement_pairs(const GameLog& log, PlayerId human) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& r : extract_rounds(log)) {
    if (!r.final_votes.contains(human.value)) continue;
    for (auto target : r.alive) {
      if (target == human) continue;
      long sum = 0;
      int n = 0;
      for (auto i : r.alive) {
        if (i == human || i == target) continue;
        sum += r.m(i, target);
        ++n;
      }
      if (n == 0) continue;
      pairs.emplace_back(static_cast<double>(r.m(human, target)), static_cast<double>(sum) / n);
    }
  }
  return pairs;
}

double human_agreement(const std::vector<GameLog>& logs, PlayerId human) {
  std::vector<double> x, y;
  for (const auto& log : logs) {
    for (const auto& [a, b] : human_agreement_pairs(log, human)) {
      x.push_back(a);
      y.push_back(b);
    }
  }
  return spearman(x, y);
}

nlohmann::json MetricsReport::to_json() const {
  auto roles = nlohmann::json::array();
  for (const auto& row : per_role) {
    nlohmann::json j{{"role", row.role}, {"is_sheriff", row.is_sheriff}, {"n", row.n}, {"omitted", row.omitted()}};
    j["ratio"] = opt(row.ratio);
    if (row.is_sheriff) j["dc"] = opt(row.dc);
    roles.push_back(j);
  }
  auto games_json = nlohmann::json::array();
  for (const auto& g : games) games_json.push_back(g.to_json());
  nlohmann::json j{{"ratio", opt(ratio)},       {"dc", opt(dc)},         {"dc_star", opt(dc_star)},
                   {"n_games", n_games},        {"n_void", n_void},      {"n_rounds", n_rounds},
                   {"per_role", roles},         {"games", games_json}};
  if (rates) {
    j["completion_rate"] = rates->completion_rate;
    j["win_rate"] = rates->win_rate;
    j["c_times_w"] = rates->c_times_w;
  } else {
    j["completion_rate"] = nullptr;
    j["win_rate"] = nullptr;
    j["c_times_w"] = nullptr;
  }
  return j;
}

std::string MetricsReport::to_text() const {
  std::string out;
  out += fmt::format("games: {} valid, {} void, {} voted rounds\n\n", n_games, n_void, n_rounds);
  out += fmt::format("{:<18}{:>10}\n", "Metric", "Value");
  out += fmt::format("{:<18}{:>10}\n", "Ratio", fmt_opt(ratio));
  out += fmt::format("{:<18}{:>10}\n", "DC", fmt_opt(dc));
  out += fmt::format("{:<18}{:>10}\n", "DC*", fmt_opt(dc_star));
  if (rates) {
    out += fmt::format("{:<18}{:>10.3f}\n", "Completion Rate", rates->completion_rate);
    out += fmt::format("{:<18}{:>10.3f}\n", "Win Rate", rates->win_rate);
    out += fmt::format("{:<18}{:>10.3f}\n", "C * W", rates->c_times_w);
  }
  if (!per_role.empty()) {
    out += fmt::format("\n{:<10}{:<9}{:>5}{:>10}{:>10}\n", "Role", "Sheriff", "n", "Ratio", "DC");
    for (const auto& row : per_role) {
      if (row.omitted()) {
        out += fmt::format("{:<10}{:<9}{:>5}{:>10}{:>10}\n", to_string(row.role), row.is_sheriff ? "yes" : "no", 0,
                           "omitted", "");
        continue;
      }
      out += fmt::format("{:<10}{:<9}{:>5}{:>10}{:>10}\n", to_string(row.role), row.is_sheriff ? "yes" : "no", row.n,
                         fmt_opt(row.ratio), row.is_sheriff ? fmt_opt(row.dc) : std::string("-"));
    }
  }
  return out;
}

MetricsReport compute_report(const std::vector<GameLog>& logs, bool include_non_sheriff) {
  MetricsReport report;
  std::vector<GameLog> valid;
  std::vector<double> ratios, dcs, dc_stars;
  for (const auto& log : logs) {
    if (log.outcome().value_or(Outcome::Void) == Outcome::Void) {
      ++report.n_void;
      continue;
    }
    valid.push_back(log);
    auto g = game_metrics(log);
    if (g.ratio) ratios.push_back(*g.ratio);
    if (g.dc) dcs.push_back(*g.dc);
    if (g.dc_star) dc_stars.push_back(*g.dc_star);
    report.n_rounds += g.rounds;
    report.games.push_back(std::move(g));
  }
  report.n_games = static_cast<int>(valid.size());
  report.ratio = mean(ratios);
  report.dc = mean(dcs);
  report.dc_star = mean(dc_stars);
  if (report.n_games > 0) {
    report.rates = batch_rates(report.games);
    report.per_role = per_role_breakdown(valid, include_non_sheriff);
  }
  return report;
}

}  // namespace werewolf
