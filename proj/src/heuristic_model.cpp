#include "werewolf/heuristic_model.hpp"

#include <regex>
#include <vector>

#include <fmt/format.h>

#include "werewolf/digest.hpp"

namespace werewolf {

namespace {

std::uint64_t prompt_hash(const std::string& prompt) {
  return std::stoull(sha256_hex(prompt).substr(0, 15), nullptr, 16);
}

std::vector<std::string> players_in(const std::string& text) {
  static const std::regex re(R"(player_(\d+))");
  std::vector<std::string> out;
  for (std::sregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it) {
    auto p = it->str();
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  return out;
}

// The text between `marker` and the next '.' or newline.
std::string after(const std::string& text, const std::string& marker) {
  auto pos = text.rfind(marker);
  if (pos == std::string::npos) return {};
  pos += marker.size();
  auto end = text.find_first_of(".\n\"", pos);
  return text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

std::string self_name(const std::string& instruction) {
  static const std::regex re(R"(As (player_\d+))");
  std::smatch m;
  if (std::regex_search(instruction, m, re)) return m[1];
  return "player_0";
}

std::string wwqa_questions(std::uint64_t h) {
  static const char* subjects[] = {"the Seer", "the Guard", "a Villager", "a Werewolf", "the Sheriff"};
  static const char* topics[] = {"act during the night", "speak during the discussion",
                                 "vote in the voting phase", "win the game", "learn another player's role"};
  nlohmann::json list = nlohmann::json::array();
  for (int i = 0; i < 10; ++i) {
    const auto k = (h >> (i * 3)) + static_cast<std::uint64_t>(i);
    list.push_back(fmt::format("When can {} {}? (variant {})", subjects[k % 5], topics[(k / 5) % 5], h % 1000 + i));
  }
  return list.dump();
}

}  // namespace

std::string heuristic_reply(const std::string& prompt) {
  const auto h = prompt_hash(prompt);

  // question revision keeps the drafts as they are
  if (auto pos = prompt.find("JSON list of strings, in the original order."); pos != std::string::npos) {
    nlohmann::json list = nlohmann::json::array();
    std::regex line(R"(\n\d+\. ([^\n]+))");
    auto tail = prompt.substr(pos);
    for (std::sregex_iterator it(tail.begin(), tail.end(), line), end; it != end; ++it) list.push_back((*it)[1].str());
    return list.dump();
  }
  if (prompt.find("Reply with a JSON list") != std::string::npos) return wwqa_questions(h);
  if (prompt.find("must be Yes or No") != std::string::npos || prompt.find("Reply with Yes or No") != std::string::npos) {
    return h % 2 ? "Yes." : "No.";
  }
  if (prompt.find("Draft answer:") != std::string::npos) return after(prompt, "Draft answer: ");
  if (prompt.find("\nQuestion: ") != std::string::npos) {
    return fmt::format("Following the rules, the answer depends on the roles still alive (case {}).", h % 97);
  }

  // game prompts: look only at the action instruction
  const auto cut = prompt.rfind("Now it is ");
  const std::string instruction = cut == std::string::npos ? prompt : prompt.substr(cut);

  if (h % 31 == 7) return "I think we should all stay calm and keep talking.";

  const auto me = self_name(instruction);
  auto options = players_in(after(instruction, "choose one from "));

  if (instruction.find("reconsider the hidden roles of ") != std::string::npos) {
    const auto target = players_in(after(instruction, "reconsider the hidden roles of ")).front();
    static const char* guesses[] = {"Werewolf", "Villager", "Seer", "Uncertain", "Villager", "Werewolf"};
    std::vector<int> evidence;
    static const std::regex id_re(R"(\n(\d+)\. )");
    for (std::sregex_iterator it(prompt.begin(), prompt.end(), id_re), end; it != end && evidence.size() < 2; ++it) {
      evidence.push_back(std::stoi((*it)[1].str()));
    }
    nlohmann::json doc;
    doc[target] = {{"role", guesses[h % 6]},
                   {"reasoning", fmt::format("Based on what {} has said so far.", target)},
                   {"confidence", 5 + static_cast<int>((h / 7) % 6)},
                   {"evidence", evidence}};
    return doc.dump();
  }
  if (instruction.find("\"statement\"") != std::string::npos) {
    std::string statement;
    auto others = players_in(prompt.substr(prompt.find("Here are the game rules") + 1));
    std::erase(others, me);
    const auto suspect = others.empty() ? std::string("nobody") : others[h % others.size()];
    if (instruction.find("election phase") != std::string::npos) {
      statement = fmt::format("I am {} and I will keep the discussion orderly and fair.", me);
    } else if (instruction.find("As the Sheriff") != std::string::npos) {
      statement = fmt::format("As the Sheriff I have listened to everyone. I advise we vote for {}.", suspect);
    } else {
      statement = fmt::format("I am {}. Something about {} does not add up to me.", me, suspect);
    }
    return nlohmann::json{{"reasoning", "thinking it over"}, {"statement", statement}}.dump();
  }
  if (instruction.find("running for the Sheriff") != std::string::npos) {
    auto candidates = players_in(after(instruction, "do no vote, "));
    std::string action = candidates.empty() || h % 9 == 0 ? "do no vote" : "vote for " + candidates[h % candidates.size()];
    return nlohmann::json{{"reasoning", "the strongest candidate"}, {"action", action}}.dump();
  }
  std::string action;
  if (options.empty()) {
    action = "do no vote";
  } else if (instruction.find("do no vote") != std::string::npos && h % 11 == 0) {
    action = "do no vote";
  } else {
    std::erase(options, me);
    if (options.empty()) options.push_back(me);
    action = options[(h / 13) % options.size()];
  }
  return fmt::format("```json\n{}\n```", nlohmann::json{{"reasoning", "weighing the options"}, {"action", action}}.dump());
}

}  // namespace werewolf
