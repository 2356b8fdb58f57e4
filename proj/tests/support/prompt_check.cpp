#include "prompt_check.hpp"

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "mock_chat.hpp"
#include "prefgym/prompts.hpp"

namespace prompt_check {

namespace {

using namespace prefgym;
using Slots = std::vector<std::pair<std::string, std::string>>;

std::string golden(const std::string& dir, const std::string& name) {
  std::ifstream in(dir + "/" + name);
  if (!in) throw std::runtime_error("missing golden file " + name);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

// Plain left-to-right fill, written separately from the library renderer.
std::string fill(std::string text, const Slots& slots) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = text.find("}}", open);
    if (close == std::string::npos) break;
    const std::string key = text.substr(open + 2, close - open - 2);
    out += text.substr(pos, open - pos);
    bool found = false;
    for (const auto& [k, v] : slots) {
      if (k == key) {
        out += v;
        found = true;
        break;
      }
    }
    if (!found) out += "{{" + key + "}}";
    pos = close + 2;
  }
  return out + text.substr(pos);
}

struct Expected {
  std::string system;
  std::string user_template;
  Slots slots;
};

void compare(const std::string& what, const std::string& got, const std::string& want,
             std::vector<std::string>& problems) {
  if (got == want) return;
  std::size_t i = 0;
  while (i < got.size() && i < want.size() && got[i] == want[i]) ++i;
  problems.push_back(what + " differs at byte " + std::to_string(i));
}

}  // namespace

std::vector<std::string> mismatches(const std::string& dir) {
  std::vector<std::string> problems;
  mock::ChatServer server([](const mock::Json& req) {
    if (req.contains("tools")) {
      return mock::tool_reply("interact_with_env",
                              {{"thought", "t"}, {"choice", "action"}, {"content", "That sounds great."}});
    }
    return mock::text_reply(
        "{\"thought\": \"t\", \"alignment_judgement\": \"False\", \"alignment_aspect\": \"\", \"type\": \"4\", "
        "\"response\": \"Sounds lovely.\"}");
  });

  auto scenario = fixtures::scenario({2, 3}, 42);
  const auto& task = scenario->aspects[0];
  const auto& p = task.preferences[0];
  std::vector<const Preference*> open;
  for (const auto& t : scenario->aspects) {
    for (const auto& q : t.preferences) open.push_back(&q);
  }
  History history = {{Message::Role::kUser, prompts::initial_user_message(scenario->description)},
                     {Message::Role::kAgent, "Where are you headed?"},
                     {Message::Role::kUser, "Everything is fine."}};
  const std::string utterance = "How do you feel about the {{trip}}?";  // braces must pass through untouched

  RemoteEndpoint ep;
  ep.base_url = server.base_url();
  RemoteSimulator sim(ep, builtin_catalog(), [](const std::string&) {});
  sim.judge_search(*scenario, utterance);
  sim.classify_utterance(*scenario, history, utterance, open);
  sim.render_preference_reveal(p, history, utterance, 1);
  sim.render_proactive_reveal(p, history, utterance, 0);
  sim.render_neutral(history, utterance);

  const std::vector<Expected> expected = {
      {"judge_search.system.txt", "judge_search.user.txt",
       {{"agent_request", utterance}, {"ground_truth_arguments", format_ground_truth(*scenario)}}},
      {"judge_utterance.system.txt", "judge_utterance.user.txt",
       {{"scenario", scenario->description},
        {"conversation_history", format_history(history)},
        {"latest_utterance", utterance},
        {"preferences_list", format_preferences(open)}}},
      {"reveal_preference.system.txt", "reveal_preference.user.txt",
       {{"preference", format_preference(p, 1)},
        {"conversation_history", format_history(history)},
        {"latest_utterance", utterance}}},
      {"proactive_reveal.system.txt", "proactive_reveal.user.txt",
       {{"preference", format_preference(p, 0)},
        {"conversation_history", format_history(history)},
        {"latest_utterance", utterance}}},
      {"neutral_reply.system.txt", "neutral_reply.user.txt",
       {{"conversation_history", format_history(history)}, {"latest_utterance", utterance}}},
  };
  auto requests = server.requests();
  if (requests.size() != expected.size()) {
    problems.push_back("expected " + std::to_string(expected.size()) + " judge requests, saw " +
                       std::to_string(requests.size()));
    return problems;
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& msgs = requests[i]["messages"];
    if (msgs.size() != 2 || msgs[0]["role"] != "system" || msgs[1]["role"] != "user") {
      problems.push_back(expected[i].system + ": unexpected message layout");
      continue;
    }
    compare(expected[i].system, msgs[0]["content"], golden(dir, expected[i].system), problems);
    compare(expected[i].user_template, msgs[1]["content"],
            fill(golden(dir, expected[i].user_template), expected[i].slots), problems);
  }

  // Agent side: system prompt, first user message and tool schema.
  for (auto mode : {ChoiceMode::kSingle, ChoiceMode::kMulti}) {
    const std::size_t before = server.requests().size();
    EnvConfig config;
    config.mode = mode;
    config.max_steps = 2;
    RemoteAgentOptions options;
    options.endpoint.base_url = server.base_url();
    auto agent = make_remote_adapter(options);
    run_episode(scenario, config, fixtures::rule_sim(), *agent, 0);
    requests = server.requests();
    if (requests.size() != before + 2) {
      problems.push_back("agent episode made " + std::to_string(requests.size() - before) + " requests");
      continue;
    }
    const auto& first = requests[before];
    const std::string name = mode == ChoiceMode::kSingle ? "agent_single_choice.system.txt" : "agent_multi_choice.system.txt";
    compare(name, first["messages"][0]["content"], golden(dir, name), problems);
    compare("initial_user_message.txt", first["messages"][1]["content"],
            fill(golden(dir, "initial_user_message.txt"), {{"description", scenario->description}}), problems);
    if (first["tools"].size() != 1 || first["tools"][0] != mock::Json::parse(golden(dir, "tool_schema.json"))) {
      problems.push_back("tool_schema.json differs");
    }
    const auto& second = requests[before + 1]["messages"];
    if (second.size() != 4 || second[2]["role"] != "assistant" || second[3]["role"] != "tool") {
      problems.push_back("agent transcript layout wrong on turn 2");
    }
  }
  return problems;
}

}  // namespace prompt_check
