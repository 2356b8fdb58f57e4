#include "prefgym/prompts.hpp"

#include "assets.hpp"
#include "prefgym/error.hpp"

namespace prefgym::prompts {

std::string_view raw(std::string_view name) {
  std::string key = "prompts/" + std::string(name);
  std::string_view text = asset_text(key + ".txt");
  if (text.empty()) text = asset_text(key + ".json");
  if (text.empty()) throw Error(ErrorCode::kNotFound, "no prompt template '" + std::string(name) + "'");
  if (text.ends_with('\n')) text.remove_suffix(1);
  return text;
}

std::string render(std::string_view tmpl, const Slots& slots) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const auto name = tmpl.substr(open + 2, close - open - 2);
    const std::string* value = nullptr;
    for (const auto& [k, v] : slots) {
      if (k == name) value = &v;
    }
    out.append(tmpl.substr(pos, open - pos));
    if (value) {
      out += *value;
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string agent_system_prompt(ChoiceMode mode) {
  return std::string(raw(mode == ChoiceMode::kSingle ? "agent_single_choice.system" : "agent_multi_choice.system"));
}

std::string initial_user_message(std::string_view description) {
  return render(raw("initial_user_message"), {{"description", std::string(description)}});
}

Json tool_schema() { return Json::parse(raw("tool_schema")); }

std::string search_redirect(AspectKind aspect) {
  return "You have already got the search results for <" + std::string(aspect_name(aspect)) +
         ">. Please directly refer to the previous search results.";
}

std::string answer_feedback(Label label, ChoiceMode mode) {
  const std::string tail = mode == ChoiceMode::kSingle
                               ? " Your choice is recorded and do not choose options of this travel aspect again. "
                                 "Please continue your interaction and reasoning focusing on other travel aspects."
                               : " Your choice is recorded. Please continue your interaction focusing on other "
                                 "travel aspects.";
  switch (label) {
    case Label::kBest:
      return "Your chosen options contain the best option!" + tail;
    case Label::kCorrect:
      return "Your chosen options contain a correct option." + tail;
    default:
      return "Your chosen options do not contain any of the best or correct options. Please continue your "
             "interaction focusing on other travel aspects.";
  }
}

std::string repeat_answer_rejection(char prefix) {
  return std::string("You have already recommended an option with the same initial '") + prefix +
         "'. You are allowed to recommend only one option per travel aspect.";
}

std::string unknown_option(std::string_view option_id) {
  return "Option " + std::string(option_id) +
         " does not exist in the database. Please choose an option ID from the search results.";
}

std::string invalid_choice(std::string_view choice) {
  return "Invalid choice '" + std::string(choice) + "'. The choice must be one of action, answer, or search.";
}

const std::vector<std::string>& neutral_pool() {
  static const std::vector<std::string> pool = {
      "I don't have a preference on that.", "Everything is fine.", "Sounds good to me.", "Okay, that works.",
      "Sure, go ahead."};
  return pool;
}

}  // namespace prefgym::prompts
