#pragma once

// Prompt templates and the fixed feedback strings the environment emits.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prefgym/domain.hpp"
#include "prefgym/json_io.hpp"

namespace prefgym::prompts {

// Template text by asset name ("judge_search.system"), without the final
// newline of the file. Throws NOT_FOUND for an unknown name.
std::string_view raw(std::string_view name);

using Slots = std::vector<std::pair<std::string, std::string>>;

// Replaces each {{name}} with its value. Unknown placeholders stay as they
// are; values are inserted verbatim and never re-scanned.
std::string render(std::string_view tmpl, const Slots& slots);

std::string agent_system_prompt(ChoiceMode mode);
std::string initial_user_message(std::string_view description);
Json tool_schema();

inline constexpr std::string_view kBudgetSentence =
    "Also my budget is limited, so as long as my preferences are satisfied, I would also like to choose the "
    "cheapest option for each.";

// Utterance type 2 and type 3 replies.
inline constexpr std::string_view kUnavailablePreference =
    "This is a good question. However, I do not have specific preference in the aspect you ask about yet (or "
    "maybe I have already elicited that to you before). You may continue to ask me about other detailed and "
    "specific preferences.";
inline constexpr std::string_view kVagueQuestion =
    "Your question is too vague and general, and I am not sure how to respond to it. Please ask me about some "
    "specific aspects of my preferences, in a more detailed and concrete way, so that I can provide you with a "
    "more accurate response.";

inline constexpr std::string_view kSearchAccepted = "You have provided the correct search request arguments.";
inline constexpr std::string_view kSearchSystemError =
    "System error: the search service is temporarily unavailable. Please try your search again.";
inline constexpr std::string_view kSearchEmpty =
    "No results were found for your search request. Please make sure it names one travel aspect and provides "
    "all of its arguments correctly.";
std::string search_redirect(AspectKind aspect);

std::string answer_feedback(Label label, ChoiceMode mode);
std::string repeat_answer_rejection(char prefix);
inline constexpr std::string_view kAnswerNeedsOneId =
    "Each answer should include only one option ID. Please answer again with exactly one option ID.";
inline constexpr std::string_view kAnswerMissingId =
    "No option ID was found in your answer. Please provide an option ID exactly as shown in the search results.";
std::string unknown_option(std::string_view option_id);
std::string invalid_choice(std::string_view choice);

// Rule-based neutral replies, used in rotation.
const std::vector<std::string>& neutral_pool();

}  // namespace prefgym::prompts
