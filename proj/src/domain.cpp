#include "prefgym/domain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "prefgym/error.hpp"

namespace prefgym {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedCatalog: return "MALFORMED_CATALOG";
    case ErrorCode::kInvariantViolation: return "INVARIANT_VIOLATION";
    case ErrorCode::kUnsupportedComposition: return "UNSUPPORTED_COMPOSITION";
    case ErrorCode::kCatalogTooSmall: return "CATALOG_TOO_SMALL";
    case ErrorCode::kInvalidScenario: return "INVALID_SCENARIO";
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kEpisodeDone: return "EPISODE_DONE";
    case ErrorCode::kMalformedCall: return "MALFORMED_CALL";
    case ErrorCode::kBackendUnavailable: return "BACKEND_UNAVAILABLE";
    case ErrorCode::kAdapterFailure: return "ADAPTER_FAILURE";
    case ErrorCode::kUnsupportedFormat: return "UNSUPPORTED_FORMAT";
    case ErrorCode::kNotFound: return "NOT_FOUND";
    case ErrorCode::kConflict: return "CONFLICT";
    case ErrorCode::kAuthFailed: return "AUTH_FAILED";
    case ErrorCode::kMalformedRequest: return "MALFORMED_REQUEST";
    case ErrorCode::kIoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

std::string_view aspect_name(AspectKind kind) {
  switch (kind) {
    case AspectKind::kFlight: return "flight";
    case AspectKind::kHotel: return "hotel";
    case AspectKind::kApartment: return "apartment";
    case AspectKind::kRentalCar: return "rental_car";
    case AspectKind::kRestaurant: return "restaurant";
  }
  return "flight";
}

std::string_view aspect_display_name(AspectKind kind) {
  return kind == AspectKind::kRentalCar ? "rental car" : aspect_name(kind);
}

char id_prefix(AspectKind kind) {
  switch (kind) {
    case AspectKind::kFlight: return 'F';
    case AspectKind::kHotel: return 'H';
    case AspectKind::kApartment: return 'A';
    case AspectKind::kRentalCar: return 'C';
    case AspectKind::kRestaurant: return 'R';
  }
  return 'F';
}

std::optional<AspectKind> aspect_from_name(std::string_view name) {
  std::string lowered;
  for (char c : name) {
    lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (AspectKind kind : kAllAspects) {
    if (lowered == aspect_name(kind) || lowered == aspect_display_name(kind)) {
      return kind;
    }
  }
  if (lowered == "car rental" || lowered == "car_rental" || lowered == "car") {
    return AspectKind::kRentalCar;
  }
  return std::nullopt;
}

std::optional<AspectKind> aspect_from_prefix(char prefix) {
  for (AspectKind kind : kAllAspects) {
    if (id_prefix(kind) == prefix) return kind;
  }
  return std::nullopt;
}

std::string OptionId::str() const {
  return std::string(1, prefix) + std::to_string(number);
}

std::optional<OptionId> OptionId::parse(std::string_view text) {
  if (text.size() < 2 || !std::isupper(static_cast<unsigned char>(text[0]))) {
    return std::nullopt;
  }
  auto digits = text.substr(1);
  if (digits[0] == '0') return std::nullopt;
  std::uint32_t number = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), number);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || number == 0) {
    return std::nullopt;
  }
  return OptionId{text[0], number};
}

const FieldValue* find_field(const VisibleFields& fields, std::string_view key) {
  for (const auto& field : fields) {
    if (field.key == key) return &field.value;
  }
  return nullptr;
}

FieldValue* find_field(VisibleFields& fields, std::string_view key) {
  for (auto& field : fields) {
    if (field.key == key) return &field.value;
  }
  return nullptr;
}

namespace {

bool is_money_key(std::string_view key) { return key == "cost"; }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string display_value(std::string_view key, const FieldValue& value) {
  return std::visit(
      Overloaded{
          [](const std::string& s) { return s; },
          [&](std::int64_t n) {
            return is_money_key(key) ? "$" + std::to_string(n) : std::to_string(n);
          },
          [&](const StringList& items) {
            const char* sep = key == "path" ? " -> " : ", ";
            std::string out;
            for (std::size_t i = 0; i < items.size(); ++i) {
              if (i) out += sep;
              out += items[i];
            }
            return items.empty() ? std::string("none") : out;
          },
          [](const ServiceCosts& services) {
            std::string out;
            for (std::size_t i = 0; i < services.size(); ++i) {
              if (i) out += ", ";
              out += services[i].first + " $" + std::to_string(services[i].second);
            }
            return services.empty() ? std::string("none") : out;
          },
      },
      value);
}

std::string_view to_string(PredicateOp op) {
  switch (op) {
    case PredicateOp::kEquals: return "equals";
    case PredicateOp::kNotEquals: return "not_equals";
    case PredicateOp::kContains: return "contains";
    case PredicateOp::kAtLeast: return "at_least";
    case PredicateOp::kAtMost: return "at_most";
    case PredicateOp::kMaxItems: return "max_items";
    case PredicateOp::kHasService: return "has_service";
  }
  return "equals";
}

std::optional<PredicateOp> predicate_op_from_string(std::string_view name) {
  for (auto op : {PredicateOp::kEquals, PredicateOp::kNotEquals, PredicateOp::kContains,
                  PredicateOp::kAtLeast, PredicateOp::kAtMost, PredicateOp::kMaxItems,
                  PredicateOp::kHasService}) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kBest: return "best";
    case Label::kCorrect: return "correct";
    case Label::kWrong: return "wrong";
    case Label::kNoise: return "noise";
  }
  return "noise";
}

std::optional<Label> label_from_string(std::string_view name) {
  for (auto label : {Label::kBest, Label::kCorrect, Label::kWrong, Label::kNoise}) {
    if (to_string(label) == name) return label;
  }
  return std::nullopt;
}

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::kEasy: return "easy";
    case Tier::kMedium: return "medium";
    case Tier::kHard: return "hard";
  }
  return "easy";
}

std::optional<Tier> tier_from_string(std::string_view name) {
  for (auto tier : {Tier::kEasy, Tier::kMedium, Tier::kHard}) {
    if (to_string(tier) == name) return tier;
  }
  return std::nullopt;
}

const AspectTask* Scenario::find_aspect(AspectKind kind) const {
  for (const auto& task : aspects) {
    if (task.aspect == kind) return &task;
  }
  return nullptr;
}

const Preference* Scenario::find_preference(std::string_view id) const {
  for (const auto& task : aspects) {
    for (const auto& pref : task.preferences) {
      if (pref.preference_id == id) return &pref;
    }
  }
  return nullptr;
}

const OptionRecord* Scenario::find_option(std::string_view id) const {
  for (const auto& task : aspects) {
    for (const auto& option : task.options) {
      if (option.option_id == id) return &option;
    }
  }
  return nullptr;
}

int Scenario::total_preferences() const {
  int total = 0;
  for (const auto& task : aspects) total += static_cast<int>(task.preferences.size());
  return total;
}

std::string composition_label(const std::vector<int>& composition) {
  std::vector<int> sorted = composition;
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (int n : sorted) out += std::to_string(n);
  return out;
}

Tier tier_of(const std::vector<int>& composition) {
  if (composition.size() < 2 || composition.size() > 4) {
    throw Error(ErrorCode::kUnsupportedComposition,
                "composition must name 2 to 4 aspects, got " + std::to_string(composition.size()));
  }
  int top = 0;
  for (int n : composition) {
    if (n < 2 || n > 4) {
      throw Error(ErrorCode::kUnsupportedComposition,
                  "per-aspect preference count must be 2..4, got " + std::to_string(n));
    }
    top = std::max(top, n);
  }
  return top == 2 ? Tier::kEasy : top == 3 ? Tier::kMedium : Tier::kHard;
}

std::string_view to_string(ChoiceMode mode) {
  return mode == ChoiceMode::kSingle ? "single_choice" : "multi_choice";
}

std::optional<ChoiceMode> choice_mode_from_string(std::string_view name) {
  if (name == "single_choice" || name == "single") return ChoiceMode::kSingle;
  if (name == "multi_choice" || name == "multi") return ChoiceMode::kMulti;
  return std::nullopt;
}

std::string_view to_string(OffTopicPolicy policy) {
  return policy == OffTopicPolicy::kAllTurns ? "count_all_turns" : "action_turns_only";
}

std::optional<OffTopicPolicy> off_topic_policy_from_string(std::string_view name) {
  if (name == "count_all_turns") return OffTopicPolicy::kAllTurns;
  if (name == "action_turns_only") return OffTopicPolicy::kActionTurnsOnly;
  return std::nullopt;
}

std::vector<std::string> validate_config(const EnvConfig& config) {
  std::vector<std::string> problems;
  if (config.max_steps < 1) problems.push_back("max_steps must be >= 1");
  if (config.search_failure_interval < 0) {
    problems.push_back("search_failure_interval must be >= 0");
  }
  if (config.elicitation_interval < 0) problems.push_back("elicitation_interval must be >= 0");
  if (!(config.reward_scale > 0.0)) problems.push_back("reward_scale must be > 0");
  if (config.step_penalty < 0.0) problems.push_back("step_penalty must be >= 0");
  if (config.wrong_choice_penalty < 0.0) problems.push_back("wrong_choice_penalty must be >= 0");
  if (config.search_correct_reward < 0.0 || config.preference_correct_reward < 0.0) {
    problems.push_back("partial rewards must be >= 0");
  }
  if (!(config.choice_correct_reward >= 0.0 &&
        config.choice_correct_reward <= config.choice_best_reward)) {
    problems.push_back("require 0 <= choice_correct_reward <= choice_best_reward");
  }
  return problems;
}

std::string_view to_string(Choice choice) {
  switch (choice) {
    case Choice::kSearch: return "search";
    case Choice::kAction: return "action";
    case Choice::kAnswer: return "answer";
  }
  return "action";
}

std::optional<Choice> parse_choice(std::string_view text) {
  for (auto choice : {Choice::kSearch, Choice::kAction, Choice::kAnswer}) {
    if (to_string(choice) == text) return choice;
  }
  return std::nullopt;
}

std::string_view to_string(RevealSource source) {
  return source == RevealSource::kActive ? "active" : "passive";
}

std::optional<RevealSource> reveal_source_from_string(std::string_view name) {
  if (name == "active") return RevealSource::kActive;
  if (name == "passive") return RevealSource::kPassive;
  return std::nullopt;
}

std::string_view to_string(TerminalReason reason) {
  switch (reason) {
    case TerminalReason::kAllAnswered: return "all_answered";
    case TerminalReason::kMaxSteps: return "max_steps";
    case TerminalReason::kProtocolError: return "protocol_error";
  }
  return "protocol_error";
}

std::optional<TerminalReason> terminal_reason_from_string(std::string_view name) {
  for (auto reason : {TerminalReason::kAllAnswered, TerminalReason::kMaxSteps,
                      TerminalReason::kProtocolError}) {
    if (to_string(reason) == name) return reason;
  }
  return std::nullopt;
}

}  // namespace prefgym
