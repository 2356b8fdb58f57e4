#pragma once

// Core value types shared by every module. All of them are plain values:
// copyable, comparable, and safe to hand across threads.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace prefgym {

// ---------------------------------------------------------------------------
// Aspects

enum class AspectKind { kFlight, kHotel, kApartment, kRentalCar, kRestaurant };

inline constexpr std::array<AspectKind, 5> kAllAspects = {
    AspectKind::kFlight, AspectKind::kHotel, AspectKind::kApartment,
    AspectKind::kRentalCar, AspectKind::kRestaurant};

// "flight", "hotel", "apartment", "rental_car", "restaurant"
std::string_view aspect_name(AspectKind kind);
// Human wording: "rental car" instead of "rental_car".
std::string_view aspect_display_name(AspectKind kind);
char id_prefix(AspectKind kind);
// Accepts the identifier form, the display form and "car rental".
std::optional<AspectKind> aspect_from_name(std::string_view name);
std::optional<AspectKind> aspect_from_prefix(char prefix);

struct OptionId {
  char prefix = 'F';
  std::uint32_t number = 0;

  std::string str() const;
  // Uppercase letter followed by a positive integer without leading zeros.
  static std::optional<OptionId> parse(std::string_view text);

  friend bool operator==(const OptionId&, const OptionId&) = default;
};

// ---------------------------------------------------------------------------
// Option fields

using StringList = std::vector<std::string>;
using ServiceCosts = std::vector<std::pair<std::string, std::int64_t>>;
using FieldValue = std::variant<std::string, std::int64_t, StringList, ServiceCosts>;

struct Field {
  std::string key;
  FieldValue value;
  friend bool operator==(const Field&, const Field&) = default;
};

using VisibleFields = std::vector<Field>;

const FieldValue* find_field(const VisibleFields& fields, std::string_view key);
FieldValue* find_field(VisibleFields& fields, std::string_view key);

// Renders a value the way option listings show it, e.g. "New York -> Austin".
std::string display_value(std::string_view key, const FieldValue& value);

// Integer bounds outside which a value is implausible (noise).
struct FieldBounds {
  std::string field;
  std::int64_t min = 0;
  std::int64_t max = 0;
  friend bool operator==(const FieldBounds&, const FieldBounds&) = default;
};

using SearchArgs = std::vector<std::pair<std::string, std::string>>;

// ---------------------------------------------------------------------------
// Preferences

enum class PredicateOp {
  kEquals,      // scalar field == text
  kNotEquals,   // scalar field != text
  kContains,    // list field contains text
  kAtLeast,     // integer field >= number
  kAtMost,      // integer field <= number
  kMaxItems,    // list field has at most `number` entries
  kHasService,  // service map offers `text`; its price joins the total cost
};

std::string_view to_string(PredicateOp op);
std::optional<PredicateOp> predicate_op_from_string(std::string_view name);

struct Predicate {
  std::string field;
  PredicateOp op = PredicateOp::kEquals;
  std::string text;
  std::int64_t number = 0;
  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct Preference {
  std::string preference_id;
  AspectKind aspect = AspectKind::kFlight;
  std::string category;
  std::string canonical_statement;
  std::vector<std::string> implicit_statements;
  // Each inner list is a keyword set; all of its keywords must occur.
  std::vector<std::vector<std::string>> trigger_topics;
  Predicate predicate;
  friend bool operator==(const Preference&, const Preference&) = default;
};

// ---------------------------------------------------------------------------
// Options, tasks, scenarios

enum class Label { kBest, kCorrect, kWrong, kNoise };

std::string_view to_string(Label label);
std::optional<Label> label_from_string(std::string_view name);
inline bool is_correct(Label label) {
  return label == Label::kBest || label == Label::kCorrect;
}

struct OptionRecord {
  std::string option_id;
  AspectKind aspect = AspectKind::kFlight;
  VisibleFields visible_fields;
  Label label = Label::kNoise;
  std::string label_reason;
  std::int64_t effective_total_cost = 0;
  friend bool operator==(const OptionRecord&, const OptionRecord&) = default;
};

struct AspectTask {
  AspectKind aspect = AspectKind::kFlight;
  SearchArgs ground_truth_search_args;
  std::vector<Preference> preferences;
  std::vector<OptionRecord> options;
  std::vector<FieldBounds> plausibility;
  friend bool operator==(const AspectTask&, const AspectTask&) = default;
};

enum class Tier { kEasy, kMedium, kHard };

std::string_view to_string(Tier tier);
std::optional<Tier> tier_from_string(std::string_view name);

struct Scenario {
  std::string scenario_id;
  std::string description;
  Tier tier = Tier::kEasy;
  std::vector<int> composition;
  std::vector<AspectTask> aspects;

  const AspectTask* find_aspect(AspectKind kind) const;
  const Preference* find_preference(std::string_view id) const;
  const OptionRecord* find_option(std::string_view id) const;
  int total_preferences() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// "22", "223", ...
std::string composition_label(const std::vector<int>& composition);

// Tier from a composition: the largest per-aspect count decides (2 easy,
// 3 medium, 4 hard). Throws UNSUPPORTED_COMPOSITION for lengths outside
// 2..4 or counts outside 2..4.
Tier tier_of(const std::vector<int>& composition);

// ---------------------------------------------------------------------------
// Environment configuration

enum class ChoiceMode { kSingle, kMulti };
enum class OffTopicPolicy { kAllTurns, kActionTurnsOnly };

std::string_view to_string(ChoiceMode mode);
std::optional<ChoiceMode> choice_mode_from_string(std::string_view name);
std::string_view to_string(OffTopicPolicy policy);
std::optional<OffTopicPolicy> off_topic_policy_from_string(std::string_view name);

struct EnvConfig {
  ChoiceMode mode = ChoiceMode::kSingle;
  int max_steps = 20;
  int search_failure_interval = 5;  // 0 disables
  int elicitation_interval = 3;     // 0 disables
  double reward_scale = 1.0;
  double step_penalty = 0.0;
  double search_correct_reward = 0.2;
  double preference_correct_reward = 0.2;
  double choice_best_reward = 1.0;
  double choice_correct_reward = 0.8;
  double wrong_choice_penalty = 0.0;
  std::uint64_t rng_seed = 0;
  OffTopicPolicy off_topic_policy = OffTopicPolicy::kAllTurns;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

// Empty when the config is usable.
std::vector<std::string> validate_config(const EnvConfig& config);

// ---------------------------------------------------------------------------
// Wire-level action and per-turn records

enum class Choice { kSearch, kAction, kAnswer };

std::string_view to_string(Choice choice);
std::optional<Choice> parse_choice(std::string_view text);

// `choice` stays a string so malformed calls can be logged verbatim.
struct AgentCall {
  std::string thought;
  std::string choice;
  std::string content;
  friend bool operator==(const AgentCall&, const AgentCall&) = default;
};

struct SearchJudgement {
  bool aligned = false;
  std::optional<AspectKind> aspect;
  friend bool operator==(const SearchJudgement&, const SearchJudgement&) = default;
};

enum class RevealSource { kActive, kPassive };
std::string_view to_string(RevealSource source);
std::optional<RevealSource> reveal_source_from_string(std::string_view name);

struct Reveal {
  std::string preference_id;
  RevealSource source = RevealSource::kActive;
  friend bool operator==(const Reveal&, const Reveal&) = default;
};

struct AnswerEval {
  std::string option_id;
  AspectKind aspect = AspectKind::kFlight;
  Label label = Label::kWrong;
  friend bool operator==(const AnswerEval&, const AnswerEval&) = default;
};

struct RewardComponent {
  std::string name;
  double value = 0.0;
  friend bool operator==(const RewardComponent&, const RewardComponent&) = default;
};

struct TurnRecord {
  int turn_index = 0;
  AgentCall call;
  bool protocol_error = false;
  std::optional<int> classification;  // utterance type 1..4
  std::optional<SearchJudgement> judgement;
  bool search_system_error = false;
  std::vector<Reveal> revealed;
  std::string observation;
  double reward = 0.0;
  std::vector<RewardComponent> components;
  std::optional<AnswerEval> answer_eval;

  friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

enum class TerminalReason { kAllAnswered, kMaxSteps, kProtocolError };
std::string_view to_string(TerminalReason reason);
std::optional<TerminalReason> terminal_reason_from_string(std::string_view name);

// Self-contained: carries enough scenario metadata that metrics can be
// computed from the log alone.
struct EpisodeLog {
  std::string scenario_id;
  EnvConfig config;
  Tier tier = Tier::kEasy;
  std::vector<int> composition;
  std::vector<AspectKind> aspects;
  int preference_total = 0;
  std::vector<TurnRecord> turns;
  std::optional<TerminalReason> terminal_reason;
  std::string note;

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

// Per-aspect answer reward r is the answer reward divided by reward_scale,
// i.e. one of {0, choice_correct_reward, choice_best_reward}.
// Weighted timing uses w(i) = 1 / (i + 1) with i the turn of the first
// answer whose r > 0.
struct MetricsRecord {
  double score = 0.0;
  double best_exist_rate = 0.0;
  double correct_exist_rate = 0.0;
  double valid_search_pct = 0.0;
  double valid_action_pct = 0.0;
  double pref_elicited_active_pct = 0.0;
  double pref_elicited_passive_pct = 0.0;
  std::optional<double> first_valid_index;
  double weighted_score = 0.0;
  double coverage = 0.0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

}  // namespace prefgym
