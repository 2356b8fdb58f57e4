#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prefgym/domain.hpp"

namespace prefgym {

enum class TimingMode { kReward, kIndicator };

std::string_view to_string(TimingMode mode);
std::optional<TimingMode> timing_mode_from_string(std::string_view name);

// Per-aspect answer rewards r (label based, before reward_scale), in turn
// order, with the turn index of each answer.
struct AspectAnswers {
  AspectKind aspect;
  std::vector<std::pair<int, double>> answers;  // turn_index, r
  bool best_hit = false;
  bool correct_hit = false;
};

std::vector<AspectAnswers> collect_answers(const EpisodeLog& log);

// Mean over the scenario's aspects of the first (single) or best (multi)
// answer reward. Unanswered aspects count as 0.
double score_episode(const EpisodeLog& log, ChoiceMode mode);
inline double score_episode(const EpisodeLog& log) { return score_episode(log, log.config.mode); }

// Additive numerators and denominators. Combining tallies and then calling
// finish() gives micro-averages.
struct MetricTally {
  int episodes = 0;
  double score_sum = 0.0;
  int aspects = 0;
  int best_hits = 0;
  int correct_hits = 0;
  int search_attempts = 0;
  int valid_searches = 0;
  int action_turns = 0;
  int type1_actions = 0;
  int preferences = 0;
  int active_reveals = 0;
  int passive_reveals = 0;
  int valid_answer_aspects = 0;
  double first_index_sum = 0.0;
  double weighted_sum = 0.0;

  MetricTally& operator+=(const MetricTally& other);
  friend bool operator==(const MetricTally&, const MetricTally&) = default;
};

MetricTally tally_episode(const EpisodeLog& log, TimingMode timing = TimingMode::kReward);

struct FinishedMetrics {
  MetricsRecord metrics;
  // Names of rates whose denominator was zero; they read as 0.
  std::vector<std::string> flags;
};

FinishedMetrics finish(const MetricTally& tally);

// Convenience wrappers over tally_episode + finish.
struct ExistRates {
  double best_exist_rate = 0.0;
  double correct_exist_rate = 0.0;
};
struct ValidityRates {
  double valid_search_pct = 0.0;
  double valid_action_pct = 0.0;
};
struct ElicitationRates {
  double active_pct = 0.0;
  double passive_pct = 0.0;
};
struct TimingStats {
  std::optional<double> mean_first_index;
  double mean_weighted_score = 0.0;
  double coverage = 0.0;
};

ExistRates exist_rates(const std::vector<EpisodeLog>& logs);
ValidityRates validity_rates(const std::vector<EpisodeLog>& logs);
ElicitationRates elicitation_rates(const std::vector<EpisodeLog>& logs);
TimingStats weighted_timing(const std::vector<EpisodeLog>& logs, TimingMode mode = TimingMode::kReward);
MetricsRecord compute_metrics(const std::vector<EpisodeLog>& logs, TimingMode mode = TimingMode::kReward);

}  // namespace prefgym
