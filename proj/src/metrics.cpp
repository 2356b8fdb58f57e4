#include "prefgym/metrics.hpp"

#include <algorithm>

#include "prefgym/engine.hpp"

namespace prefgym {

std::string_view to_string(TimingMode mode) { return mode == TimingMode::kReward ? "reward" : "indicator"; }

std::optional<TimingMode> timing_mode_from_string(std::string_view name) {
  if (name == "reward") return TimingMode::kReward;
  if (name == "indicator") return TimingMode::kIndicator;
  return std::nullopt;
}

std::vector<AspectAnswers> collect_answers(const EpisodeLog& log) {
  std::vector<AspectAnswers> out;
  for (auto aspect : log.aspects) out.push_back({aspect, {}, false, false});
  for (const auto& turn : log.turns) {
    if (!turn.answer_eval) continue;
    for (auto& a : out) {
      if (a.aspect != turn.answer_eval->aspect) continue;
      const Label label = turn.answer_eval->label;
      a.answers.emplace_back(turn.turn_index, answer_value(label, log.config));
      a.best_hit = a.best_hit || label == Label::kBest;
      a.correct_hit = a.correct_hit || is_correct(label);
    }
  }
  return out;
}

double score_episode(const EpisodeLog& log, ChoiceMode mode) {
  const auto per_aspect = collect_answers(log);
  if (per_aspect.empty()) return 0.0;
  double total = 0.0;
  for (const auto& a : per_aspect) {
    if (a.answers.empty()) continue;
    if (mode == ChoiceMode::kSingle) {
      total += a.answers.front().second;
    } else {
      double best = 0.0;
      for (const auto& [turn, r] : a.answers) best = std::max(best, r);
      total += best;
    }
  }
  return total / static_cast<double>(per_aspect.size());
}

MetricTally& MetricTally::operator+=(const MetricTally& o) {
  episodes += o.episodes;
  score_sum += o.score_sum;
  aspects += o.aspects;
  best_hits += o.best_hits;
  correct_hits += o.correct_hits;
  search_attempts += o.search_attempts;
  valid_searches += o.valid_searches;
  action_turns += o.action_turns;
  type1_actions += o.type1_actions;
  preferences += o.preferences;
  active_reveals += o.active_reveals;
  passive_reveals += o.passive_reveals;
  valid_answer_aspects += o.valid_answer_aspects;
  first_index_sum += o.first_index_sum;
  weighted_sum += o.weighted_sum;
  return *this;
}

MetricTally tally_episode(const EpisodeLog& log, TimingMode timing) {
  MetricTally t;
  t.episodes = 1;
  t.score_sum = score_episode(log);
  for (const auto& a : collect_answers(log)) {
    ++t.aspects;
    t.best_hits += a.best_hit;
    t.correct_hits += a.correct_hit;
    for (const auto& [turn, r] : a.answers) {
      if (r <= 0.0) continue;
      ++t.valid_answer_aspects;
      t.first_index_sum += turn;
      t.weighted_sum += (timing == TimingMode::kReward ? r : 1.0) / (turn + 1.0);
      break;
    }
  }
  for (const auto& turn : log.turns) {
    const auto choice = parse_choice(turn.call.choice);
    if (choice == Choice::kSearch) {
      ++t.search_attempts;
      const bool valid = std::any_of(turn.components.begin(), turn.components.end(),
                                     [](const RewardComponent& c) { return c.name == component::kSearchCorrect; });
      t.valid_searches += valid;
    } else if (choice == Choice::kAction) {
      ++t.action_turns;
      t.type1_actions += turn.classification == 1;
    }
    for (const auto& r : turn.revealed) {
      (r.source == RevealSource::kActive ? t.active_reveals : t.passive_reveals)++;
    }
  }
  t.preferences = log.preference_total;
  return t;
}

FinishedMetrics finish(const MetricTally& t) {
  FinishedMetrics out;
  auto ratio = [&](double num, int den, const char* name) {
    if (den == 0) {
      out.flags.emplace_back(name);
      return 0.0;
    }
    return num / den;
  };
  MetricsRecord& m = out.metrics;
  m.score = ratio(t.score_sum, t.episodes, "score");
  m.best_exist_rate = ratio(t.best_hits, t.aspects, "best_exist_rate");
  m.correct_exist_rate = ratio(t.correct_hits, t.aspects, "correct_exist_rate");
  m.valid_search_pct = ratio(t.valid_searches, t.search_attempts, "valid_search_pct");
  m.valid_action_pct = ratio(t.type1_actions, t.action_turns, "valid_action_pct");
  m.pref_elicited_active_pct = ratio(t.active_reveals, t.preferences, "pref_elicited_active_pct");
  m.pref_elicited_passive_pct = ratio(t.passive_reveals, t.preferences, "pref_elicited_passive_pct");
  if (t.valid_answer_aspects > 0) m.first_valid_index = t.first_index_sum / t.valid_answer_aspects;
  m.weighted_score = ratio(t.weighted_sum, t.aspects, "weighted_score");
  m.coverage = ratio(t.valid_answer_aspects, t.aspects, "coverage");
  return out;
}

namespace {

MetricTally tally_all(const std::vector<EpisodeLog>& logs, TimingMode mode) {
  MetricTally total;
  for (const auto& log : logs) total += tally_episode(log, mode);
  return total;
}

}  // namespace

ExistRates exist_rates(const std::vector<EpisodeLog>& logs) {
  const auto m = finish(tally_all(logs, TimingMode::kReward)).metrics;
  return {m.best_exist_rate, m.correct_exist_rate};
}

ValidityRates validity_rates(const std::vector<EpisodeLog>& logs) {
  const auto m = finish(tally_all(logs, TimingMode::kReward)).metrics;
  return {m.valid_search_pct, m.valid_action_pct};
}

ElicitationRates elicitation_rates(const std::vector<EpisodeLog>& logs) {
  const auto m = finish(tally_all(logs, TimingMode::kReward)).metrics;
  return {m.pref_elicited_active_pct, m.pref_elicited_passive_pct};
}

TimingStats weighted_timing(const std::vector<EpisodeLog>& logs, TimingMode mode) {
  const auto m = finish(tally_all(logs, mode)).metrics;
  return {m.first_valid_index, m.weighted_score, m.coverage};
}

MetricsRecord compute_metrics(const std::vector<EpisodeLog>& logs, TimingMode mode) {
  return finish(tally_all(logs, mode)).metrics;
}

}  // namespace prefgym
