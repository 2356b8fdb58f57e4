#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "prefgym/json_io.hpp"
#include "prefgym/metrics.hpp"

using namespace prefgym;

namespace {

EpisodeLog two_aspect_log(ChoiceMode mode) {
  EpisodeLog log;
  log.scenario_id = "toy";
  log.config.mode = mode;
  log.aspects = {AspectKind::kFlight, AspectKind::kHotel};
  log.composition = {2, 2};
  log.preference_total = 4;
  return log;
}

void add_answer(EpisodeLog& log, AspectKind aspect, Label label) {
  TurnRecord t;
  t.turn_index = static_cast<int>(log.turns.size());
  t.call = {"", "answer", "X"};
  t.answer_eval = AnswerEval{"X1", aspect, label};
  log.turns.push_back(t);
}

void add_search(EpisodeLog& log, bool valid) {
  TurnRecord t;
  t.turn_index = static_cast<int>(log.turns.size());
  t.call = {"", "search", "q"};
  t.judgement = SearchJudgement{valid, valid ? std::optional(AspectKind::kFlight) : std::nullopt};
  if (valid) t.components.push_back({"search_correct", 0.2});
  log.turns.push_back(t);
}

void add_action(EpisodeLog& log, int type, std::vector<Reveal> revealed = {}) {
  TurnRecord t;
  t.turn_index = static_cast<int>(log.turns.size());
  t.call = {"", "action", "u"};
  t.classification = type;
  t.revealed = std::move(revealed);
  log.turns.push_back(t);
}

}  // namespace

TEST(Score, WorkedMultiChoiceExample) {
  auto log = two_aspect_log(ChoiceMode::kMulti);
  add_answer(log, AspectKind::kFlight, Label::kBest);
  add_answer(log, AspectKind::kFlight, Label::kCorrect);
  add_answer(log, AspectKind::kHotel, Label::kWrong);
  add_answer(log, AspectKind::kHotel, Label::kCorrect);
  add_answer(log, AspectKind::kHotel, Label::kNoise);
  EXPECT_EQ(score_episode(log), 0.9);
}

TEST(Score, NoAnswersIsZero) { EXPECT_EQ(score_episode(two_aspect_log(ChoiceMode::kSingle)), 0.0); }

TEST(Score, SingleChoiceFirstAnswers) {
  auto log = two_aspect_log(ChoiceMode::kSingle);
  add_answer(log, AspectKind::kFlight, Label::kCorrect);
  add_answer(log, AspectKind::kHotel, Label::kCorrect);
  EXPECT_DOUBLE_EQ(score_episode(log), 0.8);
}

TEST(Exist, BestHotelCorrectFlight) {
  auto log = two_aspect_log(ChoiceMode::kSingle);
  add_answer(log, AspectKind::kHotel, Label::kBest);
  add_answer(log, AspectKind::kFlight, Label::kCorrect);
  const auto r = exist_rates({log});
  EXPECT_DOUBLE_EQ(r.best_exist_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.correct_exist_rate, 1.0);
  const auto none = exist_rates({two_aspect_log(ChoiceMode::kSingle)});
  EXPECT_EQ(none.best_exist_rate, 0.0);
  EXPECT_EQ(none.correct_exist_rate, 0.0);
}

TEST(Validity, ThreeOfFourSearches) {
  auto log = two_aspect_log(ChoiceMode::kSingle);
  add_search(log, true);
  add_search(log, true);
  add_search(log, false);
  add_search(log, true);
  EXPECT_DOUBLE_EQ(validity_rates({log}).valid_search_pct, 0.75);
}

TEST(Validity, NoActionsFlagged) {
  auto log = two_aspect_log(ChoiceMode::kSingle);
  add_search(log, true);
  const auto done = finish(tally_episode(log));
  EXPECT_EQ(done.metrics.valid_action_pct, 0.0);
  EXPECT_NE(std::find(done.flags.begin(), done.flags.end(), "valid_action_pct"), done.flags.end());
}

TEST(Elicitation, TwoActiveOnePassiveOfFour) {
  auto log = two_aspect_log(ChoiceMode::kSingle);
  add_action(log, 1, {{"a", RevealSource::kActive}});
  add_action(log, 4, {{"b", RevealSource::kPassive}});
  add_action(log, 1, {{"c", RevealSource::kActive}});
  const auto r = elicitation_rates({log});
  EXPECT_DOUBLE_EQ(r.active_pct, 0.5);
  EXPECT_DOUBLE_EQ(r.passive_pct, 0.25);
  EXPECT_NEAR(validity_rates({log}).valid_action_pct, 2.0 / 3.0, 1e-15);
}

TEST(Elicitation, FullRevealPartitions) {
  auto s = fixtures::scenario({2, 3}, 4);
  EnvConfig c;
  c.max_steps = 40;
  auto log = fixtures::run_scripted("chatter", s, c);
  const auto r = elicitation_rates({log});
  EXPECT_DOUBLE_EQ(r.active_pct + r.passive_pct, 1.0);
}

TEST(Timing, WeightFunction) {
  auto log = two_aspect_log(ChoiceMode::kSingle);
  log.aspects = {AspectKind::kFlight};
  add_answer(log, AspectKind::kFlight, Label::kBest);
  EXPECT_DOUBLE_EQ(weighted_timing({log}).mean_weighted_score, 1.0);

  auto late = two_aspect_log(ChoiceMode::kSingle);
  late.aspects = {AspectKind::kFlight};
  add_search(late, false);
  add_answer(late, AspectKind::kFlight, Label::kCorrect);
  const auto t = weighted_timing({late});
  EXPECT_DOUBLE_EQ(t.mean_weighted_score, 0.4);
  EXPECT_EQ(t.mean_first_index, 1.0);
  EXPECT_EQ(t.coverage, 1.0);
  EXPECT_DOUBLE_EQ(weighted_timing({late}, TimingMode::kIndicator).mean_weighted_score, 0.5);
}

TEST(Timing, NoValidAnswerLeavesIndexEmpty) {
  auto log = two_aspect_log(ChoiceMode::kSingle);
  add_answer(log, AspectKind::kFlight, Label::kWrong);
  const auto t = weighted_timing({log});
  EXPECT_FALSE(t.mean_first_index);
  EXPECT_EQ(t.coverage, 0.0);
}

TEST(Tally, MicroAveragesCombine) {
  const auto logs = fixtures::random_logs(40, 8);
  MetricTally sum;
  for (const auto& l : logs) sum += tally_episode(l);
  EXPECT_EQ(finish(sum).metrics, compute_metrics(logs));
}

TEST(Recount, AgreesWithIndependentPass) {
  const auto logs = fixtures::random_logs(120, 21);
  std::vector<Json> docs;
  for (const auto& l : logs) docs.push_back(to_json(l));
  for (auto mode : {TimingMode::kReward, TimingMode::kIndicator}) {
    const auto m = compute_metrics(logs, mode);
    const auto r = oracle::recount(docs, mode == TimingMode::kIndicator);
    EXPECT_NEAR(m.score, r.score, 1e-12);
    EXPECT_NEAR(m.best_exist_rate, r.best_exist, 1e-12);
    EXPECT_NEAR(m.correct_exist_rate, r.correct_exist, 1e-12);
    EXPECT_NEAR(m.valid_search_pct, r.valid_search, 1e-12);
    EXPECT_NEAR(m.valid_action_pct, r.valid_action, 1e-12);
    EXPECT_NEAR(m.pref_elicited_active_pct, r.active, 1e-12);
    EXPECT_NEAR(m.pref_elicited_passive_pct, r.passive, 1e-12);
    EXPECT_NEAR(m.weighted_score, r.weighted, 1e-12);
    EXPECT_NEAR(m.coverage, r.coverage, 1e-12);
    ASSERT_EQ(m.first_valid_index.has_value(), r.first_index.has_value());
    if (r.first_index) EXPECT_NEAR(*m.first_valid_index, *r.first_index, 1e-12);
  }
}

TEST(Monotonicity, MultiAtLeastSingle) {
  for (const auto& log : fixtures::random_logs(100, 31)) {
    EXPECT_GE(score_episode(log, ChoiceMode::kMulti), score_episode(log, ChoiceMode::kSingle));
  }
}
