#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "prefgym/error.hpp"
#include "prefgym/prompts.hpp"

using namespace prefgym;

namespace {

std::shared_ptr<const Scenario> with_aspect(AspectKind kind, std::vector<int> comp = {2, 2}) {
  for (std::uint64_t seed = 1;; ++seed) {
    auto s = fixtures::scenario(comp, seed);
    if (s->find_aspect(kind)) return s;
  }
}

AgentCall search(const std::string& q) { return {"", "search", q}; }
AgentCall action(const std::string& u) { return {"", "action", u}; }
AgentCall answer(const std::string& a) { return {"", "answer", a}; }

const OptionRecord& labelled(const AspectTask& t, Label label) {
  for (const auto& o : t.options) {
    if (o.label == label) return o;
  }
  throw std::runtime_error("no option with that label");
}

Episode make(std::shared_ptr<const Scenario> s, EnvConfig c = {}) { return Episode(std::move(s), c, fixtures::rule_sim()); }

}  // namespace

TEST(Reset, BudgetSentenceAndNoLeaks) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto s = fixtures::scenario({2, 3, 4}, seed);
    auto e = make(s);
    const auto& obs = e.initial_observation();
    EXPECT_NE(obs.find(prompts::kBudgetSentence), std::string::npos);
    for (const auto& t : s->aspects) {
      for (const auto& p : t.preferences) {
        EXPECT_EQ(obs.find(p.canonical_statement), std::string::npos);
        for (const auto& st : p.implicit_statements) EXPECT_EQ(obs.find(st), std::string::npos);
      }
    }
    EXPECT_EQ(obs, make(s).initial_observation());
    EXPECT_EQ(e.turn(), 0);
    EXPECT_FALSE(e.done());
  }
}

TEST(Reset, RejectsBadConfig) {
  EnvConfig c;
  c.max_steps = -1;
  try {
    make(fixtures::scenario({2, 2}, 1), c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
  }
}

TEST(Reset, RejectsBrokenScenario) {
  auto s = *fixtures::scenario({2, 2}, 1);
  s.aspects[0].options[1].label = s.aspects[0].options[0].label = Label::kBest;
  try {
    make(std::make_shared<const Scenario>(s));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidScenario);
  }
}

TEST(Step, MaxStepsEndsOnTwentiethTurn) {
  auto e = make(fixtures::scenario({2, 2}, 3));
  for (int i = 1; i <= 20; ++i) {
    auto out = e.step(action("That sounds great."));
    EXPECT_EQ(out.done, i == 20) << i;
  }
  EXPECT_EQ(e.log().terminal_reason, TerminalReason::kMaxSteps);
  try {
    e.step(action("hello"));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kEpisodeDone);
  }
}

TEST(Step, SingleChoiceEndsWhenAllAnswered) {
  auto s = fixtures::scenario({2, 2}, 4);
  auto e = make(s);
  auto first = e.step(answer(labelled(s->aspects[0], Label::kWrong).option_id));
  EXPECT_FALSE(first.done);
  auto second = e.step(answer(labelled(s->aspects[1], Label::kBest).option_id));
  EXPECT_TRUE(second.done);
  EXPECT_EQ(e.log().terminal_reason, TerminalReason::kAllAnswered);
}

TEST(Step, MultiChoiceKeepsGoing) {
  auto s = fixtures::scenario({2, 2}, 4);
  EnvConfig c;
  c.mode = ChoiceMode::kMulti;
  c.max_steps = 6;
  auto e = make(s, c);
  e.step(answer(labelled(s->aspects[0], Label::kWrong).option_id));
  EXPECT_FALSE(e.step(answer(labelled(s->aspects[1], Label::kBest).option_id)).done);
  auto again = e.step(answer(labelled(s->aspects[0], Label::kBest).option_id));
  EXPECT_DOUBLE_EQ(again.reward, 1.0);
  ASSERT_TRUE(again.info.answer_eval);
}

TEST(Step, InvalidChoiceIsProtocolError) {
  auto e = make(fixtures::scenario({2, 2}, 5));
  auto out = e.step({"", "dance", "hello"});
  EXPECT_TRUE(out.info.protocol_error);
  EXPECT_EQ(out.reward, 0.0);
  EXPECT_NE(out.observation.find("dance"), std::string::npos);
  EXPECT_FALSE(out.done);
}

TEST(Search, FirstAlignedHotelQuery) {
  auto s = with_aspect(AspectKind::kHotel);
  const auto& task = *s->find_aspect(AspectKind::kHotel);
  auto e = make(s);
  auto out = e.step(search(ground_truth_query(task)));
  EXPECT_DOUBLE_EQ(out.reward, 0.2);
  EXPECT_EQ(out.observation.rfind(prompts::kSearchAccepted, 0), 0u);
  for (const auto& o : task.options) EXPECT_NE(out.observation.find("[" + o.option_id + "]"), std::string::npos);
  const auto listing = out.observation.substr(out.observation.find("\n\n"));
  for (const char* hidden : {"best", "correct", "wrong", "noise", "suitable", "label"}) {
    EXPECT_EQ(listing.find(hidden), std::string::npos) << hidden;
  }
  for (const auto& o : task.options) EXPECT_EQ(out.observation.find(o.label_reason), std::string::npos);
  ASSERT_TRUE(out.info.judgement);
  EXPECT_TRUE(out.info.judgement->aligned);
  EXPECT_EQ(out.info.judgement->aspect, AspectKind::kHotel);
}

TEST(Search, RepeatIsRedirected) {
  auto s = with_aspect(AspectKind::kHotel);
  const auto q = ground_truth_query(*s->find_aspect(AspectKind::kHotel));
  auto e = make(s);
  e.step(search(q));
  auto out = e.step(search(q));
  EXPECT_EQ(out.reward, 0.0);
  EXPECT_EQ(out.observation, prompts::search_redirect(AspectKind::kHotel));
  EXPECT_NE(out.observation.find("Please directly refer to the previous search results."), std::string::npos);
}

TEST(Search, MisalignedGivesEmpty) {
  auto e = make(fixtures::scenario({2, 2}, 6));
  auto out = e.step(search("Find me something fun."));
  EXPECT_EQ(out.reward, 0.0);
  EXPECT_EQ(out.observation, prompts::kSearchEmpty);
}

TEST(Search, FailureEveryFifthAttempt) {
  auto s = fixtures::scenario({2, 2}, 7);
  EnvConfig c;
  c.elicitation_interval = 0;
  auto e = make(s, c);
  const auto good = ground_truth_query(s->aspects[0]);
  std::vector<int> errors;
  for (int attempt = 1; attempt <= 15; ++attempt) {
    auto out = e.step(search(attempt % 2 ? good : "nothing useful"));
    if (out.info.search_system_error) {
      errors.push_back(attempt);
      EXPECT_EQ(out.observation, prompts::kSearchSystemError);
      EXPECT_EQ(out.reward, 0.0);
    }
  }
  EXPECT_EQ(errors, (std::vector<int>{5, 10, 15}));
}

TEST(Search, FailureIntervalZeroNeverFails) {
  auto s = fixtures::scenario({2, 2}, 7);
  EnvConfig c;
  c.search_failure_interval = 0;
  auto e = make(s, c);
  for (int i = 0; i < 20; ++i) EXPECT_FALSE(e.step(search("x")).info.search_system_error);
}

TEST(Action, ConcreteQuestionRevealsActively) {
  auto s = fixtures::scenario({2, 2}, 8);
  const auto& pref = s->aspects[0].preferences[0];
  auto e = make(s);
  auto out = e.step(action(preference_question(pref)));
  EXPECT_EQ(out.info.classification, 1);
  EXPECT_DOUBLE_EQ(out.reward, 0.2);
  ASSERT_EQ(out.info.revealed.size(), 1u);
  EXPECT_EQ(out.info.revealed[0].preference_id, pref.preference_id);
  EXPECT_EQ(out.info.revealed[0].source, RevealSource::kActive);
  EXPECT_TRUE(e.revealed(pref.preference_id));
  EXPECT_EQ(out.observation.find(pref.canonical_statement), std::string::npos);

  auto again = e.step(action(preference_question(pref)));
  EXPECT_EQ(again.info.classification, 2);
  EXPECT_EQ(again.observation.rfind(prompts::kUnavailablePreference, 0), 0u);
  EXPECT_EQ(again.reward, 0.0);
}

TEST(Action, VagueCarQuestion) {
  auto s = with_aspect(AspectKind::kRentalCar);
  auto e = make(s);
  auto out = e.step(action("Do you have any preferences for the car?"));
  EXPECT_EQ(out.info.classification, 3);
  EXPECT_EQ(out.observation, prompts::kVagueQuestion);
}

TEST(Passive, ThirdChatterTurnReveals) {
  auto s = fixtures::scenario({2, 2}, 9);
  auto e = make(s);
  for (int i = 0; i < 2; ++i) EXPECT_TRUE(e.step(action("That sounds great.")).info.revealed.empty());
  auto out = e.step(action("That sounds great."));
  ASSERT_EQ(out.info.revealed.size(), 1u);
  EXPECT_EQ(out.info.revealed[0].source, RevealSource::kPassive);
  EXPECT_EQ(out.reward, 0.0);
}

TEST(Passive, IntervalZeroNeverTriggers) {
  EnvConfig c;
  c.elicitation_interval = 0;
  auto e = make(fixtures::scenario({2, 2}, 9), c);
  for (int i = 0; i < 20; ++i) EXPECT_TRUE(e.step(action("That sounds great.")).info.revealed.empty());
}

TEST(Passive, ReproducibleUnderSeed) {
  auto s = fixtures::scenario({4, 4}, 10);
  EnvConfig c;
  c.rng_seed = 99;
  auto run = [&] {
    std::vector<std::string> ids;
    auto e = make(s, c);
    for (int i = 0; i < 20; ++i) {
      for (const auto& r : e.step(action("Let me think for a moment.")).info.revealed) ids.push_back(r.preference_id);
    }
    return ids;
  };
  const auto a = run();
  EXPECT_EQ(a.size(), 6u);
  EXPECT_EQ(a, run());
}

TEST(Passive, ActiveRevealResetsCounter) {
  auto s = fixtures::scenario({4, 4}, 11);
  auto e = make(s);
  e.step(action("That sounds great."));
  e.step(action("That sounds great."));
  EXPECT_EQ(e.step(action(preference_question(s->aspects[0].preferences[0]))).info.revealed.size(), 1u);
  EXPECT_TRUE(e.step(action("That sounds great.")).info.revealed.empty());
  EXPECT_TRUE(e.step(action("That sounds great.")).info.revealed.empty());
  EXPECT_EQ(e.step(action("That sounds great.")).info.revealed.size(), 1u);
}

TEST(Passive, ActionTurnsOnlyPolicyIgnoresSearches) {
  auto s = fixtures::scenario({2, 2}, 12);
  EnvConfig c;
  c.off_topic_policy = OffTopicPolicy::kActionTurnsOnly;
  auto e = make(s, c);
  e.step(action("That sounds great."));
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(e.step(search("nothing")).info.revealed.empty());
  e.step(action("That sounds great."));
  EXPECT_EQ(e.step(action("That sounds great.")).info.revealed.size(), 1u);
}

TEST(Answer, RewardsByLabel) {
  auto s = fixtures::scenario({2, 2}, 13);
  EnvConfig c;
  c.mode = ChoiceMode::kMulti;
  auto e = make(s, c);
  EXPECT_DOUBLE_EQ(e.step(answer(labelled(s->aspects[0], Label::kBest).option_id)).reward, 1.0);
  EXPECT_DOUBLE_EQ(e.step(answer(labelled(s->aspects[0], Label::kCorrect).option_id)).reward, 0.8);
  EXPECT_DOUBLE_EQ(e.step(answer(labelled(s->aspects[0], Label::kWrong).option_id)).reward, 0.0);
  EXPECT_DOUBLE_EQ(e.step(answer(labelled(s->aspects[0], Label::kNoise).option_id)).reward, 0.0);
}

TEST(Answer, SingleChoiceRepeatRejected) {
  auto s = fixtures::scenario({2, 2}, 14);
  auto e = make(s);
  const auto& first = labelled(s->aspects[0], Label::kWrong);
  e.step(answer(first.option_id));
  auto out = e.step(answer(labelled(s->aspects[0], Label::kBest).option_id));
  EXPECT_EQ(out.observation, prompts::repeat_answer_rejection(first.option_id[0]));
  EXPECT_FALSE(out.info.answer_eval);
  EXPECT_EQ(out.reward, 0.0);
  int answers = 0;
  for (const auto& t : e.log().turns) answers += t.answer_eval.has_value();
  EXPECT_EQ(answers, 1);
}

TEST(Answer, IdProblems) {
  auto s = fixtures::scenario({2, 2}, 15);
  EnvConfig c;
  c.elicitation_interval = 0;
  auto e = make(s, c);
  const auto a = s->aspects[0].options[0].option_id, b = s->aspects[0].options[1].option_id;
  EXPECT_EQ(e.step(answer("I pick " + a + " and " + b)).observation, prompts::kAnswerNeedsOneId);
  EXPECT_EQ(e.step(answer("the cheap one")).observation, prompts::kAnswerMissingId);
  EXPECT_EQ(e.step(answer("Z999")).observation, prompts::unknown_option("Z999"));
  EXPECT_FALSE(e.done());
}

TEST(Rewards, ScaleAndPenalties) {
  auto s = fixtures::scenario({2, 2}, 16);
  EnvConfig c;
  c.reward_scale = 2.0;
  c.step_penalty = 0.05;
  c.wrong_choice_penalty = 0.3;
  auto e = make(s, c);
  auto out = e.step(answer(labelled(s->aspects[0], Label::kWrong).option_id));
  EXPECT_NEAR(out.reward, -0.6 - 0.1, 1e-12);
  auto good = e.step(answer(labelled(s->aspects[1], Label::kCorrect).option_id));
  EXPECT_NEAR(good.reward, 1.6 - 0.1, 1e-12);
}

TEST(Rewards, ComponentsSumToReward) {
  for (const auto& log : fixtures::random_logs(60, 3)) {
    for (const auto& t : log.turns) {
      double sum = 0;
      for (const auto& c : t.components) sum += c.value;
      EXPECT_NEAR(sum, t.reward, 1e-12);
    }
  }
}

TEST(Listing, IdsExtracted) {
  EXPECT_EQ(extract_option_ids("I choose F3, then H12 (not h4) and F3 again"), (std::vector<std::string>{"F3", "H12"}));
  EXPECT_TRUE(extract_option_ids("F03 and FF1").empty());
}

TEST(Replay, SameCallsSameLog) {
  auto s = fixtures::scenario({2, 3}, 17);
  auto log = fixtures::run_scripted("random", s, {}, 5);
  std::vector<AgentCall> calls;
  for (const auto& t : log.turns) calls.push_back(t.call);
  auto again = replay_calls(s, {}, fixtures::rule_sim(), calls);
  EXPECT_EQ(again.turns, log.turns);
}
