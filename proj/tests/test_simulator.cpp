#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "mock_chat.hpp"
#include "prefgym/prompts.hpp"
#include "prefgym/text.hpp"

using namespace prefgym;

namespace {

const Preference& pref(const std::string& id) {
  for (const auto& a : builtin_catalog().aspects) {
    for (const auto& p : a.preferences) {
      if (p.preference_id == id) return p;
    }
  }
  throw std::runtime_error("no preference " + id);
}

// One task per catalog aspect holding every catalog preference; enough for
// judging and classification.
Scenario whole_catalog() {
  Scenario s;
  s.scenario_id = "catalog";
  s.description = "A trip.";
  for (const auto& a : builtin_catalog().aspects) {
    AspectTask t;
    t.aspect = a.aspect;
    t.preferences = a.preferences;
    s.aspects.push_back(t);
  }
  return s;
}

Scenario sf_trip() {
  Scenario s;
  s.scenario_id = "sf";
  AspectTask flight;
  flight.aspect = AspectKind::kFlight;
  flight.ground_truth_search_args = {{"origin", "New York"}, {"destination", "San Francisco"}, {"date", "2025-04-10"}};
  AspectTask hotel;
  hotel.aspect = AspectKind::kHotel;
  hotel.ground_truth_search_args = {{"city", "San Francisco"}, {"check_in", "2025-04-10"}, {"check_out", "2025-04-17"}};
  s.aspects = {flight, hotel};
  return s;
}

std::vector<const Preference*> all_of(const Scenario& s) {
  std::vector<const Preference*> out;
  for (const auto& t : s.aspects) {
    for (const auto& p : t.preferences) out.push_back(&p);
  }
  return out;
}

}  // namespace

TEST(RuleJudge, AlignedHotelQuery) {
  RuleBasedSimulator sim(builtin_catalog());
  const auto j = sim.judge_search(sf_trip(), "hotels in San Francisco from April 10th to April 17th with parking");
  EXPECT_TRUE(j.aligned);
  EXPECT_EQ(j.aspect, AspectKind::kHotel);
}

TEST(RuleJudge, MissingDateNotAligned) {
  RuleBasedSimulator sim(builtin_catalog());
  EXPECT_FALSE(sim.judge_search(sf_trip(), "hotels in San Francisco from April 10th").aligned);
  EXPECT_FALSE(sim.judge_search(sf_trip(), "hotels in San Francisco").aligned);
}

TEST(RuleJudge, WrongArgumentNotAligned) {
  RuleBasedSimulator sim(builtin_catalog());
  EXPECT_FALSE(sim.judge_search(sf_trip(), "hotels in Austin from April 10th to April 17th").aligned);
  EXPECT_FALSE(sim.judge_search(sf_trip(), "hotels in San Francisco from April 11th to April 17th").aligned);
}

TEST(RuleJudge, CombinedRequestNotAligned) {
  RuleBasedSimulator sim(builtin_catalog());
  EXPECT_FALSE(sim.judge_search(sf_trip(),
                                "a flight from New York to San Francisco on April 10th and a hotel in San Francisco "
                                "from April 10th to April 17th")
                   .aligned);
}

TEST(RuleJudge, FlightQuery) {
  RuleBasedSimulator sim(builtin_catalog());
  const auto j = sim.judge_search(sf_trip(), "Search for a flight from New York to San Francisco on April 10th.");
  EXPECT_TRUE(j.aligned);
  EXPECT_EQ(j.aspect, AspectKind::kFlight);
  EXPECT_FALSE(sim.judge_search(sf_trip(), "Search for a flight from San Francisco to New York on April 10th.").aligned);
}

TEST(RuleJudge, GroundTruthQueriesAlwaysAlign) {
  RuleBasedSimulator sim(builtin_catalog());
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto s = fixtures::scenario({2, 2, 2, 2}, seed);
    for (const auto& t : s->aspects) {
      const auto j = sim.judge_search(*s, ground_truth_query(t));
      ASSERT_TRUE(j.aligned) << ground_truth_query(t);
      EXPECT_EQ(j.aspect, t.aspect);
    }
  }
}

TEST(RuleClassifier, ConcreteCarModelQuestion) {
  RuleBasedSimulator sim(builtin_catalog());
  auto s = whole_catalog();
  const auto c = sim.classify_utterance(s, {}, "What exact model of the car do you like?", all_of(s));
  EXPECT_EQ(c.kind, 1);
  EXPECT_EQ(c.preference_id, "car-tesla");
}

TEST(RuleClassifier, VagueCarQuestion) {
  RuleBasedSimulator sim(builtin_catalog());
  auto s = whole_catalog();
  EXPECT_EQ(sim.classify_utterance(s, {}, "Do you have any preferences for the car?", all_of(s)).kind, 3);
  EXPECT_EQ(sim.classify_utterance(s, {}, "Do you have any preferences?", all_of(s)).kind, 3);
}

TEST(RuleClassifier, GeneratedQuestionsHitTheirOwnPreference) {
  RuleBasedSimulator sim(builtin_catalog());
  auto s = whole_catalog();
  const auto open = all_of(s);
  for (const auto* p : open) {
    const auto c = sim.classify_utterance(s, {}, preference_question(*p), open);
    EXPECT_EQ(c.kind, 1) << p->preference_id;
    EXPECT_EQ(c.preference_id, p->preference_id) << preference_question(*p);
  }
}

TEST(RuleClassifier, ExhaustedIsTypeTwo) {
  RuleBasedSimulator sim(builtin_catalog());
  auto s = whole_catalog();
  EXPECT_EQ(sim.classify_utterance(s, {}, "What exact model of the car do you like?", {}).kind, 2);
}

TEST(RuleClassifier, SmallTalkIsTypeFour) {
  RuleBasedSimulator sim(builtin_catalog());
  auto s = whole_catalog();
  for (const char* u : {"That sounds great.", "Thanks for the help so far.", "I'm excited about this trip.", ""}) {
    EXPECT_EQ(sim.classify_utterance(s, {}, u, all_of(s)).kind, 4) << u;
  }
}

TEST(RuleReveal, DirectFlightIsIndirect) {
  RuleBasedSimulator sim(builtin_catalog());
  const auto& p = pref("flight-direct");
  const auto text = sim.render_preference_reveal(p, {}, "Any layover concerns?", 0);
  EXPECT_NE(text.find("packed"), std::string::npos);
  EXPECT_EQ(text.find(p.canonical_statement), std::string::npos);
  EXPECT_EQ(text, sim.render_preference_reveal(p, {}, "Any layover concerns?", 0));
}

TEST(RuleReveal, NeverStatesCanonical) {
  RuleBasedSimulator sim(builtin_catalog());
  for (const auto& a : builtin_catalog().aspects) {
    for (const auto& p : a.preferences) {
      for (int ord = 0; ord < 3; ++ord) {
        EXPECT_EQ(sim.render_preference_reveal(p, {}, "", ord).find(p.canonical_statement), std::string::npos);
        EXPECT_EQ(sim.render_proactive_reveal(p, {}, "", ord).find(p.canonical_statement), std::string::npos);
      }
    }
  }
}

TEST(RuleReveal, ProactiveNamesAspect) {
  RuleBasedSimulator sim(builtin_catalog());
  const auto& p = pref("hotel-parking");
  ASSERT_EQ(text::normalize(p.implicit_statements[0]).find(" hotel "), std::string::npos);
  const auto text = sim.render_proactive_reveal(p, {}, "Nice.", 0);
  EXPECT_NE(text.find("hotel"), std::string::npos);
  EXPECT_EQ(text, sim.render_proactive_reveal(p, {}, "Nice.", 0));
}

TEST(RuleReveal, ProactiveKeepsStatementThatNamesAspect) {
  RuleBasedSimulator sim(builtin_catalog());
  for (const auto& a : builtin_catalog().aspects) {
    for (const auto& p : a.preferences) {
      const auto statement = sim.render_preference_reveal(p, {}, "", 0);
      const auto proactive = sim.render_proactive_reveal(p, {}, "", 0);
      if (proactive.size() == statement.size()) EXPECT_EQ(proactive, statement);
      else EXPECT_NE(proactive.find(statement.substr(1)), std::string::npos);
    }
  }
}

TEST(RuleNeutral, FromPool) {
  RuleBasedSimulator sim(builtin_catalog());
  const auto& pool = prompts::neutral_pool();
  EXPECT_NE(std::find(pool.begin(), pool.end(), "Everything is fine."), pool.end());
  History h;
  for (int i = 0; i < 10; ++i) {
    const auto text = sim.render_neutral(h, "hello");
    EXPECT_NE(std::find(pool.begin(), pool.end(), text), pool.end());
    for (const auto& a : builtin_catalog().aspects) {
      for (const auto& p : a.preferences) {
        for (const auto& st : p.implicit_statements) EXPECT_EQ(text.find(st), std::string::npos);
      }
    }
    h.push_back({Message::Role::kAgent, "x"});
  }
}

TEST(ReplyParsing, ToleratesFencesAndProse) {
  auto j = parse_reply_object("Sure!\n```json\n{\"type\": \"1\", \"preference_id\": \"x\"}\n```\nDone.");
  ASSERT_TRUE(j);
  EXPECT_EQ((*j)["type"], "1");
  EXPECT_FALSE(parse_reply_object("no json here"));
  auto nested = parse_reply_object("{\"a\": {\"b\": \"}\"}, \"c\": 1}");
  ASSERT_TRUE(nested);
  EXPECT_EQ((*nested)["c"], 1);
}

TEST(RemoteSimulatorTest, JudgesThroughEndpoint) {
  mock::ChatServer server([](const mock::Json& req) {
    const std::string system = req["messages"][0]["content"];
    if (system.find("search request") != std::string::npos || system.find("alignment") != std::string::npos) {
      return mock::text_reply("{\"thought\": \"ok\", \"alignment_judgement\": \"True\", \"alignment_aspect\": \"hotel\"}");
    }
    return mock::text_reply("{\"thought\": \"ok\", \"type\": \"3\"}");
  });
  RemoteEndpoint ep;
  ep.base_url = server.base_url();
  ep.api_key = "k";
  std::vector<std::string> warnings;
  RemoteSimulator sim(ep, builtin_catalog(), [&](const std::string& w) { warnings.push_back(w); });
  const auto j = sim.judge_search(sf_trip(), "hotels please");
  EXPECT_TRUE(j.aligned);
  EXPECT_EQ(j.aspect, AspectKind::kHotel);
  EXPECT_TRUE(warnings.empty());
  EXPECT_EQ(server.auth_headers().front(), "Bearer k");
  EXPECT_EQ(server.requests().front()["model"], "gpt-4o");
  EXPECT_EQ(server.requests().front()["temperature"], 0.0);
}

TEST(RemoteSimulatorTest, DegradesWhenEndpointFails) {
  mock::ChatServer server([](const mock::Json&) { return mock::Json(); });
  RemoteEndpoint ep;
  ep.base_url = server.base_url();
  std::vector<std::string> warnings;
  RemoteSimulator sim(ep, builtin_catalog(), [&](const std::string& w) { warnings.push_back(w); });
  auto s = whole_catalog();
  EXPECT_FALSE(sim.judge_search(sf_trip(), "hotels").aligned);
  EXPECT_EQ(sim.classify_utterance(s, {}, "What exact model of the car do you like?", all_of(s)).kind, 4);
  const auto& p = pref("hotel-parking");
  EXPECT_EQ(sim.render_preference_reveal(p, {}, "", 0), RuleBasedSimulator(builtin_catalog()).render_preference_reveal(p, {}, "", 0));
  EXPECT_FALSE(warnings.empty());
  EXPECT_EQ(server.requests().size(), 6u);  // two tries each
}

TEST(RemoteSimulatorTest, UnreachableEndpointDegrades) {
  RemoteEndpoint ep;
  ep.base_url = "http://127.0.0.1:1/v1";
  ep.timeout = std::chrono::milliseconds(300);
  int warnings = 0;
  RemoteSimulator sim(ep, builtin_catalog(), [&](const std::string&) { ++warnings; });
  EXPECT_FALSE(sim.judge_search(sf_trip(), "hotels").aligned);
  EXPECT_GT(warnings, 0);
}

TEST(RemoteSimulatorTest, UnknownPreferenceIdFallsBackToTypeTwo) {
  mock::ChatServer server([](const mock::Json&) {
    return mock::text_reply("{\"type\": 1, \"preference_id\": \"made-up\"}");
  });
  RemoteEndpoint ep;
  ep.base_url = server.base_url();
  RemoteSimulator sim(ep, builtin_catalog(), [](const std::string&) {});
  auto s = whole_catalog();
  EXPECT_EQ(sim.classify_utterance(s, {}, "What model?", all_of(s)).kind, 2);
}
