// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "prompt_check.hpp"
#include "prefgym/json_io.hpp"
#include "prefgym/metrics.hpp"
#include "prefgym/prompts.hpp"

using namespace prefgym;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome worked_score() {
  const auto t0 = Clock::now();
  EpisodeLog log;
  log.config.mode = ChoiceMode::kMulti;
  log.aspects = {AspectKind::kFlight, AspectKind::kHotel};
  const std::vector<std::pair<AspectKind, Label>> answers = {
      {AspectKind::kFlight, Label::kBest},  {AspectKind::kFlight, Label::kCorrect}, {AspectKind::kHotel, Label::kWrong},
      {AspectKind::kHotel, Label::kCorrect}, {AspectKind::kHotel, Label::kNoise}};
  for (const auto& [aspect, label] : answers) {
    TurnRecord t;
    t.turn_index = static_cast<int>(log.turns.size());
    t.call = {"", "answer", "x"};
    t.answer_eval = AnswerEval{"x", aspect, label};
    log.turns.push_back(t);
  }
  const double s = score_episode(log);
  const double ms = seconds_since(t0) * 1000;
  return {s == 0.9 && ms < 1.0, "score " + fmt("%g", s) + (s == 0.9 ? " (exactly 0.9)" : " (not 0.9)") + ", " + fmt("%.3f", ms) + " ms"};
}

Outcome config_fidelity() {
  const EnvConfig c;
  std::vector<std::string> bad;
  auto check = [&](const char* name, bool ok) {
    if (!ok) bad.push_back(name);
  };
  check("mode", c.mode == ChoiceMode::kSingle);
  check("max_steps", c.max_steps == 20);
  check("search_failure_interval", c.search_failure_interval == 5);
  check("elicitation_interval", c.elicitation_interval == 3);
  check("reward_scale", c.reward_scale == 1.0);
  check("step_penalty", c.step_penalty == 0.0);
  check("search_correct_reward", c.search_correct_reward == 0.2);
  check("preference_correct_reward", c.preference_correct_reward == 0.2);
  check("choice_best_reward", c.choice_best_reward == 1.0);
  check("choice_correct_reward", c.choice_correct_reward == 0.8);
  check("wrong_choice_penalty", c.wrong_choice_penalty == 0.0);
  const Json j = to_json(c);
  check("json max_steps", j["max_steps"] == 20);
  check("json mode", j["mode"] == "single_choice");
  std::string detail = "11 fields checked";
  for (const auto& b : bad) detail += "; mismatch " + b;
  return {bad.empty(), detail};
}

Outcome oracle_episode() {
  const auto t0 = Clock::now();
  const auto ds = fixtures::dataset("22:100", 1);
  BenchmarkOptions o;
  o.group_by = GroupBy::kNone;
  const auto run = run_benchmark(ds, {}, fixtures::rule_sim(), make_adapter_factory("scripted:oracle"), o);
  const double secs = seconds_since(t0);
  const auto& m = run.report.rows.front().metrics;
  std::size_t longest = 0;
  for (const auto& r : run.results) longest = std::max(longest, r.log.turns.size());
  const bool ok = run.results.size() == 100 && m.score == 1.0 && m.best_exist_rate == 1.0 &&
                  m.pref_elicited_active_pct == 1.0 && m.pref_elicited_passive_pct == 0.0 && longest <= 20 && secs < 10;
  return {ok, "score " + fmt("%g", m.score) + ", best " + fmt("%g", m.best_exist_rate) + ", active " +
                  fmt("%g%%", m.pref_elicited_active_pct * 100) + ", passive " +
                  fmt("%g%%", m.pref_elicited_passive_pct * 100) + ", max turns " + std::to_string(longest) + ", " +
                  fmt("%.2f", secs) + " s"};
}

Outcome elicitation_timing() {
  int checked = 0;
  std::string problem;
  for (const char* adapter : {"silent", "chatter"}) {
    for (const std::vector<int>& comp : std::vector<std::vector<int>>{{2, 2}, {3, 4}, {2, 3, 4}, {4, 4, 4}}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto s = fixtures::scenario(comp, seed);
        EnvConfig c;
        c.max_steps = 3 * s->total_preferences() + 4;
        c.rng_seed = seed;
        const auto log = fixtures::run_scripted(adapter, s, c, seed);
        std::vector<int> got, want;
        for (const auto& t : log.turns) {
          for (const auto& r : t.revealed) got.push_back(t.turn_index + 1);
        }
        for (int k = 1; k <= s->total_preferences(); ++k) want.push_back(3 * k);
        ++checked;
        if (got != want && problem.empty()) problem = std::string(adapter) + " on " + s->scenario_id + " revealed on turns";
        if (got != want) {
          for (int g : got) problem += " " + std::to_string(g);
        }
      }
    }
  }
  return {problem.empty(), problem.empty() ? std::to_string(checked) + " episodes reveal on turns 3, 6, 9, ... until exhausted"
                                           : problem};
}

Outcome search_failure() {
  int checked = 0;
  std::string problem;
  for (int pattern = 0; pattern < 3; ++pattern) {
    auto s = fixtures::scenario({2, 2}, 30 + pattern);
    EnvConfig c;
    c.elicitation_interval = 0;
    Episode e(s, c, fixtures::rule_sim());
    const auto good = ground_truth_query(s->aspects[0]);
    std::vector<int> errors;
    for (int attempt = 1; attempt <= 15; ++attempt) {
      const bool aligned = pattern == 0 || (pattern == 1 && attempt % 2 == 0);
      const auto out = e.step({"", "search", aligned ? good : "a search about nothing"});
      if (out.info.search_system_error) {
        errors.push_back(attempt);
        if (out.observation != prompts::kSearchSystemError) problem = "wrong system error text";
      }
    }
    ++checked;
    if (errors != std::vector<int>{5, 10, 15}) problem = "pattern " + std::to_string(pattern) + " failed on other attempts";
  }
  return {problem.empty(), problem.empty() ? "attempts 5, 10, 15 failed in " + std::to_string(checked) + " patterns" : problem};
}

Outcome repeat_rejection() {
  int checked = 0;
  std::string problem;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = fixtures::scenario({2, 2}, seed);
    Episode e(s, {}, fixtures::rule_sim());
    const auto& task = s->aspects[0];
    const auto& first = task.options[seed % task.options.size()];
    const auto& second = task.options[(seed + 1) % task.options.size()];
    e.step({"", "answer", "My pick is " + first.option_id});
    const auto before = collect_answers(e.log());
    const double score_before = score_episode(e.log());
    const auto out = e.step({"", "answer", "Actually " + second.option_id});
    ++checked;
    if (out.observation != prompts::repeat_answer_rejection(first.option_id[0])) problem = "unexpected feedback: " + out.observation;
    if (out.info.answer_eval || out.reward != 0.0) problem = "second answer was recorded";
    const auto after = collect_answers(e.log());
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i].answers != after[i].answers) problem = "answer record changed";
    }
    if (score_episode(e.log()) != score_before) problem = "score changed";
  }
  return {problem.empty(), problem.empty() ? std::to_string(checked) + " repeats rejected, records unchanged" : problem};
}

Outcome generator_soundness() {
  const auto t0 = Clock::now();
  int aspects = 0, options = 0;
  std::vector<std::string> problems;
  const std::vector<std::vector<int>> comps = {{2, 2}, {3, 3}, {4, 4}, {2, 3, 4}, {4, 4, 4, 4}};
  for (std::uint64_t seed = 0; aspects < 1000; ++seed) {
    const auto s = sample_scenario(builtin_catalog(), comps[seed % comps.size()], seed);
    for (const auto& t : s.aspects) {
      if (aspects == 1000) break;
      ++aspects;
      options += static_cast<int>(t.options.size());
      for (const auto& p : oracle::audit_task(to_json(t), 10, 5)) problems.push_back(s.scenario_id + " " + p);
    }
  }
  const double secs = seconds_since(t0);
  std::string detail = std::to_string(aspects) + " aspects, " + std::to_string(options) + " options, " +
                       std::to_string(problems.size()) + " violations, " + fmt("%.2f", secs) + " s";
  if (!problems.empty()) detail += "; first: " + problems.front();
  return {problems.empty() && secs < 30, detail};
}

Outcome metrics_equivalence() {
  const auto logs = fixtures::random_logs(200, 2024);
  std::vector<Json> docs;
  for (const auto& l : logs) docs.push_back(to_json(l));
  double worst = 0;
  bool index_ok = true;
  for (auto mode : {TimingMode::kReward, TimingMode::kIndicator}) {
    const auto m = compute_metrics(logs, mode);
    const auto r = oracle::recount(docs, mode == TimingMode::kIndicator);
    for (auto [a, b] : std::vector<std::pair<double, double>>{{m.score, r.score},
                                                               {m.best_exist_rate, r.best_exist},
                                                               {m.correct_exist_rate, r.correct_exist},
                                                               {m.valid_search_pct, r.valid_search},
                                                               {m.valid_action_pct, r.valid_action},
                                                               {m.pref_elicited_active_pct, r.active},
                                                               {m.pref_elicited_passive_pct, r.passive},
                                                               {m.weighted_score, r.weighted},
                                                               {m.coverage, r.coverage}}) {
      worst = std::max(worst, std::abs(a - b));
    }
    if (m.first_valid_index.has_value() != r.first_index.has_value()) index_ok = false;
    else if (r.first_index) worst = std::max(worst, std::abs(*m.first_valid_index - *r.first_index));
  }
  return {worst <= 1e-12 && index_ok, "200 logs, max abs difference " + fmt("%.3g", worst)};
}

Outcome mode_monotonicity() {
  int violations = 0;
  for (const auto& log : fixtures::random_logs(200, 77)) {
    const double single = score_episode(log, ChoiceMode::kSingle), multi = score_episode(log, ChoiceMode::kMulti);
    const Json doc = to_json(log);
    if (multi < single || oracle::score(doc, true) < oracle::score(doc, false)) ++violations;
  }
  const auto ds = fixtures::dataset("22:10,33:5,44:5", 5);
  BenchmarkOptions o;
  o.samples = 8;
  o.parallelism = 4;
  const auto run = run_benchmark(ds, {}, fixtures::rule_sim(), make_adapter_factory("scripted:random"), o);
  int pass_k_violations = 0;
  double prev = -1;
  std::string curve;
  for (int k = 1; k <= 8; ++k) {
    std::vector<EpisodeResult> subset;
    for (const auto& r : run.results) {
      if (r.sample < k) subset.push_back(r);
    }
    const double m = aggregate(subset, GroupBy::kNone).rows.front().max_score;
    if (m < prev) ++pass_k_violations;
    prev = m;
    curve += (k > 1 ? " " : "") + fmt("%.3f", m);
  }
  return {violations == 0 && pass_k_violations == 0,
          std::to_string(violations) + " score violations in 200 logs, " + std::to_string(pass_k_violations) +
              " pass-k violations (max score k=1..8: " + curve + ")"};
}

Outcome determinism() {
  const auto ds = fixtures::dataset("22:10,233:5,344:5", 9);
  auto go = [&](int parallel) {
    BenchmarkOptions o;
    o.samples = 3;
    o.parallelism = parallel;
    o.adapter_spec = "scripted:random";
    o.simulator_name = "rule-based";
    return report_digest(run_benchmark(ds, {}, fixtures::rule_sim(), make_adapter_factory(o.adapter_spec), o).report);
  };
  const auto a = go(1), b = go(1), c = go(6);
  return {a == b && b == c, "digest " + a.substr(0, 16) + "... (serial, serial, 6 threads)"};
}

Outcome prompt_fidelity() {
  const auto problems = prompt_check::mismatches(PREFGYM_GOLDEN_DIR);
  std::string detail = problems.empty() ? "5 judge prompts, 2 agent prompts, tool schema byte-exact" : "";
  for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Worked score example", worked_score},
      {"Config fidelity", config_fidelity},
      {"Oracle episode", oracle_episode},
      {"Elicitation timing", elicitation_timing},
      {"Search failure injection", search_failure},
      {"Single-choice repeat rejection", repeat_rejection},
      {"Generator soundness", generator_soundness},
      {"Metrics oracle equivalence", metrics_equivalence},
      {"Mode monotonicity", mode_monotonicity},
      {"Determinism", determinism},
      {"Prompt fidelity", prompt_fidelity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
