#include "oracles.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace oracle {

bool predicate_holds(const Json& fields, const Json& p) {
  const std::string field = p.at("field");
  const std::string op = p.at("op");
  if (!fields.contains(field)) return false;
  const Json& v = fields.at(field);
  if (op == "equals") return v.is_string() && v == p.at("text");
  if (op == "not_equals") return v.is_string() && v != p.at("text");
  if (op == "contains") {
    return v.is_array() && std::find(v.begin(), v.end(), p.at("text")) != v.end();
  }
  if (op == "at_least") return v.is_number_integer() && v.get<long long>() >= p.at("number").get<long long>();
  if (op == "at_most") return v.is_number_integer() && v.get<long long>() <= p.at("number").get<long long>();
  if (op == "max_items") return v.is_array() && static_cast<long long>(v.size()) <= p.at("number").get<long long>();
  if (op == "has_service") return v.is_object() && v.contains(p.at("text").get<std::string>());
  return false;
}

bool option_clean(const Json& option, const Json& task) {
  const Json& f = option.at("visible_fields");
  for (auto it = task.at("ground_truth_search_args").begin(); it != task.at("ground_truth_search_args").end(); ++it) {
    if (it.key() == "origin" || it.key() == "destination") {
      if (!f.contains("path") || f.at("path").empty()) return false;
      const Json& end = it.key() == "origin" ? f.at("path").front() : f.at("path").back();
      if (end != it.value()) return false;
    } else if (!f.contains(it.key()) || f.at(it.key()) != it.value()) {
      return false;
    }
  }
  for (const auto& b : task.at("plausibility")) {
    const std::string field = b.at("field");
    if (!f.contains(field) || !f.at(field).is_number_integer()) return false;
    const long long x = f.at(field).get<long long>();
    if (x < b.at("min").get<long long>() || x > b.at("max").get<long long>()) return false;
  }
  return true;
}

long long effective_cost(const Json& option, const Json& task) {
  const Json& f = option.at("visible_fields");
  long long total = f.value("cost", 0LL);
  for (const auto& p : task.at("preferences")) {
    const Json& pred = p.at("predicate");
    if (pred.at("op") != "has_service") continue;
    const std::string field = pred.at("field");
    const std::string service = pred.at("text");
    if (f.contains(field) && f.at(field).is_object() && f.at(field).contains(service)) {
      total += f.at(field).at(service).get<long long>();
    }
  }
  return total;
}

std::vector<std::string> audit_task(const Json& task, std::optional<int> wrong, std::optional<int> noise) {
  std::vector<std::string> problems;
  std::map<std::string, int> counts;
  const Json* best = nullptr;
  for (const auto& o : task.at("options")) {
    const std::string id = o.at("option_id");
    const std::string label = o.at("label");
    ++counts[label];
    const bool clean = option_clean(o, task);
    int failed = 0;
    for (const auto& p : task.at("preferences")) failed += !predicate_holds(o.at("visible_fields"), p.at("predicate"));
    if (label == "best" || label == "correct") {
      if (!clean) problems.push_back(id + " is " + label + " but not clean");
      if (failed) problems.push_back(id + " is " + label + " but breaks " + std::to_string(failed) + " preferences");
    } else if (label == "wrong") {
      if (!clean) problems.push_back(id + " is wrong but not clean");
      if (!failed) problems.push_back(id + " is wrong but satisfies every preference");
    } else if (label == "noise") {
      if (clean) problems.push_back(id + " is noise but clean");
    } else {
      problems.push_back(id + " has unknown label " + label);
    }
    if (o.at("effective_total_cost").get<long long>() != effective_cost(o, task)) {
      problems.push_back(id + " stores the wrong effective cost");
    }
    if (label == "best") best = &o;
  }
  if (counts["best"] != 1) problems.push_back("best count " + std::to_string(counts["best"]));
  if (counts["best"] + counts["correct"] != 3) problems.push_back("correct total " + std::to_string(counts["best"] + counts["correct"]));
  if (wrong && counts["wrong"] != *wrong) problems.push_back("wrong count " + std::to_string(counts["wrong"]));
  if (noise && counts["noise"] != *noise) problems.push_back("noise count " + std::to_string(counts["noise"]));
  if (best) {
    const long long b = effective_cost(*best, task);
    for (const auto& o : task.at("options")) {
      if (o.at("label") == "correct" && effective_cost(o, task) <= b) {
        problems.push_back(o.at("option_id").get<std::string>() + " costs no more than the best");
      }
    }
  }
  return problems;
}

namespace {

double label_reward(const Json& config, const std::string& label) {
  if (label == "best") return config.at("choice_best_reward").get<double>();
  if (label == "correct") return config.at("choice_correct_reward").get<double>();
  return 0.0;
}

}  // namespace

double score(const Json& log, bool multi) {
  const Json& aspects = log.at("aspects");
  if (aspects.empty()) return 0.0;
  double total = 0.0;
  for (const auto& aspect : aspects) {
    std::vector<double> rs;
    for (const auto& t : log.at("turns")) {
      if (t.at("answer_eval").is_null() || t.at("answer_eval").at("aspect") != aspect) continue;
      rs.push_back(label_reward(log.at("config"), t.at("answer_eval").at("label")));
    }
    if (rs.empty()) continue;
    total += multi ? *std::max_element(rs.begin(), rs.end()) : rs.front();
  }
  return total / static_cast<double>(aspects.size());
}

Recount recount(const std::vector<Json>& logs, bool indicator) {
  Recount r;
  double own_sum = 0, single_sum = 0, multi_sum = 0;
  long long aspects = 0, best = 0, correct = 0;
  long long searches = 0, good_searches = 0, actions = 0, type1 = 0;
  long long prefs = 0, active = 0, passive = 0;
  long long valid_aspects = 0;
  double first_sum = 0, weighted = 0;
  for (const auto& log : logs) {
    own_sum += score(log, log.at("config").at("mode") == "multi_choice");
    single_sum += score(log, false);
    multi_sum += score(log, true);
    prefs += log.at("preference_total").get<long long>();
    std::set<std::string> searched;
    for (const auto& t : log.at("turns")) {
      const std::string choice = t.at("call").at("choice");
      if (choice == "search") {
        ++searches;
        // A valid search is aligned, not a system error, and the first for its aspect.
        if (!t.at("search_system_error").get<bool>() && !t.at("judgement").is_null() &&
            t.at("judgement").at("aligned").get<bool>()) {
          const std::string a = t.at("judgement").at("aspect");
          if (searched.insert(a).second) ++good_searches;
        }
      } else if (choice == "action") {
        ++actions;
        if (!t.at("classification").is_null() && t.at("classification").get<int>() == 1) ++type1;
      }
      for (const auto& rv : t.at("revealed")) (rv.at("source") == "active" ? active : passive)++;
    }
    for (const auto& aspect : log.at("aspects")) {
      ++aspects;
      bool hit_best = false, hit_correct = false, found = false;
      for (const auto& t : log.at("turns")) {
        if (t.at("answer_eval").is_null() || t.at("answer_eval").at("aspect") != aspect) continue;
        const std::string label = t.at("answer_eval").at("label");
        hit_best |= label == "best";
        hit_correct |= label == "best" || label == "correct";
        const double reward = label_reward(log.at("config"), label);
        if (!found && reward > 0) {
          found = true;
          const int i = t.at("turn_index");
          ++valid_aspects;
          first_sum += i;
          weighted += (indicator ? 1.0 : reward) / (i + 1.0);
        }
      }
      best += hit_best;
      correct += hit_correct;
    }
  }
  auto ratio = [](double a, long long b) { return b ? a / static_cast<double>(b) : 0.0; };
  const long long n = static_cast<long long>(logs.size());
  r.score = ratio(own_sum, n);
  r.score_single = ratio(single_sum, n);
  r.score_multi = ratio(multi_sum, n);
  r.best_exist = ratio(best, aspects);
  r.correct_exist = ratio(correct, aspects);
  r.valid_search = ratio(good_searches, searches);
  r.valid_action = ratio(type1, actions);
  r.active = ratio(active, prefs);
  r.passive = ratio(passive, prefs);
  if (valid_aspects) r.first_index = first_sum / static_cast<double>(valid_aspects);
  r.weighted = ratio(weighted, aspects);
  r.coverage = ratio(valid_aspects, aspects);
  return r;
}

}  // namespace oracle
