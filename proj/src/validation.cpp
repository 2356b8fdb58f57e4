#include "prefgym/validation.hpp"

#include <algorithm>
#include <set>

#include "prefgym/error.hpp"
#include "prefgym/predicates.hpp"
#include "prefgym/text.hpp"

namespace prefgym {
namespace {

void add(ValidationReport& report, std::string code, std::string where, std::string message) {
  report.push_back({std::move(code), std::move(where), std::move(message)});
}

bool contains_folded(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return false;
  return text::lower(haystack).find(text::lower(needle)) != std::string::npos;
}

void check_options(const AspectTask& task, const std::string& where,
                   const std::optional<OptionCounts>& expected, ValidationReport& report) {
  const char prefix = id_prefix(task.aspect);
  std::set<std::uint32_t> numbers;
  int best = 0, correct = 0, wrong = 0, noise = 0;
  const OptionRecord* best_option = nullptr;

  for (const auto& option : task.options) {
    const std::string at = where + "/" + option.option_id;
    const auto id = OptionId::parse(option.option_id);
    if (!id || id->str() != option.option_id) {
      add(report, "BAD_OPTION_ID", at, "option id does not round-trip");
    } else {
      if (id->prefix != prefix) add(report, "ID_PREFIX_MISMATCH", at, "prefix does not match aspect");
      if (!numbers.insert(id->number).second) add(report, "DUPLICATE_OPTION_ID", at, "repeated id");
    }
    if (option.aspect != task.aspect) add(report, "OPTION_ASPECT_MISMATCH", at, "wrong aspect");
    if (option.label_reason.empty()) add(report, "MISSING_LABEL_REASON", at, "label_reason is empty");

    const auto cost = effective_cost(option.visible_fields, task.preferences);
    if (cost != option.effective_total_cost) {
      add(report, "COST_MISMATCH", at,
          "effective_total_cost " + std::to_string(option.effective_total_cost) +
              " but fields give " + std::to_string(cost));
    }

    const Label audited = structural_label(option, task);
    switch (option.label) {
      case Label::kBest:
        ++best;
        best_option = &option;
        [[fallthrough]];
      case Label::kCorrect:
        if (option.label == Label::kCorrect) ++correct;
        if (audited != Label::kCorrect) {
          add(report, "CORRECT_NOT_SATISFYING", at,
              std::string("labelled ") + std::string(to_string(option.label)) + " but audits as " +
                  std::string(to_string(audited)));
        }
        break;
      case Label::kWrong:
        ++wrong;
        if (audited != Label::kWrong) {
          add(report, "WRONG_NOT_VIOLATING", at,
              std::string("labelled wrong but audits as ") + std::string(to_string(audited)));
        }
        break;
      case Label::kNoise:
        ++noise;
        if (audited != Label::kNoise) {
          add(report, "NOISE_IS_CLEAN", at, "noise option matches the search and is plausible");
        }
        break;
    }
  }

  if (best == 0) add(report, "NO_BEST", where, "no option labelled best");
  if (best > 1) add(report, "DUPLICATE_BEST", where, std::to_string(best) + " options labelled best");
  if (best == 1 && best_option) {
    for (const auto& option : task.options) {
      if (&option == best_option || option.label != Label::kCorrect) continue;
      if (option.effective_total_cost <= best_option->effective_total_cost) {
        add(report, "NON_STRICT_BEST", where + "/" + best_option->option_id,
            "best costs " + std::to_string(best_option->effective_total_cost) + ", " +
                option.option_id + " costs " + std::to_string(option.effective_total_cost));
      }
    }
  }
  if (expected) {
    if (best != 1 || best + correct != 3 || wrong != expected->wrong || noise != expected->noise) {
      add(report, "LABEL_COUNTS", where,
          "got B/C/W/N " + std::to_string(best) + "/" + std::to_string(best + correct) + "/" +
              std::to_string(wrong) + "/" + std::to_string(noise) + ", expected 1/3/" +
              std::to_string(expected->wrong) + "/" + std::to_string(expected->noise));
    }
  }
}

}  // namespace

ValidationReport validate_preference(const Preference& pref) {
  ValidationReport report;
  const std::string where = "preference/" + pref.preference_id;
  if (pref.preference_id.empty()) add(report, "EMPTY_PREFERENCE_ID", where, "missing id");
  if (pref.implicit_statements.empty()) {
    add(report, "EMPTY_IMPLICIT_STATEMENTS", where, "at least one implicit statement required");
  }
  for (const auto& statement : pref.implicit_statements) {
    if (contains_folded(statement, pref.canonical_statement)) {
      add(report, "IMPLICIT_CONTAINS_CANONICAL", where, "statement repeats the canonical text");
    }
  }
  if (pref.trigger_topics.empty()) add(report, "EMPTY_TRIGGERS", where, "no trigger topics");
  for (const auto& topic : pref.trigger_topics) {
    if (topic.empty()) add(report, "EMPTY_TRIGGERS", where, "empty trigger keyword set");
  }
  if (pref.predicate.field.empty()) add(report, "EMPTY_PREDICATE", where, "predicate has no field");
  return report;
}

ValidationReport validate_scenario(const Scenario& scenario,
                                   const std::optional<OptionCounts>& expected) {
  ValidationReport report;
  const std::string root = scenario.scenario_id.empty() ? "scenario" : scenario.scenario_id;
  if (scenario.scenario_id.empty()) add(report, "EMPTY_SCENARIO_ID", root, "missing scenario_id");

  if (scenario.aspects.size() < 2 || scenario.aspects.size() > 4) {
    add(report, "ASPECT_COUNT", root,
        "scenario must have 2 to 4 aspects, got " + std::to_string(scenario.aspects.size()));
  }
  if (scenario.composition.size() != scenario.aspects.size()) {
    add(report, "COMPOSITION_MISMATCH", root, "composition length differs from aspect count");
  } else {
    std::vector<int> actual;
    for (const auto& task : scenario.aspects) actual.push_back(static_cast<int>(task.preferences.size()));
    if (composition_label(actual) != composition_label(scenario.composition)) {
      add(report, "COMPOSITION_MISMATCH", root,
          "preference counts " + composition_label(actual) + " vs composition " +
              composition_label(scenario.composition));
    }
  }
  try {
    if (tier_of(scenario.composition) != scenario.tier) {
      add(report, "TIER_MISMATCH", root, "tier inconsistent with composition");
    }
  } catch (const Error& e) {
    add(report, "UNSUPPORTED_COMPOSITION", root, e.what());
  }

  std::set<AspectKind> seen_aspects;
  std::set<std::string> seen_prefs;
  for (const auto& task : scenario.aspects) {
    const std::string where = root + "/" + std::string(aspect_name(task.aspect));
    if (!seen_aspects.insert(task.aspect).second) add(report, "DUPLICATE_ASPECT", where, "repeated aspect");
    if (task.ground_truth_search_args.empty()) {
      add(report, "MISSING_SEARCH_ARGS", where, "no ground-truth search arguments");
    }
    for (std::size_t i = 0; i < task.preferences.size(); ++i) {
      const auto& pref = task.preferences[i];
      if (!seen_prefs.insert(pref.preference_id).second) {
        add(report, "DUPLICATE_PREFERENCE", where + "/" + pref.preference_id, "repeated preference id");
      }
      if (pref.aspect != task.aspect) {
        add(report, "PREFERENCE_ASPECT_MISMATCH", where + "/" + pref.preference_id, "wrong aspect");
      }
      for (auto& v : validate_preference(pref)) report.push_back(std::move(v));
      for (std::size_t j = i + 1; j < task.preferences.size(); ++j) {
        if (!compatible(pref, task.preferences[j])) {
          add(report, "INCOMPATIBLE_PREFERENCES", where,
              pref.preference_id + " conflicts with " + task.preferences[j].preference_id);
        }
      }
      if (contains_folded(scenario.description, pref.canonical_statement)) {
        add(report, "DESCRIPTION_LEAK", where + "/" + pref.preference_id, "canonical statement in description");
      }
      for (const auto& statement : pref.implicit_statements) {
        if (contains_folded(scenario.description, statement)) {
          add(report, "DESCRIPTION_LEAK", where + "/" + pref.preference_id, "implicit statement in description");
        }
      }
    }
    check_options(task, where, expected, report);
  }
  return report;
}

std::string format_report(const ValidationReport& report) {
  std::string out;
  for (const auto& v : report) out += v.code + " " + v.where + ": " + v.message + "\n";
  return out;
}

}  // namespace prefgym
