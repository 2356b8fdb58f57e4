#include "prefgym/predicates.hpp"

#include <algorithm>

namespace prefgym {
namespace {

const std::string* as_string(const FieldValue* v) { return v ? std::get_if<std::string>(v) : nullptr; }
const std::int64_t* as_int(const FieldValue* v) { return v ? std::get_if<std::int64_t>(v) : nullptr; }
const StringList* as_list(const FieldValue* v) { return v ? std::get_if<StringList>(v) : nullptr; }
const ServiceCosts* as_services(const FieldValue* v) {
  return v ? std::get_if<ServiceCosts>(v) : nullptr;
}

const std::int64_t* service_price(const ServiceCosts& services, const std::string& name) {
  for (const auto& [service, price] : services) {
    if (service == name) return &price;
  }
  return nullptr;
}

}  // namespace

bool satisfies(const VisibleFields& fields, const Predicate& p) {
  const FieldValue* value = find_field(fields, p.field);
  switch (p.op) {
    case PredicateOp::kEquals: {
      const auto* s = as_string(value);
      return s && *s == p.text;
    }
    case PredicateOp::kNotEquals: {
      const auto* s = as_string(value);
      return s && *s != p.text;
    }
    case PredicateOp::kContains: {
      const auto* items = as_list(value);
      return items && std::find(items->begin(), items->end(), p.text) != items->end();
    }
    case PredicateOp::kAtLeast: {
      const auto* n = as_int(value);
      return n && *n >= p.number;
    }
    case PredicateOp::kAtMost: {
      const auto* n = as_int(value);
      return n && *n <= p.number;
    }
    case PredicateOp::kMaxItems: {
      const auto* items = as_list(value);
      return items && static_cast<std::int64_t>(items->size()) <= p.number;
    }
    case PredicateOp::kHasService: {
      const auto* services = as_services(value);
      return services && service_price(*services, p.text) != nullptr;
    }
  }
  return false;
}

bool compatible(const Preference& a, const Preference& b) {
  if (a.aspect != b.aspect || a.predicate.field != b.predicate.field) return true;
  const auto op_a = a.predicate.op;
  const auto op_b = b.predicate.op;
  const bool additive = (op_a == PredicateOp::kContains && op_b == PredicateOp::kContains) ||
                        (op_a == PredicateOp::kHasService && op_b == PredicateOp::kHasService);
  return additive && a.predicate.text != b.predicate.text;
}

std::int64_t effective_cost(const VisibleFields& fields,
                            const std::vector<Preference>& preferences) {
  const auto* base = as_int(find_field(fields, "cost"));
  std::int64_t total = base ? *base : 0;
  for (const auto& pref : preferences) {
    if (pref.predicate.op != PredicateOp::kHasService) continue;
    const auto* services = as_services(find_field(fields, pref.predicate.field));
    if (!services) continue;
    if (const auto* price = service_price(*services, pref.predicate.text)) total += *price;
  }
  return total;
}

bool matches_search_args(const VisibleFields& fields, const SearchArgs& args) {
  for (const auto& [key, expected] : args) {
    if (key == "origin" || key == "destination") {
      const auto* path = as_list(find_field(fields, "path"));
      if (!path || path->empty()) return false;
      const auto& actual = key == "origin" ? path->front() : path->back();
      if (actual != expected) return false;
      continue;
    }
    const auto* actual = as_string(find_field(fields, key));
    if (!actual || *actual != expected) return false;
  }
  return true;
}

std::optional<FieldBounds> implausible_field(const VisibleFields& fields,
                                             const std::vector<FieldBounds>& bounds) {
  for (const auto& bound : bounds) {
    const auto* n = as_int(find_field(fields, bound.field));
    if (!n || *n < bound.min || *n > bound.max) return bound;
  }
  return std::nullopt;
}

bool is_clean(const VisibleFields& fields, const AspectTask& task) {
  return matches_search_args(fields, task.ground_truth_search_args) &&
         !implausible_field(fields, task.plausibility);
}

std::vector<std::string> violated_preferences(const VisibleFields& fields,
                                              const std::vector<Preference>& preferences) {
  std::vector<std::string> out;
  for (const auto& pref : preferences) {
    if (!satisfies(fields, pref.predicate)) out.push_back(pref.preference_id);
  }
  return out;
}

Label structural_label(const OptionRecord& option, const AspectTask& task) {
  if (!is_clean(option.visible_fields, task)) return Label::kNoise;
  if (!violated_preferences(option.visible_fields, task.preferences).empty()) return Label::kWrong;
  return Label::kCorrect;
}

}  // namespace prefgym
