#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prefgym/domain.hpp"

namespace prefgym {

// True when the option's visible fields satisfy the predicate. A missing
// field or a value of the wrong shape never satisfies anything.
bool satisfies(const VisibleFields& fields, const Predicate& predicate);

// Two preferences may share an aspect unless they constrain the same field
// in ways that can contradict. Only list membership and service offers
// compose freely.
bool compatible(const Preference& a, const Preference& b);

// Base cost plus the price of every service a preference asks for.
std::int64_t effective_cost(const VisibleFields& fields,
                            const std::vector<Preference>& preferences);

// Field that carries a search argument, e.g. "origin" lives at the front
// of "path".
bool matches_search_args(const VisibleFields& fields, const SearchArgs& args);

// First bound the option falls outside of, if any.
std::optional<FieldBounds> implausible_field(const VisibleFields& fields,
                                             const std::vector<FieldBounds>& bounds);

// Matches the search and stays within bounds.
bool is_clean(const VisibleFields& fields, const AspectTask& task);

// Preferences the option breaks, in task order.
std::vector<std::string> violated_preferences(const VisibleFields& fields,
                                              const std::vector<Preference>& preferences);

// The label an option deserves given only its fields and the task: noise
// when unclean, wrong when any preference is broken, correct otherwise.
// Best is decided by the caller among the correct ones.
Label structural_label(const OptionRecord& option, const AspectTask& task);

}  // namespace prefgym
