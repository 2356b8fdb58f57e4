#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prefgym/domain.hpp"

namespace prefgym {

struct Violation {
  std::string code;     // e.g. "DUPLICATE_BEST"
  std::string where;    // scenario / aspect / option path
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

struct OptionCounts {
  int wrong = 10;
  int noise = 5;
  friend bool operator==(const OptionCounts&, const OptionCounts&) = default;
};

// Checks every structural and labelling invariant of a scenario. Labels
// are audited against the predicates, so a mislabelled option is reported
// even when the counts look right. When `expected` is given the per-aspect
// label counts must also match (1 best, 2 more correct, wrong, noise).
ValidationReport validate_scenario(const Scenario& scenario,
                                   const std::optional<OptionCounts>& expected = std::nullopt);

// Checks one preference in isolation (statements, triggers).
ValidationReport validate_preference(const Preference& preference);

std::string format_report(const ValidationReport& report);

}  // namespace prefgym
