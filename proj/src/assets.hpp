#pragma once

#include <string_view>

namespace prefgym {

// Files from data/ compiled into the library, keyed by their path below
// data/ (e.g. "prompts/judge_search.system.txt"). Empty when unknown.
std::string_view asset_text(std::string_view name);

}  // namespace prefgym
