#pragma once

#include <string>
#include <vector>

namespace prompt_check {

// Drives every remote prompt and the agent system prompt through a mock
// chat endpoint and compares the captured messages with the golden files
// in `golden_dir`. Returns one line per mismatch; empty means byte-exact.
std::vector<std::string> mismatches(const std::string& golden_dir);

}  // namespace prompt_check
