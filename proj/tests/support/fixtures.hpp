#pragma once

// Shared builders for the test suites.

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "prefgym/catalog.hpp"
#include "prefgym/engine.hpp"
#include "prefgym/harness.hpp"
#include "prefgym/simulator.hpp"

namespace fixtures {

using namespace prefgym;

inline std::shared_ptr<SimulatorBackend> rule_sim() {
  return std::make_shared<RuleBasedSimulator>(builtin_catalog());
}

inline std::shared_ptr<const Scenario> scenario(const std::vector<int>& composition, std::uint64_t seed,
                                                OptionCounts counts = {}) {
  return std::make_shared<const Scenario>(sample_scenario(builtin_catalog(), composition, seed, {counts}));
}

inline Dataset dataset(const std::string& plan, std::uint64_t seed) {
  return generate_dataset(builtin_catalog(), parse_plan(plan), seed);
}

inline EpisodeLog run_scripted(const std::string& adapter, std::shared_ptr<const Scenario> s, const EnvConfig& config,
                               std::uint64_t seed = 0) {
  auto a = make_scripted_adapter(adapter);
  return run_episode(std::move(s), config, rule_sim(), *a, seed);
}

// Logs from a mix of scripted policies, compositions and configs.
inline std::vector<EpisodeLog> random_logs(int n, std::uint64_t seed) {
  static const std::vector<std::vector<int>> compositions = {{2, 2}, {3, 3}, {4, 4}, {2, 2, 3}, {2, 3, 4}, {2, 2, 2, 2}};
  static const std::vector<std::string> adapters = {"random", "random", "random", "greedy", "chatter", "oracle",
                                                    "answer_first"};
  std::mt19937_64 rng(seed);
  std::vector<EpisodeLog> logs;
  auto sim = rule_sim();
  for (int i = 0; i < n; ++i) {
    const auto& comp = compositions[rng() % compositions.size()];
    auto s = scenario(comp, rng() % 100000);
    EnvConfig config;
    config.mode = rng() % 2 ? ChoiceMode::kMulti : ChoiceMode::kSingle;
    config.max_steps = 5 + static_cast<int>(rng() % 26);
    config.search_failure_interval = static_cast<int>(rng() % 6);
    config.elicitation_interval = static_cast<int>(rng() % 5);
    config.rng_seed = rng();
    if (rng() % 4 == 0) config.reward_scale = 2.5;
    if (rng() % 4 == 0) config.off_topic_policy = OffTopicPolicy::kActionTurnsOnly;
    auto a = make_scripted_adapter(adapters[rng() % adapters.size()]);
    logs.push_back(run_episode(s, config, sim, *a, rng()));
  }
  return logs;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("prefgym-" + name + "-" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
