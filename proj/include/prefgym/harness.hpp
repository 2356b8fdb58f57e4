#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prefgym/catalog.hpp"
#include "prefgym/domain.hpp"
#include "prefgym/engine.hpp"
#include "prefgym/json_io.hpp"
#include "prefgym/report.hpp"
#include "prefgym/simulator.hpp"
#include "prefgym/validation.hpp"

namespace prefgym {

// What an agent sees when an episode starts.
struct EpisodeContext {
  std::shared_ptr<const Scenario> scenario;
  EnvConfig config;
  std::string system_prompt;
  Json tool_schema;
  std::uint64_t seed = 0;
};

struct TranscriptTurn {
  AgentCall call;
  std::string observation;
};

struct Transcript {
  std::string system_prompt;
  std::string initial_observation;
  std::vector<TranscriptTurn> turns;

  const std::string& last_observation() const {
    return turns.empty() ? initial_observation : turns.back().observation;
  }
};

class AgentAdapter {
 public:
  virtual ~AgentAdapter() = default;
  virtual std::string name() const = 0;
  virtual void begin(const EpisodeContext& context) = 0;
  // nullopt when the agent produced no tool call. Throwing ends the episode
  // as a protocol error.
  virtual std::optional<AgentCall> next(const Transcript& transcript) = 0;
};

using AdapterFactory = std::function<std::unique_ptr<AgentAdapter>()>;

// Built-in scripted policies: oracle, greedy, random, silent, chatter,
// answer_first.
const std::vector<std::string>& scripted_adapter_names();
std::unique_ptr<AgentAdapter> make_scripted_adapter(std::string_view name);

// Chat-completions agent with function calling.
struct RemoteAgentOptions {
  RemoteEndpoint endpoint;
  // PREFGYM_AGENT_URL, PREFGYM_AGENT_MODEL, PREFGYM_AGENT_API_KEY.
  static RemoteAgentOptions from_env();
};
std::unique_ptr<AgentAdapter> make_remote_adapter(const RemoteAgentOptions& options);

// "scripted:<name>" or "remote:<base url>". Throws INVALID_CONFIG.
AdapterFactory make_adapter_factory(const std::string& spec, const RemoteAgentOptions& remote = {});

// Search request phrased from the ground-truth arguments.
std::string ground_truth_query(const AspectTask& task);
// A question that names the aspect and the first trigger keyword set.
std::string preference_question(const Preference& preference);

// Runs one episode to the end. Adapter failures and missing tool calls end
// it as protocol_error with a note.
EpisodeLog run_episode(std::shared_ptr<const Scenario> scenario, const EnvConfig& config,
                       std::shared_ptr<SimulatorBackend> simulator, AgentAdapter& adapter,
                       std::uint64_t adapter_seed);

struct BenchmarkOptions {
  int samples = 1;                   // k
  std::vector<std::uint64_t> seeds;  // explicit per-sample seeds; overrides samples
  int parallelism = 1;
  GroupBy group_by = GroupBy::kTier;
  TimingMode timing = TimingMode::kReward;
  std::string adapter_spec;  // recorded in the report
  std::string simulator_name;
  std::function<void(const EpisodeResult&)> on_episode;  // called in dataset order
};

struct BenchmarkRun {
  BenchmarkReport report;
  std::vector<EpisodeResult> results;  // scenario-major, sample-minor
};

// A scenario that fails to load or validate becomes an error row; the rest
// of the batch runs. Results do not depend on parallelism.
BenchmarkRun run_benchmark(const Dataset& dataset, const EnvConfig& config,
                           std::shared_ptr<SimulatorBackend> simulator, const AdapterFactory& adapters,
                           const BenchmarkOptions& options);

// Sweep knobs. "max_steps=10,20,30" or "options=w10n5,w5n0".
struct SweepPoint {
  std::string label;  // "max_steps=20", "w10n5"
  std::optional<int> max_steps;
  std::optional<OptionCounts> counts;
};
std::vector<SweepPoint> parse_sweep(std::string_view text);
OptionCounts parse_option_counts(std::string_view text);  // "w10n5"
std::string format_option_counts(const OptionCounts& counts);

// Rebuilds every scenario's options with the given counts and checks the
// result. Throws INVALID_SCENARIO if a rebuilt scenario fails.
Dataset with_option_counts(const PreferenceCatalog& catalog, const Dataset& dataset, const OptionCounts& counts,
                           std::uint64_t seed);

std::vector<BenchmarkReport> run_sweep(const PreferenceCatalog& catalog, const Dataset& dataset,
                                       const EnvConfig& config, std::shared_ptr<SimulatorBackend> simulator,
                                       const AdapterFactory& adapters, const BenchmarkOptions& options,
                                       const std::vector<SweepPoint>& points);

}  // namespace prefgym
