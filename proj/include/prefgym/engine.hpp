#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prefgym/domain.hpp"
#include "prefgym/rng.hpp"
#include "prefgym/simulator.hpp"

namespace prefgym {

struct StepOutcome {
  std::string observation;
  double reward = 0.0;
  bool done = false;
  TurnRecord info;
};

// Reward component names as they appear in TurnRecord.components.
namespace component {
inline constexpr const char* kSearchCorrect = "search_correct";
inline constexpr const char* kPreferenceCorrect = "preference_correct";
inline constexpr const char* kAnswer = "answer";
inline constexpr const char* kWrongChoicePenalty = "wrong_choice_penalty";
inline constexpr const char* kStepPenalty = "step_penalty";
}  // namespace component

// Label-based answer reward r, before reward_scale.
double answer_value(Label label, const EnvConfig& config);

// Option IDs in an answer, in order of appearance, without repeats.
std::vector<std::string> extract_option_ids(const std::string& content);

// Listing shown after an accepted search: one block per option, labels
// and reasons left out.
std::string render_listing(const std::vector<const OptionRecord*>& options);

// One episode. Construction is the reset; step() is single-writer and
// callers must serialize access.
class Episode {
 public:
  // Throws INVALID_SCENARIO or INVALID_CONFIG.
  Episode(std::shared_ptr<const Scenario> scenario, EnvConfig config, std::shared_ptr<SimulatorBackend> simulator);

  const std::string& initial_observation() const { return initial_observation_; }
  // Throws EPISODE_DONE once finished.
  StepOutcome step(const AgentCall& call);
  // Ends the episode as protocol_error (adapter failure, idle expiry).
  void abort(const std::string& note);

  bool done() const { return log_.terminal_reason.has_value(); }
  int turn() const { return static_cast<int>(log_.turns.size()); }
  const EpisodeLog& log() const { return log_; }
  const Scenario& scenario() const { return *scenario_; }
  const EnvConfig& config() const { return config_; }
  const History& history() const { return history_; }
  int off_topic_counter() const { return off_topic_counter_; }
  int search_attempts() const { return search_attempts_; }
  bool revealed(const std::string& preference_id) const { return revealed_.count(preference_id) > 0; }

 private:
  struct Answer {
    std::string option_id;
    Label label;
  };

  void handle_search(const std::string& query, TurnRecord& rec);
  void handle_action(const std::string& utterance, TurnRecord& rec);
  void handle_answer(const std::string& content, TurnRecord& rec);
  void apply_passive_elicitation(std::optional<Choice> choice, TurnRecord& rec);
  std::vector<const Preference*> unrevealed() const;
  void add_component(TurnRecord& rec, const char* name, double value) const;

  std::shared_ptr<const Scenario> scenario_;
  EnvConfig config_;
  std::shared_ptr<SimulatorBackend> simulator_;
  std::string initial_observation_;
  EpisodeLog log_;
  History history_;

  std::set<AspectKind> searched_;
  int search_attempts_ = 0;
  std::map<std::string, RevealSource> revealed_;
  std::map<AspectKind, int> reveals_per_aspect_;
  int off_topic_counter_ = 0;
  std::map<AspectKind, std::vector<Answer>> answered_;
  Rng passive_rng_;
};

// Runs `calls` from a fresh reset until they run out or the episode ends.
EpisodeLog replay_calls(std::shared_ptr<const Scenario> scenario, const EnvConfig& config,
                        std::shared_ptr<SimulatorBackend> simulator, const std::vector<AgentCall>& calls);

}  // namespace prefgym
