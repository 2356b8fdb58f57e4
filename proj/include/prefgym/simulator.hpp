#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prefgym/catalog.hpp"
#include "prefgym/domain.hpp"
#include "prefgym/json_io.hpp"

namespace prefgym {

class TokenBucket;

// One line of the conversation as the simulated user sees it.
struct Message {
  enum class Role { kAgent, kUser };
  Role role = Role::kUser;
  std::string text;
  friend bool operator==(const Message&, const Message&) = default;
};

using History = std::vector<Message>;

struct UtteranceClass {
  int kind = 4;  // 1..4
  std::optional<std::string> preference_id;
};

// The five things a simulated user must do. Implementations never throw
// for backend trouble; they degrade and report through their warning sink.
class SimulatorBackend {
 public:
  virtual ~SimulatorBackend() = default;
  virtual std::string name() const = 0;

  virtual SearchJudgement judge_search(const Scenario& scenario, const std::string& query) = 0;
  // `unrevealed` is in scenario order.
  virtual UtteranceClass classify_utterance(const Scenario& scenario, const History& history,
                                            const std::string& utterance,
                                            const std::vector<const Preference*>& unrevealed) = 0;
  // `ordinal` counts earlier reveals in the same aspect.
  virtual std::string render_preference_reveal(const Preference& preference, const History& history,
                                               const std::string& utterance, int ordinal) = 0;
  virtual std::string render_proactive_reveal(const Preference& preference, const History& history,
                                              const std::string& utterance, int ordinal) = 0;
  virtual std::string render_neutral(const History& history, const std::string& utterance) = 0;
};

// Deterministic keyword-driven user. Needs the catalog for its lexicon and
// for the attribute vocabulary of every aspect.
class RuleBasedSimulator : public SimulatorBackend {
 public:
  explicit RuleBasedSimulator(const PreferenceCatalog& catalog);

  std::string name() const override { return "rule-based"; }
  SearchJudgement judge_search(const Scenario& scenario, const std::string& query) override;
  UtteranceClass classify_utterance(const Scenario& scenario, const History& history, const std::string& utterance,
                                    const std::vector<const Preference*>& unrevealed) override;
  std::string render_preference_reveal(const Preference& preference, const History& history,
                                       const std::string& utterance, int ordinal) override;
  std::string render_proactive_reveal(const Preference& preference, const History& history,
                                      const std::string& utterance, int ordinal) override;
  std::string render_neutral(const History& history, const std::string& utterance) override;

  // Aspect attribute terms plus every trigger keyword of that aspect.
  const std::vector<std::string>& attribute_terms(AspectKind aspect) const;

 private:
  Lexicon lexicon_;
  std::vector<std::pair<AspectKind, std::vector<std::string>>> attributes_;
};

struct RemoteEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080/v1
  std::string model = "gpt-4o";
  std::string api_key;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::chrono::milliseconds timeout{15000};
  std::shared_ptr<TokenBucket> rate_limit;

  // PREFGYM_JUDGE_URL, PREFGYM_JUDGE_MODEL, PREFGYM_JUDGE_API_KEY.
  static RemoteEndpoint from_env(const std::string& prefix = "PREFGYM_JUDGE");
};

// Sends one system + user message pair and returns the assistant text.
// Throws BACKEND_UNAVAILABLE on transport errors or a non-2xx status.
std::string chat_completion(const RemoteEndpoint& endpoint, const std::string& system, const std::string& user);
// POSTs `body` to <base_url>/chat/completions and returns the parsed reply.
Json post_chat(const RemoteEndpoint& endpoint, const Json& body);

// Chat-completions judge using the shipped prompt templates. Each call is
// tried twice; after that search degrades to not aligned, classification
// to type 4, and the renderers to the rule-based output.
class RemoteSimulator : public SimulatorBackend {
 public:
  using WarningSink = std::function<void(const std::string&)>;

  RemoteSimulator(RemoteEndpoint endpoint, const PreferenceCatalog& catalog, WarningSink warn = {});

  std::string name() const override { return "remote"; }
  SearchJudgement judge_search(const Scenario& scenario, const std::string& query) override;
  UtteranceClass classify_utterance(const Scenario& scenario, const History& history, const std::string& utterance,
                                    const std::vector<const Preference*>& unrevealed) override;
  std::string render_preference_reveal(const Preference& preference, const History& history,
                                       const std::string& utterance, int ordinal) override;
  std::string render_proactive_reveal(const Preference& preference, const History& history,
                                      const std::string& utterance, int ordinal) override;
  std::string render_neutral(const History& history, const std::string& utterance) override;

 private:
  std::optional<Json> ask(const std::string& system_name, const std::string& user_name,
                          const std::vector<std::pair<std::string, std::string>>& slots);
  void warn(const std::string& message);

  RemoteEndpoint endpoint_;
  RuleBasedSimulator fallback_;
  WarningSink warn_;
};

// Slot values used by the remote prompts; exposed for golden tests.
std::string format_history(const History& history);
std::string format_ground_truth(const Scenario& scenario);
std::string format_preferences(const std::vector<const Preference*>& preferences);
std::string format_preference(const Preference& preference, int ordinal);

// Extracts the first JSON object from a model reply, tolerating code
// fences and surrounding prose.
std::optional<Json> parse_reply_object(const std::string& reply);

}  // namespace prefgym
