#include "prefgym/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <map>
#include <thread>

#include "prefgym/error.hpp"
#include "prefgym/predicates.hpp"
#include "prefgym/prompts.hpp"
#include "prefgym/rng.hpp"
#include "prefgym/text.hpp"

namespace prefgym {

namespace {

const char* const kChatter[] = {
    "That sounds great.",
    "Thanks for the help so far.",
    "I'm excited about this trip.",
    "Let me think for a moment.",
};

std::string arg_value(const AspectTask& task, std::string_view key) {
  for (const auto& [k, v] : task.ground_truth_search_args) {
    if (k == key) return v;
  }
  return "";
}

std::string spoken(const std::string& iso) {
  if (auto d = text::parse_iso_date(iso)) return text::spoken_date(*d);
  return iso;
}

AgentCall make_call(std::string choice, std::string content, std::string thought) {
  return AgentCall{std::move(thought), std::move(choice), std::move(content)};
}

// Cheapest option that matches the search and is plausible. With
// check_preferences it must also satisfy every preference.
const OptionRecord* cheapest(const AspectTask& task, bool check_preferences) {
  const OptionRecord* pick = nullptr;
  std::int64_t pick_cost = 0;
  for (const auto& o : task.options) {
    if (!is_clean(o.visible_fields, task)) continue;
    std::int64_t cost = 0;
    if (check_preferences) {
      if (!violated_preferences(o.visible_fields, task.preferences).empty()) continue;
      cost = effective_cost(o.visible_fields, task.preferences);
    } else {
      const auto* f = find_field(o.visible_fields, "cost");
      cost = f && std::holds_alternative<std::int64_t>(*f) ? std::get<std::int64_t>(*f) : 0;
    }
    if (!pick || cost < pick_cost) {
      pick = &o;
      pick_cost = cost;
    }
  }
  return pick;
}

bool system_error(const Transcript& t) {
  return !t.turns.empty() && t.turns.back().call.choice == "search" &&
         t.turns.back().observation.rfind(prompts::kSearchSystemError, 0) == 0;
}

// Plays a fixed queue of calls, repeating a search that hit a system
// error, then chats until the episode ends.
class QueueAdapter : public AgentAdapter {
 public:
  void begin(const EpisodeContext& context) override {
    queue_.clear();
    pos_ = 0;
    chat_ = 0;
    plan(*context.scenario);
  }

  std::optional<AgentCall> next(const Transcript& transcript) override {
    if (pos_ > 0 && system_error(transcript)) return queue_[pos_ - 1];
    if (pos_ < queue_.size()) return queue_[pos_++];
    return make_call("action", kChatter[chat_++ % std::size(kChatter)], "Nothing left to do.");
  }

 protected:
  virtual void plan(const Scenario& scenario) = 0;
  std::vector<AgentCall> queue_;

 private:
  std::size_t pos_ = 0;
  std::size_t chat_ = 0;
};

class OracleAdapter : public QueueAdapter {
 public:
  std::string name() const override { return "oracle"; }

 protected:
  void plan(const Scenario& scenario) override {
    for (const auto& task : scenario.aspects) {
      queue_.push_back(make_call("search", ground_truth_query(task), "Search first."));
      for (const auto& p : task.preferences) {
        queue_.push_back(make_call("action", preference_question(p), "Ask about a detail."));
      }
      if (const auto* o = cheapest(task, true)) {
        queue_.push_back(make_call("answer", o->option_id, "Cheapest option meeting every preference."));
      }
    }
  }
};

class GreedyAdapter : public QueueAdapter {
 public:
  std::string name() const override { return "greedy"; }

 protected:
  void plan(const Scenario& scenario) override {
    for (const auto& task : scenario.aspects) {
      queue_.push_back(make_call("search", ground_truth_query(task), "Search first."));
      if (const auto* o = cheapest(task, false)) {
        queue_.push_back(make_call("answer", o->option_id, "Cheapest listed option."));
      }
    }
  }
};

class AnswerFirstAdapter : public QueueAdapter {
 public:
  std::string name() const override { return "answer_first"; }

 protected:
  void plan(const Scenario& scenario) override {
    for (const auto& task : scenario.aspects) {
      const std::string guess = std::string(1, id_prefix(task.aspect)) + "99";
      queue_.push_back(make_call("answer", guess, "Guess without searching."));
    }
  }
};

class ChatterAdapter : public QueueAdapter {
 public:
  std::string name() const override { return "chatter"; }

 protected:
  void plan(const Scenario&) override {}
};

class SilentAdapter : public AgentAdapter {
 public:
  std::string name() const override { return "silent"; }
  void begin(const EpisodeContext&) override {}
  std::optional<AgentCall> next(const Transcript&) override { return make_call("action", "", ""); }
};

class RandomAdapter : public AgentAdapter {
 public:
  std::string name() const override { return "random"; }

  void begin(const EpisodeContext& context) override {
    scenario_ = context.scenario;
    rng_ = Rng(mix_seed(context.seed, 0x7a2d));
  }

  std::optional<AgentCall> next(const Transcript&) override {
    const auto& tasks = scenario_->aspects;
    const AspectTask& task = tasks[rng_.below(tasks.size())];
    switch (rng_.below(3)) {
      case 0: return make_call("search", ground_truth_query(task), "Random search.");
      case 1: {
        if (rng_.coin() && !task.preferences.empty()) {
          const auto& p = task.preferences[rng_.below(task.preferences.size())];
          return make_call("action", preference_question(p), "Random question.");
        }
        return make_call("action", rng_.coin() ? "Do you have any preferences?" : kChatter[rng_.below(4)],
                         "Random remark.");
      }
      default: {
        const auto& o = task.options[rng_.below(task.options.size())];
        return make_call("answer", o.option_id, "Random pick.");
      }
    }
  }

 private:
  std::shared_ptr<const Scenario> scenario_;
  Rng rng_{0};
};

class RemoteAgent : public AgentAdapter {
 public:
  explicit RemoteAgent(RemoteAgentOptions options) : options_(std::move(options)) {}
  std::string name() const override { return "remote:" + options_.endpoint.model; }

  void begin(const EpisodeContext& context) override { tool_ = context.tool_schema; }

  std::optional<AgentCall> next(const Transcript& transcript) override {
    Json messages = Json::array();
    messages.push_back({{"role", "system"}, {"content", transcript.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", transcript.initial_observation}});
    for (std::size_t i = 0; i < transcript.turns.size(); ++i) {
      const auto& t = transcript.turns[i];
      const std::string id = "call_" + std::to_string(i);
      Json args = {{"thought", t.call.thought}, {"choice", t.call.choice}, {"content", t.call.content}};
      Json call = {{"id", id}, {"type", "function"},
                   {"function", {{"name", tool_name()}, {"arguments", args.dump()}}}};
      messages.push_back({{"role", "assistant"}, {"content", nullptr}, {"tool_calls", Json::array({call})}});
      messages.push_back({{"role", "tool"}, {"tool_call_id", id}, {"content", t.observation}});
    }
    const auto& e = options_.endpoint;
    Json body = {{"model", e.model},         {"messages", messages},       {"tools", Json::array({tool_})},
                 {"tool_choice", "required"}, {"temperature", e.temperature}, {"max_tokens", e.max_tokens}};
    Json reply;
    try {
      reply = post_chat(e, body);
    } catch (const Error& err) {
      throw Error(ErrorCode::kAdapterFailure, err.what());
    }
    const Json* calls = nullptr;
    try {
      calls = &reply.at("choices").at(0).at("message").at("tool_calls");
    } catch (const Json::exception&) {
      return std::nullopt;
    }
    if (!calls->is_array() || calls->empty()) return std::nullopt;
    try {
      const Json& fn = calls->at(0).at("function");
      const Json& raw = fn.at("arguments");
      const Json args = raw.is_string() ? Json::parse(raw.get<std::string>()) : raw;
      AgentCall out;
      out.thought = args.value("thought", "");
      out.choice = args.at("choice").get<std::string>();
      out.content = args.at("content").get<std::string>();
      return out;
    } catch (const Json::exception& ex) {
      throw Error(ErrorCode::kMalformedCall, std::string("tool call arguments: ") + ex.what());
    }
  }

 private:
  std::string tool_name() const {
    if (tool_.contains("function")) return tool_["function"].value("name", "interact_with_env");
    return "interact_with_env";
  }

  RemoteAgentOptions options_;
  Json tool_;
};

}  // namespace

std::string ground_truth_query(const AspectTask& task) {
  std::string q = "Search for ";
  const auto display = std::string(aspect_display_name(task.aspect));
  q += (std::string("aeiou").find(display.front()) != std::string::npos ? "an " : "a ") + display;
  const auto origin = arg_value(task, "origin");
  const auto destination = arg_value(task, "destination");
  const auto city = arg_value(task, "city");
  if (!origin.empty()) q += " from " + origin;
  if (!destination.empty()) q += " to " + destination;
  if (!city.empty()) q += " in " + city;
  std::vector<std::string> dates;
  for (const auto& [k, v] : task.ground_truth_search_args) {
    if (text::parse_iso_date(v)) dates.push_back(spoken(v));
  }
  if (dates.size() == 1) q += " on " + dates[0];
  if (dates.size() == 2) q += " from " + dates[0] + " to " + dates[1];
  return q + ".";
}

std::string preference_question(const Preference& preference) {
  std::string topic;
  if (!preference.trigger_topics.empty()) {
    for (const auto& kw : preference.trigger_topics.front()) topic += (topic.empty() ? "" : " ") + kw;
  }
  return "For the " + std::string(aspect_display_name(preference.aspect)) + ", how do you feel about the " +
         topic + "?";
}

const std::vector<std::string>& scripted_adapter_names() {
  static const std::vector<std::string> names = {"oracle", "greedy", "random", "silent", "chatter", "answer_first"};
  return names;
}

std::unique_ptr<AgentAdapter> make_scripted_adapter(std::string_view name) {
  if (name == "oracle") return std::make_unique<OracleAdapter>();
  if (name == "greedy") return std::make_unique<GreedyAdapter>();
  if (name == "random") return std::make_unique<RandomAdapter>();
  if (name == "silent") return std::make_unique<SilentAdapter>();
  if (name == "chatter") return std::make_unique<ChatterAdapter>();
  if (name == "answer_first") return std::make_unique<AnswerFirstAdapter>();
  throw Error(ErrorCode::kInvalidConfig, "unknown scripted adapter '" + std::string(name) + "'");
}

RemoteAgentOptions RemoteAgentOptions::from_env() { return {RemoteEndpoint::from_env("PREFGYM_AGENT")}; }

std::unique_ptr<AgentAdapter> make_remote_adapter(const RemoteAgentOptions& options) {
  return std::make_unique<RemoteAgent>(options);
}

AdapterFactory make_adapter_factory(const std::string& spec, const RemoteAgentOptions& remote) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "scripted") {
    make_scripted_adapter(rest);  // fail early on a bad name
    return [rest] { return make_scripted_adapter(rest); };
  }
  if (kind == "remote") {
    RemoteAgentOptions options = remote;
    if (!rest.empty()) options.endpoint.base_url = rest;
    if (options.endpoint.base_url.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "remote adapter needs an endpoint URL");
    }
    options.endpoint.rate_limit = remote.endpoint.rate_limit;
    return [options] { return make_remote_adapter(options); };
  }
  throw Error(ErrorCode::kInvalidConfig, "adapter spec must be scripted:<name> or remote:<url>, got '" + spec + "'");
}

EpisodeLog run_episode(std::shared_ptr<const Scenario> scenario, const EnvConfig& config,
                       std::shared_ptr<SimulatorBackend> simulator, AgentAdapter& adapter,
                       std::uint64_t adapter_seed) {
  Episode episode(scenario, config, std::move(simulator));
  EpisodeContext context{scenario, config, prompts::agent_system_prompt(config.mode), prompts::tool_schema(),
                         adapter_seed};
  Transcript transcript{context.system_prompt, episode.initial_observation(), {}};
  try {
    adapter.begin(context);
  } catch (const std::exception& e) {
    episode.abort(std::string("adapter failure: ") + e.what());
  }
  while (!episode.done()) {
    std::optional<AgentCall> call;
    try {
      call = adapter.next(transcript);
    } catch (const std::exception& e) {
      episode.abort(std::string("adapter failure: ") + e.what());
      break;
    }
    if (!call) {
      episode.abort("agent produced no tool call");
      break;
    }
    auto outcome = episode.step(*call);
    transcript.turns.push_back({*call, outcome.observation});
  }
  return episode.log();
}

BenchmarkRun run_benchmark(const Dataset& dataset, const EnvConfig& config,
                           std::shared_ptr<SimulatorBackend> simulator, const AdapterFactory& adapters,
                           const BenchmarkOptions& options) {
  std::vector<std::uint64_t> seeds = options.seeds;
  if (seeds.empty()) {
    if (options.samples < 1) throw Error(ErrorCode::kInvalidConfig, "samples must be at least 1");
    for (int j = 0; j < options.samples; ++j) {
      seeds.push_back(j == 0 ? config.rng_seed : mix_seed(config.rng_seed, static_cast<std::uint64_t>(j)));
    }
  }
  const std::size_t n = dataset.scenarios.size();
  const std::size_t k = seeds.size();
  std::vector<std::shared_ptr<const Scenario>> shared;
  for (const auto& s : dataset.scenarios) shared.push_back(std::make_shared<const Scenario>(s));

  std::vector<EpisodeResult> results(n * k);
  auto run_one = [&](std::size_t job) {
    const std::size_t i = job / k;
    const std::size_t j = job % k;
    const Scenario& s = *shared[i];
    EpisodeResult& r = results[job];
    r.scenario_id = s.scenario_id;
    r.tier = s.tier;
    r.composition = composition_label(s.composition);
    r.sample = static_cast<int>(j);
    r.seed = seeds[j];
    EnvConfig c = config;
    c.rng_seed = seeds[j];
    try {
      auto adapter = adapters();
      r.log = run_episode(shared[i], c, simulator, *adapter, mix_seed(seeds[j], i));
    } catch (const std::exception& e) {
      r.error = e.what();
      r.log = EpisodeLog{};
      r.log.scenario_id = s.scenario_id;
      r.log.config = c;
      r.log.tier = s.tier;
      r.log.composition = s.composition;
      r.log.terminal_reason = TerminalReason::kProtocolError;
      r.log.note = r.error;
    }
  };

  const std::size_t jobs = n * k;
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, options.parallelism)), 1,
                                                      std::max<std::size_t>(jobs, 1));
  if (workers <= 1) {
    for (std::size_t job = 0; job < jobs; ++job) run_one(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t job = next++; job < jobs; job = next++) run_one(job);
      });
    }
    for (auto& t : pool) t.join();
  }
  if (options.on_episode) {
    for (const auto& r : results) options.on_episode(r);
  }

  BenchmarkRun run;
  run.report = aggregate(results, options.group_by, options.timing);
  Json seed_list = Json::array();
  for (auto s : seeds) seed_list.push_back(s);
  auto& meta = run.report.metadata;
  meta["dataset_digest"] = dataset.manifest.digest.empty() ? build_manifest(dataset.scenarios).digest
                                                            : dataset.manifest.digest;
  meta["config"] = to_json(config);
  meta["adapter"] = options.adapter_spec;
  meta["simulator"] = options.simulator_name.empty() ? simulator->name() : options.simulator_name;
  meta["samples"] = k;
  meta["seeds"] = seed_list;
  meta["group_by"] = std::string(to_string(options.group_by));
  meta["timing"] = std::string(to_string(options.timing));
  run.results = std::move(results);
  return run;
}

OptionCounts parse_option_counts(std::string_view text) {
  auto bad = [&] { return Error(ErrorCode::kInvalidConfig, "option counts look like w10n5, got '" + std::string(text) + "'"); };
  if (text.size() < 4 || text.front() != 'w') throw bad();
  const auto n = text.find('n');
  if (n == std::string_view::npos || n < 2 || n + 1 >= text.size()) throw bad();
  auto number = [&](std::string_view digits) {
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw bad();
    }
    return std::stoi(std::string(digits));
  };
  OptionCounts c;
  c.wrong = number(text.substr(1, n - 1));
  c.noise = number(text.substr(n + 1));
  return c;
}

std::string format_option_counts(const OptionCounts& counts) {
  return "w" + std::to_string(counts.wrong) + "n" + std::to_string(counts.noise);
}

std::vector<SweepPoint> parse_sweep(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw Error(ErrorCode::kInvalidConfig, "sweep looks like max_steps=10,20 or options=w10n5,w10n0");
  const std::string knob(text.substr(0, eq));
  std::vector<SweepPoint> points;
  std::string_view rest = text.substr(eq + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string item(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    if (item.empty()) continue;
    SweepPoint p;
    if (knob == "max_steps") {
      try {
        std::size_t used = 0;
        p.max_steps = std::stoi(item, &used);
        if (used != item.size() || *p.max_steps < 1) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidConfig, "max_steps sweep value '" + item + "' is not a positive integer");
      }
      p.label = "max_steps=" + item;
    } else if (knob == "options") {
      p.counts = parse_option_counts(item);
      p.label = format_option_counts(*p.counts);
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown sweep knob '" + knob + "'");
    }
    points.push_back(std::move(p));
  }
  if (points.empty()) throw Error(ErrorCode::kInvalidConfig, "sweep needs at least one value");
  return points;
}

Dataset with_option_counts(const PreferenceCatalog& catalog, const Dataset& dataset, const OptionCounts& counts,
                           std::uint64_t seed) {
  Dataset out;
  for (std::size_t i = 0; i < dataset.scenarios.size(); ++i) {
    Scenario s = regenerate_options(catalog, dataset.scenarios[i], counts, mix_seed(seed, i));
    if (auto report = validate_scenario(s, counts); !report.empty()) {
      std::vector<std::string> details;
      for (const auto& v : report) details.push_back(v.code + " " + v.where + ": " + v.message);
      throw Error(ErrorCode::kInvalidScenario, s.scenario_id + " fails after regeneration", details);
    }
    out.scenarios.push_back(std::move(s));
  }
  out.manifest = build_manifest(out.scenarios);
  out.manifest.catalog_digest = dataset.manifest.catalog_digest;
  out.manifest.plan = dataset.manifest.plan;
  out.manifest.seed = dataset.manifest.seed;
  out.manifest.counts = counts;
  return out;
}

std::vector<BenchmarkReport> run_sweep(const PreferenceCatalog& catalog, const Dataset& dataset,
                                       const EnvConfig& config, std::shared_ptr<SimulatorBackend> simulator,
                                       const AdapterFactory& adapters, const BenchmarkOptions& options,
                                       const std::vector<SweepPoint>& points) {
  if (points.empty()) throw Error(ErrorCode::kInvalidConfig, "sweep needs at least one value");
  std::vector<BenchmarkReport> reports;
  for (const auto& p : points) {
    EnvConfig c = config;
    if (p.max_steps) c.max_steps = *p.max_steps;
    BenchmarkRun run;
    if (p.counts) {
      run = run_benchmark(with_option_counts(catalog, dataset, *p.counts, mix_seed(config.rng_seed, 0x5eed)), c,
                          simulator, adapters, options);
    } else {
      run = run_benchmark(dataset, c, simulator, adapters, options);
    }
    run.report.metadata["knob"] = p.label;
    reports.push_back(std::move(run.report));
  }
  return reports;
}

}  // namespace prefgym
