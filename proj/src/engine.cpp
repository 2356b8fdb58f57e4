#include "prefgym/engine.hpp"

#include <algorithm>
#include <cctype>

#include "prefgym/error.hpp"
#include "prefgym/prompts.hpp"
#include "prefgym/validation.hpp"

namespace prefgym {

double answer_value(Label label, const EnvConfig& config) {
  switch (label) {
    case Label::kBest: return config.choice_best_reward;
    case Label::kCorrect: return config.choice_correct_reward;
    default: return 0.0;
  }
}

std::vector<std::string> extract_option_ids(const std::string& content) {
  std::vector<std::string> ids;
  std::size_t i = 0;
  while (i < content.size()) {
    const auto c = static_cast<unsigned char>(content[i]);
    const bool boundary = i == 0 || !std::isalnum(static_cast<unsigned char>(content[i - 1]));
    if (boundary && std::isupper(c)) {
      std::size_t j = i + 1;
      while (j < content.size() && std::isdigit(static_cast<unsigned char>(content[j]))) ++j;
      const bool ends = j == content.size() || !std::isalnum(static_cast<unsigned char>(content[j]));
      if (j > i + 1 && ends) {
        if (auto id = OptionId::parse(std::string_view(content).substr(i, j - i))) {
          const auto s = id->str();
          if (std::find(ids.begin(), ids.end(), s) == ids.end()) ids.push_back(s);
        }
        i = j;
        continue;
      }
    }
    ++i;
  }
  return ids;
}

std::string render_listing(const std::vector<const OptionRecord*>& options) {
  std::string out;
  for (const auto* o : options) {
    if (!out.empty()) out += "\n\n";
    out += "[" + o->option_id + "]";
    for (const auto& f : o->visible_fields) out += "\n" + f.key + ": " + display_value(f.key, f.value);
  }
  return out;
}

Episode::Episode(std::shared_ptr<const Scenario> scenario, EnvConfig config, std::shared_ptr<SimulatorBackend> simulator)
    : scenario_(std::move(scenario)),
      config_(config),
      simulator_(std::move(simulator)),
      passive_rng_(mix_seed(config.rng_seed, 0x9a55)) {
  if (!scenario_) throw Error(ErrorCode::kInvalidScenario, "no scenario");
  if (!simulator_) throw Error(ErrorCode::kInvalidConfig, "no simulator backend");
  if (auto problems = validate_config(config_); !problems.empty()) {
    throw Error(ErrorCode::kInvalidConfig, problems.front(), problems);
  }
  if (auto report = validate_scenario(*scenario_); !report.empty()) {
    std::vector<std::string> details;
    for (const auto& v : report) details.push_back(v.code + " " + v.where + ": " + v.message);
    throw Error(ErrorCode::kInvalidScenario, scenario_->scenario_id + " breaks " + report.front().code, details);
  }
  log_.scenario_id = scenario_->scenario_id;
  log_.config = config_;
  log_.tier = scenario_->tier;
  log_.composition = scenario_->composition;
  for (const auto& task : scenario_->aspects) log_.aspects.push_back(task.aspect);
  log_.preference_total = scenario_->total_preferences();
  initial_observation_ = prompts::initial_user_message(scenario_->description);
  history_.push_back({Message::Role::kUser, initial_observation_});
}

void Episode::add_component(TurnRecord& rec, const char* name, double value) const {
  const double scaled = value * config_.reward_scale;
  rec.components.push_back({name, scaled});
  rec.reward += scaled;
}

std::vector<const Preference*> Episode::unrevealed() const {
  std::vector<const Preference*> out;
  for (const auto& task : scenario_->aspects) {
    for (const auto& p : task.preferences) {
      if (!revealed_.count(p.preference_id)) out.push_back(&p);
    }
  }
  return out;
}

StepOutcome Episode::step(const AgentCall& call) {
  if (done()) throw Error(ErrorCode::kEpisodeDone, "episode " + log_.scenario_id + " has ended");
  TurnRecord rec;
  rec.turn_index = turn();
  rec.call = call;

  const auto choice = parse_choice(call.choice);
  if (!choice) {
    rec.protocol_error = true;
    rec.observation = prompts::invalid_choice(call.choice);
  } else {
    switch (*choice) {
      case Choice::kSearch: handle_search(call.content, rec); break;
      case Choice::kAction: handle_action(call.content, rec); break;
      case Choice::kAnswer: handle_answer(call.content, rec); break;
    }
    if (config_.step_penalty != 0.0) add_component(rec, component::kStepPenalty, -config_.step_penalty);
  }
  apply_passive_elicitation(choice, rec);

  history_.push_back({Message::Role::kAgent, call.content});
  history_.push_back({Message::Role::kUser, rec.observation});
  log_.turns.push_back(rec);

  const bool all_answered = std::all_of(scenario_->aspects.begin(), scenario_->aspects.end(),
                                        [&](const AspectTask& t) { return answered_.count(t.aspect) > 0; });
  if (config_.mode == ChoiceMode::kSingle && all_answered) {
    log_.terminal_reason = TerminalReason::kAllAnswered;
  } else if (turn() >= config_.max_steps) {
    log_.terminal_reason = TerminalReason::kMaxSteps;
  }
  return {rec.observation, rec.reward, done(), rec};
}

void Episode::abort(const std::string& note) {
  if (done()) return;
  log_.terminal_reason = TerminalReason::kProtocolError;
  log_.note = note;
}

void Episode::handle_search(const std::string& query, TurnRecord& rec) {
  ++search_attempts_;
  if (config_.search_failure_interval > 0 && search_attempts_ % config_.search_failure_interval == 0) {
    rec.search_system_error = true;
    rec.observation = prompts::kSearchSystemError;
    return;
  }
  SearchJudgement judgement = simulator_->judge_search(*scenario_, query);
  if (judgement.aligned && (!judgement.aspect || !scenario_->find_aspect(*judgement.aspect))) judgement = {};
  if (!judgement.aligned) judgement.aspect.reset();
  rec.judgement = judgement;
  if (!judgement.aligned) {
    rec.observation = prompts::kSearchEmpty;
    return;
  }
  const AspectKind aspect = *judgement.aspect;
  if (searched_.count(aspect)) {
    rec.observation = prompts::search_redirect(aspect);
    return;
  }
  searched_.insert(aspect);
  const AspectTask& task = *scenario_->find_aspect(aspect);
  std::vector<const OptionRecord*> order;
  for (const auto& o : task.options) order.push_back(&o);
  Rng rng(mix_seed(config_.rng_seed, 0x1157 + static_cast<std::uint64_t>(aspect)));
  rng.shuffle(std::span<const OptionRecord*>(order));
  rec.observation = std::string(prompts::kSearchAccepted) + "\n\n" + render_listing(order);
  add_component(rec, component::kSearchCorrect, config_.search_correct_reward);
}

void Episode::handle_action(const std::string& utterance, TurnRecord& rec) {
  const auto open = unrevealed();
  UtteranceClass cls = simulator_->classify_utterance(*scenario_, history_, utterance, open);
  const Preference* target = nullptr;
  if (cls.kind == 1) {
    for (const auto* p : open) {
      if (cls.preference_id && p->preference_id == *cls.preference_id) target = p;
    }
    if (!target) cls = {2, std::nullopt};
  }
  if (cls.kind < 1 || cls.kind > 4) cls = {4, std::nullopt};
  rec.classification = cls.kind;
  switch (cls.kind) {
    case 1: {
      int& ordinal = reveals_per_aspect_[target->aspect];
      rec.observation = simulator_->render_preference_reveal(*target, history_, utterance, ordinal);
      ++ordinal;
      revealed_[target->preference_id] = RevealSource::kActive;
      rec.revealed.push_back({target->preference_id, RevealSource::kActive});
      add_component(rec, component::kPreferenceCorrect, config_.preference_correct_reward);
      off_topic_counter_ = 0;
      break;
    }
    case 2: rec.observation = prompts::kUnavailablePreference; break;
    case 3: rec.observation = prompts::kVagueQuestion; break;
    default: rec.observation = simulator_->render_neutral(history_, utterance); break;
  }
}

void Episode::handle_answer(const std::string& content, TurnRecord& rec) {
  const auto ids = extract_option_ids(content);
  if (ids.empty()) {
    rec.observation = prompts::kAnswerMissingId;
    return;
  }
  if (ids.size() > 1) {
    rec.observation = prompts::kAnswerNeedsOneId;
    return;
  }
  const std::string& id = ids.front();
  const OptionRecord* option = scenario_->find_option(id);
  if (!option) {
    rec.observation = prompts::unknown_option(id);
    return;
  }
  if (config_.mode == ChoiceMode::kSingle && answered_.count(option->aspect)) {
    rec.observation = prompts::repeat_answer_rejection(id.front());
    return;
  }
  answered_[option->aspect].push_back({id, option->label});
  rec.answer_eval = AnswerEval{id, option->aspect, option->label};
  add_component(rec, component::kAnswer, answer_value(option->label, config_));
  if (!is_correct(option->label) && config_.wrong_choice_penalty != 0.0) {
    add_component(rec, component::kWrongChoicePenalty, -config_.wrong_choice_penalty);
  }
  rec.observation = prompts::answer_feedback(option->label, config_.mode);
}

void Episode::apply_passive_elicitation(std::optional<Choice> choice, TurnRecord& rec) {
  if (config_.elicitation_interval <= 0) return;
  const bool active = std::any_of(rec.revealed.begin(), rec.revealed.end(),
                                  [](const Reveal& r) { return r.source == RevealSource::kActive; });
  if (active) return;
  const bool counts = config_.off_topic_policy == OffTopicPolicy::kAllTurns || choice == Choice::kAction;
  if (!counts) return;
  ++off_topic_counter_;
  if (off_topic_counter_ < config_.elicitation_interval) return;
  const auto open = unrevealed();
  if (open.empty()) {
    off_topic_counter_ = config_.elicitation_interval;
    return;
  }
  const Preference* pick = open[passive_rng_.below(open.size())];
  int& ordinal = reveals_per_aspect_[pick->aspect];
  const std::string text = simulator_->render_proactive_reveal(*pick, history_, rec.call.content, ordinal);
  ++ordinal;
  revealed_[pick->preference_id] = RevealSource::kPassive;
  rec.revealed.push_back({pick->preference_id, RevealSource::kPassive});
  rec.observation += rec.observation.empty() ? text : "\n\n" + text;
  off_topic_counter_ = 0;
}

EpisodeLog replay_calls(std::shared_ptr<const Scenario> scenario, const EnvConfig& config,
                        std::shared_ptr<SimulatorBackend> simulator, const std::vector<AgentCall>& calls) {
  Episode episode(std::move(scenario), config, std::move(simulator));
  for (const auto& call : calls) {
    if (episode.done()) break;
    episode.step(call);
  }
  return episode.log();
}

}  // namespace prefgym
