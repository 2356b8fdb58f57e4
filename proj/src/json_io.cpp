#include "prefgym/json_io.hpp"

#include <sstream>

#include "prefgym/error.hpp"

namespace prefgym {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kMalformedRequest, path + ": " + what);
}

const Json& member(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing");
  return *it;
}

std::string get_string(const Json& j, const char* key, const std::string& path) {
  const Json& v = member(j, key, path);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::int64_t get_int(const Json& j, const char* key, const std::string& path) {
  const Json& v = member(j, key, path);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

double get_number(const Json& j, const char* key, const std::string& path) {
  const Json& v = member(j, key, path);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

bool get_bool(const Json& j, const char* key, const std::string& path) {
  const Json& v = member(j, key, path);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

const Json& get_array(const Json& j, const char* key, const std::string& path) {
  const Json& v = member(j, key, path);
  if (!v.is_array()) fail(path + "." + key, "expected an array");
  return v;
}

std::vector<std::string> string_list(const Json& arr, const std::string& path) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) fail(path + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

AspectKind get_aspect(const Json& j, const char* key, const std::string& path) {
  const auto name = get_string(j, key, path);
  auto kind = aspect_from_name(name);
  if (!kind) fail(path + "." + key, "unknown aspect '" + name + "'");
  return *kind;
}

template <class Enum, class Parser>
Enum get_enum(const Json& j, const char* key, const std::string& path, Parser parse) {
  const auto name = get_string(j, key, path);
  auto value = parse(name);
  if (!value) fail(path + "." + key, "unknown value '" + name + "'");
  return *value;
}

Json search_args_json(const SearchArgs& args) {
  Json out = Json::object();
  for (const auto& [k, v] : args) out[k] = v;
  return out;
}

SearchArgs search_args_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  SearchArgs out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) fail(path + "." + it.key(), "expected a string");
    out.emplace_back(it.key(), it.value().get<std::string>());
  }
  return out;
}

Json bounds_json(const std::vector<FieldBounds>& bounds) {
  Json out = Json::array();
  for (const auto& b : bounds) out.push_back({{"field", b.field}, {"min", b.min}, {"max", b.max}});
  return out;
}

std::vector<FieldBounds> bounds_from_json(const Json& arr, const std::string& path) {
  std::vector<FieldBounds> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + "[" + std::to_string(i) + "]";
    out.push_back({get_string(arr[i], "field", at), get_int(arr[i], "min", at), get_int(arr[i], "max", at)});
  }
  return out;
}

std::optional<FieldKind> field_kind_from_string(std::string_view name) {
  for (auto kind : {FieldKind::kArg, FieldKind::kPath, FieldKind::kText, FieldKind::kInteger,
                    FieldKind::kList, FieldKind::kServices}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

}  // namespace

std::string canonical(const Json& j) { return nlohmann::json(j).dump(); }

Json to_json(const FieldValue& value) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ServiceCosts>) {
          Json out = Json::object();
          for (const auto& [name, price] : v) out[name] = price;
          return out;
        } else {
          return Json(v);
        }
      },
      value);
}

FieldValue field_value_from_json(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_array()) return string_list(j, "field");
  if (j.is_object()) {
    ServiceCosts out;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it.value().is_number_integer()) fail("field." + it.key(), "expected an integer price");
      out.emplace_back(it.key(), it.value().get<std::int64_t>());
    }
    return out;
  }
  fail("field", "unsupported value");
}

Json to_json(const Predicate& p) {
  Json out = {{"field", p.field}, {"op", to_string(p.op)}};
  switch (p.op) {
    case PredicateOp::kEquals:
    case PredicateOp::kNotEquals:
    case PredicateOp::kContains:
    case PredicateOp::kHasService:
      out["text"] = p.text;
      break;
    default:
      out["number"] = p.number;
  }
  return out;
}

Predicate predicate_from_json(const Json& j) {
  Predicate p;
  p.field = get_string(j, "field", "predicate");
  p.op = get_enum<PredicateOp>(j, "op", "predicate", predicate_op_from_string);
  if (j.contains("text")) p.text = get_string(j, "text", "predicate");
  if (j.contains("number")) p.number = get_int(j, "number", "predicate");
  return p;
}

Json to_json(const Preference& pref) {
  Json topics = Json::array();
  for (const auto& t : pref.trigger_topics) topics.push_back(t);
  return {{"preference_id", pref.preference_id},
          {"aspect", aspect_name(pref.aspect)},
          {"category", pref.category},
          {"canonical_statement", pref.canonical_statement},
          {"implicit_statements", pref.implicit_statements},
          {"trigger_topics", topics},
          {"predicate", to_json(pref.predicate)}};
}

Preference preference_from_json(const Json& j, AspectKind aspect) {
  Preference p;
  p.preference_id = get_string(j, "preference_id", "preference");
  const std::string path = "preference[" + p.preference_id + "]";
  p.aspect = j.contains("aspect") ? get_aspect(j, "aspect", path) : aspect;
  p.category = j.contains("category") ? get_string(j, "category", path) : "";
  p.canonical_statement = get_string(j, "canonical_statement", path);
  // Absent statement or trigger lists load as empty so that the invariant
  // checks, not the parser, report them.
  if (j.contains("implicit_statements")) {
    p.implicit_statements = string_list(get_array(j, "implicit_statements", path), path + ".implicit_statements");
  }
  const Json topics = j.contains("trigger_topics") ? get_array(j, "trigger_topics", path) : Json::array();
  for (std::size_t i = 0; i < topics.size(); ++i) {
    if (!topics[i].is_array()) fail(path + ".trigger_topics", "expected arrays of keywords");
    p.trigger_topics.push_back(string_list(topics[i], path + ".trigger_topics"));
  }
  p.predicate = predicate_from_json(member(j, "predicate", path));
  return p;
}

Json to_json(const OptionRecord& option, bool hidden) {
  Json fields = Json::object();
  for (const auto& f : option.visible_fields) fields[f.key] = to_json(f.value);
  Json out = {{"option_id", option.option_id},
              {"aspect", aspect_name(option.aspect)},
              {"visible_fields", fields}};
  if (hidden) {
    out["label"] = to_string(option.label);
    out["label_reason"] = option.label_reason;
    out["effective_total_cost"] = option.effective_total_cost;
  }
  return out;
}

OptionRecord option_from_json(const Json& j, AspectKind aspect) {
  OptionRecord o;
  o.option_id = get_string(j, "option_id", "option");
  const std::string path = "option[" + o.option_id + "]";
  o.aspect = j.contains("aspect") ? get_aspect(j, "aspect", path) : aspect;
  const Json& fields = member(j, "visible_fields", path);
  if (!fields.is_object()) fail(path + ".visible_fields", "expected an object");
  for (auto it = fields.begin(); it != fields.end(); ++it) {
    o.visible_fields.push_back({it.key(), field_value_from_json(it.value())});
  }
  o.label = get_enum<Label>(j, "label", path, label_from_string);
  o.label_reason = j.contains("label_reason") ? get_string(j, "label_reason", path) : "";
  o.effective_total_cost = get_int(j, "effective_total_cost", path);
  return o;
}

Json to_json(const AspectTask& task) {
  Json prefs = Json::array();
  for (const auto& p : task.preferences) prefs.push_back(to_json(p));
  Json options = Json::array();
  for (const auto& o : task.options) options.push_back(to_json(o));
  return {{"aspect", aspect_name(task.aspect)},
          {"ground_truth_search_args", search_args_json(task.ground_truth_search_args)},
          {"plausibility", bounds_json(task.plausibility)},
          {"preferences", prefs},
          {"options", options}};
}

AspectTask aspect_task_from_json(const Json& j) {
  AspectTask t;
  t.aspect = get_aspect(j, "aspect", "aspect");
  const std::string path = "aspects[" + std::string(aspect_name(t.aspect)) + "]";
  t.ground_truth_search_args =
      search_args_from_json(member(j, "ground_truth_search_args", path), path + ".ground_truth_search_args");
  if (j.contains("plausibility")) {
    t.plausibility = bounds_from_json(get_array(j, "plausibility", path), path + ".plausibility");
  }
  for (const auto& p : get_array(j, "preferences", path)) t.preferences.push_back(preference_from_json(p, t.aspect));
  for (const auto& o : get_array(j, "options", path)) t.options.push_back(option_from_json(o, t.aspect));
  return t;
}

Json to_json(const Scenario& s) {
  Json aspects = Json::array();
  for (const auto& t : s.aspects) aspects.push_back(to_json(t));
  return {{"scenario_id", s.scenario_id},
          {"description", s.description},
          {"tier", to_string(s.tier)},
          {"composition", s.composition},
          {"aspects", aspects}};
}

Scenario scenario_from_json(const Json& j) {
  Scenario s;
  s.scenario_id = get_string(j, "scenario_id", "scenario");
  s.description = get_string(j, "description", "scenario");
  s.tier = get_enum<Tier>(j, "tier", "scenario", tier_from_string);
  for (const auto& n : get_array(j, "composition", "scenario")) {
    if (!n.is_number_integer()) fail("scenario.composition", "expected integers");
    s.composition.push_back(n.get<int>());
  }
  for (const auto& t : get_array(j, "aspects", "scenario")) s.aspects.push_back(aspect_task_from_json(t));
  return s;
}

Json to_json(const EnvConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"max_steps", c.max_steps},
          {"search_failure_interval", c.search_failure_interval},
          {"elicitation_interval", c.elicitation_interval},
          {"reward_scale", c.reward_scale},
          {"step_penalty", c.step_penalty},
          {"search_correct_reward", c.search_correct_reward},
          {"preference_correct_reward", c.preference_correct_reward},
          {"choice_best_reward", c.choice_best_reward},
          {"choice_correct_reward", c.choice_correct_reward},
          {"wrong_choice_penalty", c.wrong_choice_penalty},
          {"rng_seed", c.rng_seed},
          {"off_topic_policy", to_string(c.off_topic_policy)}};
}

EnvConfig config_from_json(const Json& j, const EnvConfig& base) {
  if (!j.is_object()) fail("config", "expected an object");
  EnvConfig c = base;
  const std::string path = "config";
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& key = it.key();
    if (key == "mode") {
      c.mode = get_enum<ChoiceMode>(j, "mode", path, choice_mode_from_string);
    } else if (key == "max_steps") {
      c.max_steps = static_cast<int>(get_int(j, "max_steps", path));
    } else if (key == "search_failure_interval") {
      c.search_failure_interval = static_cast<int>(get_int(j, "search_failure_interval", path));
    } else if (key == "elicitation_interval") {
      c.elicitation_interval = static_cast<int>(get_int(j, "elicitation_interval", path));
    } else if (key == "reward_scale") {
      c.reward_scale = get_number(j, "reward_scale", path);
    } else if (key == "step_penalty") {
      c.step_penalty = get_number(j, "step_penalty", path);
    } else if (key == "search_correct_reward") {
      c.search_correct_reward = get_number(j, "search_correct_reward", path);
    } else if (key == "preference_correct_reward") {
      c.preference_correct_reward = get_number(j, "preference_correct_reward", path);
    } else if (key == "choice_best_reward") {
      c.choice_best_reward = get_number(j, "choice_best_reward", path);
    } else if (key == "choice_correct_reward") {
      c.choice_correct_reward = get_number(j, "choice_correct_reward", path);
    } else if (key == "wrong_choice_penalty") {
      c.wrong_choice_penalty = get_number(j, "wrong_choice_penalty", path);
    } else if (key == "rng_seed") {
      const Json& v = it.value();
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        fail("config.rng_seed", "expected a non-negative integer");
      }
      c.rng_seed = v.get<std::uint64_t>();
    } else if (key == "off_topic_policy") {
      c.off_topic_policy = get_enum<OffTopicPolicy>(j, "off_topic_policy", path, off_topic_policy_from_string);
    } else {
      fail("config." + key, "unknown setting");
    }
  }
  return c;
}

Json to_json(const AgentCall& call) {
  return {{"thought", call.thought}, {"choice", call.choice}, {"content", call.content}};
}

AgentCall agent_call_from_json(const Json& j) {
  AgentCall call;
  call.thought = j.contains("thought") ? get_string(j, "thought", "call") : "";
  call.choice = get_string(j, "choice", "call");
  call.content = get_string(j, "content", "call");
  return call;
}

Json to_json(const TurnRecord& t) {
  Json out = {{"turn_index", t.turn_index}, {"call", to_json(t.call)}, {"protocol_error", t.protocol_error}};
  out["classification"] = t.classification ? Json(*t.classification) : Json(nullptr);
  if (t.judgement) {
    out["judgement"] = {{"aligned", t.judgement->aligned},
                        {"aspect", t.judgement->aspect ? Json(aspect_name(*t.judgement->aspect)) : Json(nullptr)}};
  } else {
    out["judgement"] = nullptr;
  }
  out["search_system_error"] = t.search_system_error;
  Json revealed = Json::array();
  for (const auto& r : t.revealed) revealed.push_back({{"preference_id", r.preference_id}, {"source", to_string(r.source)}});
  out["revealed"] = revealed;
  out["observation"] = t.observation;
  out["reward"] = t.reward;
  Json components = Json::array();
  for (const auto& c : t.components) components.push_back({{"name", c.name}, {"value", c.value}});
  out["components"] = components;
  if (t.answer_eval) {
    out["answer_eval"] = {{"option_id", t.answer_eval->option_id},
                          {"aspect", aspect_name(t.answer_eval->aspect)},
                          {"label", to_string(t.answer_eval->label)}};
  } else {
    out["answer_eval"] = nullptr;
  }
  return out;
}

TurnRecord turn_from_json(const Json& j) {
  TurnRecord t;
  t.turn_index = static_cast<int>(get_int(j, "turn_index", "turn"));
  const std::string path = "turn[" + std::to_string(t.turn_index) + "]";
  t.call = agent_call_from_json(member(j, "call", path));
  t.protocol_error = get_bool(j, "protocol_error", path);
  if (const Json& c = member(j, "classification", path); !c.is_null()) {
    if (!c.is_number_integer()) fail(path + ".classification", "expected an integer");
    t.classification = c.get<int>();
  }
  if (const Json& jd = member(j, "judgement", path); !jd.is_null()) {
    SearchJudgement judgement;
    judgement.aligned = get_bool(jd, "aligned", path + ".judgement");
    if (jd.contains("aspect") && !jd["aspect"].is_null()) judgement.aspect = get_aspect(jd, "aspect", path + ".judgement");
    t.judgement = judgement;
  }
  t.search_system_error = get_bool(j, "search_system_error", path);
  for (const auto& r : get_array(j, "revealed", path)) {
    t.revealed.push_back({get_string(r, "preference_id", path + ".revealed"),
                          get_enum<RevealSource>(r, "source", path + ".revealed", reveal_source_from_string)});
  }
  t.observation = get_string(j, "observation", path);
  t.reward = get_number(j, "reward", path);
  for (const auto& c : get_array(j, "components", path)) {
    t.components.push_back({get_string(c, "name", path + ".components"), get_number(c, "value", path + ".components")});
  }
  if (const Json& a = member(j, "answer_eval", path); !a.is_null()) {
    t.answer_eval = AnswerEval{get_string(a, "option_id", path + ".answer_eval"),
                               get_aspect(a, "aspect", path + ".answer_eval"),
                               get_enum<Label>(a, "label", path + ".answer_eval", label_from_string)};
  }
  return t;
}

Json log_header_json(const EpisodeLog& log) {
  Json aspects = Json::array();
  for (auto a : log.aspects) aspects.push_back(aspect_name(a));
  return {{"type", "header"},
          {"scenario_id", log.scenario_id},
          {"config", to_json(log.config)},
          {"tier", to_string(log.tier)},
          {"composition", log.composition},
          {"aspects", aspects},
          {"preference_total", log.preference_total}};
}

Json log_end_json(const EpisodeLog& log) {
  return {{"type", "end"},
          {"terminal_reason", log.terminal_reason ? Json(to_string(*log.terminal_reason)) : Json(nullptr)},
          {"note", log.note}};
}

namespace {

void apply_header(EpisodeLog& log, const Json& h) {
  log.scenario_id = get_string(h, "scenario_id", "header");
  log.config = config_from_json(member(h, "config", "header"));
  log.tier = get_enum<Tier>(h, "tier", "header", tier_from_string);
  for (const auto& n : get_array(h, "composition", "header")) log.composition.push_back(n.get<int>());
  for (const auto& a : get_array(h, "aspects", "header")) {
    auto kind = a.is_string() ? aspect_from_name(a.get<std::string>()) : std::nullopt;
    if (!kind) fail("header.aspects", "unknown aspect");
    log.aspects.push_back(*kind);
  }
  log.preference_total = static_cast<int>(get_int(h, "preference_total", "header"));
}

void apply_end(EpisodeLog& log, const Json& e) {
  if (const Json& r = member(e, "terminal_reason", "end"); !r.is_null()) {
    log.terminal_reason = get_enum<TerminalReason>(e, "terminal_reason", "end", terminal_reason_from_string);
  }
  if (e.contains("note")) log.note = get_string(e, "note", "end");
}

}  // namespace

Json to_json(const EpisodeLog& log) {
  Json out = log_header_json(log);
  out.erase("type");
  Json turns = Json::array();
  for (const auto& t : log.turns) turns.push_back(to_json(t));
  out["turns"] = turns;
  const Json end = log_end_json(log);
  out["terminal_reason"] = end["terminal_reason"];
  out["note"] = end["note"];
  return out;
}

EpisodeLog log_from_json(const Json& j) {
  EpisodeLog log;
  apply_header(log, j);
  for (const auto& t : get_array(j, "turns", "log")) log.turns.push_back(turn_from_json(t));
  apply_end(log, j);
  return log;
}

std::string log_to_jsonl(const EpisodeLog& log) {
  std::string out = log_header_json(log).dump() + "\n";
  for (const auto& t : log.turns) {
    Json line = {{"type", "turn"}};
    line.update(to_json(t));
    out += line.dump() + "\n";
  }
  if (log.terminal_reason) out += log_end_json(log).dump() + "\n";
  return out;
}

ParsedLog log_from_jsonl(std::string_view text) {
  ParsedLog parsed;
  parsed.truncated = true;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    const bool complete_line = nl != std::string_view::npos;
    auto line = text.substr(pos, complete_line ? nl - pos : std::string_view::npos);
    pos = complete_line ? nl + 1 : text.size();
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      if (!complete_line && have_header) break;  // torn tail write
      fail("log", "unreadable line");
    }
    const auto type = get_string(j, "type", "log");
    if (type == "header") {
      apply_header(parsed.log, j);
      have_header = true;
    } else if (!have_header) {
      fail("log", "first record must be the header");
    } else if (type == "turn") {
      parsed.log.turns.push_back(turn_from_json(j));
    } else if (type == "end") {
      apply_end(parsed.log, j);
      parsed.truncated = false;
    } else {
      fail("log", "unknown record type '" + type + "'");
    }
  }
  if (!have_header) fail("log", "missing header");
  return parsed;
}

Json to_json(const MetricsRecord& m) {
  return {{"score", m.score},
          {"best_exist_rate", m.best_exist_rate},
          {"correct_exist_rate", m.correct_exist_rate},
          {"valid_search_pct", m.valid_search_pct},
          {"valid_action_pct", m.valid_action_pct},
          {"pref_elicited_active_pct", m.pref_elicited_active_pct},
          {"pref_elicited_passive_pct", m.pref_elicited_passive_pct},
          {"first_valid_index", m.first_valid_index ? Json(*m.first_valid_index) : Json(nullptr)},
          {"weighted_score", m.weighted_score},
          {"coverage", m.coverage}};
}

MetricsRecord metrics_from_json(const Json& j) {
  MetricsRecord m;
  const std::string path = "metrics";
  m.score = get_number(j, "score", path);
  m.best_exist_rate = get_number(j, "best_exist_rate", path);
  m.correct_exist_rate = get_number(j, "correct_exist_rate", path);
  m.valid_search_pct = get_number(j, "valid_search_pct", path);
  m.valid_action_pct = get_number(j, "valid_action_pct", path);
  m.pref_elicited_active_pct = get_number(j, "pref_elicited_active_pct", path);
  m.pref_elicited_passive_pct = get_number(j, "pref_elicited_passive_pct", path);
  if (const Json& f = member(j, "first_valid_index", path); !f.is_null()) m.first_valid_index = f.get<double>();
  m.weighted_score = get_number(j, "weighted_score", path);
  m.coverage = get_number(j, "coverage", path);
  return m;
}

Json to_json(const PreferenceCatalog& catalog) {
  Json cities = Json::array();
  for (const auto& c : catalog.lexicon.cities) cities.push_back({{"name", c.name}, {"aliases", c.aliases}});
  Json vocab = Json::array();
  for (const auto& v : catalog.lexicon.aspects) {
    vocab.push_back({{"aspect", aspect_name(v.aspect)}, {"keywords", v.keywords}, {"attribute_terms", v.attribute_terms}});
  }
  Json aspects = Json::array();
  for (const auto& a : catalog.aspects) {
    Json args = Json::array();
    for (const auto& s : a.search_args) args.push_back({{"name", s.name}, {"from", s.from}});
    Json fields = Json::array();
    for (const auto& f : a.fields) {
      Json jf = {{"key", f.key}, {"kind", to_string(f.kind)}};
      if (!f.source.empty()) jf["source"] = f.source;
      if (!f.pool.empty()) jf["pool"] = f.pool;
      if (f.kind == FieldKind::kInteger || f.kind == FieldKind::kServices) {
        jf["min"] = f.min;
        jf["max"] = f.max;
        jf["step"] = f.step;
      }
      if (f.kind == FieldKind::kList || f.kind == FieldKind::kServices) {
        jf["min_items"] = f.min_items;
        jf["max_items"] = f.max_items;
      }
      fields.push_back(jf);
    }
    Json prefs = Json::array();
    for (const auto& p : a.preferences) {
      Json jp = to_json(p);
      jp.erase("aspect");
      prefs.push_back(jp);
    }
    aspects.push_back({{"aspect", aspect_name(a.aspect)},
                       {"search_args", args},
                       {"fields", fields},
                       {"plausibility", bounds_json(a.plausibility)},
                       {"preferences", prefs}});
  }
  return {{"version", catalog.version},
          {"name", catalog.name},
          {"lexicon", {{"cities", cities}, {"aspects", vocab}, {"request_cues", catalog.lexicon.request_cues}}},
          {"aspects", aspects}};
}

PreferenceCatalog catalog_from_json(const Json& j) {
  PreferenceCatalog c;
  c.version = get_string(j, "version", "catalog");
  c.name = j.contains("name") ? get_string(j, "name", "catalog") : "";
  const Json& lex = member(j, "lexicon", "catalog");
  for (const auto& city : get_array(lex, "cities", "lexicon")) {
    c.lexicon.cities.push_back({get_string(city, "name", "lexicon.cities"),
                                string_list(get_array(city, "aliases", "lexicon.cities"), "lexicon.cities")});
  }
  for (const auto& v : get_array(lex, "aspects", "lexicon")) {
    c.lexicon.aspects.push_back({get_aspect(v, "aspect", "lexicon.aspects"),
                                 string_list(get_array(v, "keywords", "lexicon.aspects"), "lexicon.aspects"),
                                 string_list(get_array(v, "attribute_terms", "lexicon.aspects"), "lexicon.aspects")});
  }
  c.lexicon.request_cues = string_list(get_array(lex, "request_cues", "lexicon"), "lexicon.request_cues");
  for (const auto& a : get_array(j, "aspects", "catalog")) {
    AspectTemplate t;
    t.aspect = get_aspect(a, "aspect", "catalog.aspects");
    const std::string path = "catalog.aspects[" + std::string(aspect_name(t.aspect)) + "]";
    for (const auto& s : get_array(a, "search_args", path)) {
      t.search_args.push_back({get_string(s, "name", path + ".search_args"), get_string(s, "from", path + ".search_args")});
    }
    for (const auto& f : get_array(a, "fields", path)) {
      FieldTemplate ft;
      ft.key = get_string(f, "key", path + ".fields");
      const std::string fpath = path + ".fields[" + ft.key + "]";
      ft.kind = get_enum<FieldKind>(f, "kind", fpath, field_kind_from_string);
      if (f.contains("source")) ft.source = get_string(f, "source", fpath);
      if (f.contains("pool")) ft.pool = string_list(get_array(f, "pool", fpath), fpath + ".pool");
      if (f.contains("min")) ft.min = get_int(f, "min", fpath);
      if (f.contains("max")) ft.max = get_int(f, "max", fpath);
      if (f.contains("step")) ft.step = get_int(f, "step", fpath);
      if (f.contains("min_items")) ft.min_items = static_cast<int>(get_int(f, "min_items", fpath));
      if (f.contains("max_items")) ft.max_items = static_cast<int>(get_int(f, "max_items", fpath));
      t.fields.push_back(std::move(ft));
    }
    if (a.contains("plausibility")) t.plausibility = bounds_from_json(get_array(a, "plausibility", path), path + ".plausibility");
    for (const auto& p : get_array(a, "preferences", path)) t.preferences.push_back(preference_from_json(p, t.aspect));
    c.aspects.push_back(std::move(t));
  }
  return c;
}

Json to_json(const DatasetManifest& m) {
  Json scenarios = Json::array();
  for (const auto& [id, digest] : m.scenarios) scenarios.push_back({{"scenario_id", id}, {"digest", digest}});
  Json tiers = Json::object();
  for (const char* tier : {"easy", "medium", "hard"}) {
    auto it = m.tier_counts.find(tier);
    tiers[tier] = it == m.tier_counts.end() ? 0 : it->second;
  }
  return {{"catalog_digest", m.catalog_digest},
          {"plan", m.plan},
          {"seed", m.seed},
          {"counts", {{"wrong", m.counts.wrong}, {"noise", m.counts.noise}}},
          {"tier_counts", tiers},
          {"scenarios", scenarios},
          {"digest", m.digest}};
}

DatasetManifest manifest_from_json(const Json& j) {
  DatasetManifest m;
  const std::string path = "manifest";
  m.catalog_digest = get_string(j, "catalog_digest", path);
  m.plan = get_string(j, "plan", path);
  const Json& seed = member(j, "seed", path);
  if (!seed.is_number_integer()) fail("manifest.seed", "expected an integer");
  m.seed = seed.get<std::uint64_t>();
  const Json& counts = member(j, "counts", path);
  m.counts.wrong = static_cast<int>(get_int(counts, "wrong", "manifest.counts"));
  m.counts.noise = static_cast<int>(get_int(counts, "noise", "manifest.counts"));
  const Json& tiers = member(j, "tier_counts", path);
  for (auto it = tiers.begin(); it != tiers.end(); ++it) m.tier_counts[it.key()] = it.value().get<int>();
  for (const auto& s : get_array(j, "scenarios", path)) {
    m.scenarios.emplace_back(get_string(s, "scenario_id", "manifest.scenarios"), get_string(s, "digest", "manifest.scenarios"));
  }
  m.digest = get_string(j, "digest", path);
  return m;
}

}  // namespace prefgym
