#include "prefgym/simulator.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <set>

#include <httplib.h>

#include "prefgym/error.hpp"
#include "prefgym/json_io.hpp"
#include "prefgym/prompts.hpp"
#include "prefgym/rate_limit.hpp"
#include "prefgym/text.hpp"

namespace prefgym {
namespace {

struct CityHit {
  std::size_t pos;
  std::string name;
  std::string previous_word;
};

// Every city mention with the word just before it, in text order. Aliases
// that sit inside a longer match of another city are skipped.
std::vector<CityHit> city_hits(const Lexicon& lexicon, const std::string& norm) {
  std::vector<CityHit> hits;
  std::vector<std::tuple<std::size_t, std::size_t, std::string>> raw;
  for (const auto& city : lexicon.cities) {
    std::vector<std::string> forms{city.name};
    forms.insert(forms.end(), city.aliases.begin(), city.aliases.end());
    for (const auto& form : forms) {
      const std::string needle = text::normalize(form);
      if (needle.size() <= 1) continue;
      for (auto pos = norm.find(needle); pos != std::string::npos; pos = norm.find(needle, pos + 1)) {
        raw.emplace_back(pos, needle.size(), city.name);
      }
    }
  }
  // Longest match first so "new york city" wins over "new york".
  std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::get<1>(a) > std::get<1>(b);
  });
  std::size_t covered_until = 0;
  for (const auto& [pos, len, name] : raw) {
    if (pos + 1 < covered_until) continue;
    covered_until = pos + len;
    const auto before = norm.substr(0, pos + 1);
    auto words = text::tokens(before);
    hits.push_back({pos, name, words.empty() ? "" : words.back()});
  }
  return hits;
}

bool has_any_phrase(const std::string& norm, const std::vector<std::string>& phrases) {
  return std::any_of(phrases.begin(), phrases.end(),
                     [&](const std::string& p) { return text::contains_phrase(norm, p); });
}

bool topic_matches(const std::string& norm, const Preference& pref) {
  return std::any_of(pref.trigger_topics.begin(), pref.trigger_topics.end(), [&](const auto& topic) {
    return !topic.empty() && std::all_of(topic.begin(), topic.end(),
                                         [&](const std::string& kw) { return text::contains_phrase(norm, kw); });
  });
}

bool is_city(const Lexicon& lexicon, const std::string& value) {
  return std::any_of(lexicon.cities.begin(), lexicon.cities.end(),
                     [&](const City& c) { return c.name == value; });
}

}  // namespace

// ---------------------------------------------------------------------------
// Rule-based backend

RuleBasedSimulator::RuleBasedSimulator(const PreferenceCatalog& catalog) : lexicon_(catalog.lexicon) {
  for (auto kind : kAllAspects) {
    std::vector<std::string> terms;
    if (const auto* vocab = lexicon_.vocabulary(kind)) terms = vocab->attribute_terms;
    if (const auto* tmpl = catalog.aspect(kind)) {
      for (const auto& pref : tmpl->preferences) {
        for (const auto& topic : pref.trigger_topics) terms.insert(terms.end(), topic.begin(), topic.end());
      }
    }
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    attributes_.emplace_back(kind, std::move(terms));
  }
}

const std::vector<std::string>& RuleBasedSimulator::attribute_terms(AspectKind aspect) const {
  for (const auto& [kind, terms] : attributes_) {
    if (kind == aspect) return terms;
  }
  static const std::vector<std::string> none;
  return none;
}

SearchJudgement RuleBasedSimulator::judge_search(const Scenario& scenario, const std::string& query) {
  const std::string norm = text::normalize(query);
  const auto aspects = lexicon_.mentioned_aspects(norm);
  if (aspects.size() != 1) return {};
  const AspectTask* task = scenario.find_aspect(aspects.front());
  if (!task) return {};

  std::vector<std::string> expected_cities;
  std::vector<text::CalendarDate> expected_dates;
  std::string origin, destination;
  for (const auto& [name, value] : task->ground_truth_search_args) {
    if (auto date = text::parse_iso_date(value)) {
      expected_dates.push_back(*date);
    } else if (is_city(lexicon_, value)) {
      expected_cities.push_back(value);
      if (name == "origin") origin = value;
      if (name == "destination") destination = value;
    } else if (!text::contains_phrase(norm, value)) {
      return {};
    }
  }

  const auto hits = city_hits(lexicon_, norm);
  std::set<std::string> mentioned;
  for (const auto& h : hits) mentioned.insert(h.name);
  if (mentioned != std::set<std::string>(expected_cities.begin(), expected_cities.end())) return {};

  if (!origin.empty() && !destination.empty()) {
    bool marked = false;
    for (const auto& h : hits) {
      if (h.previous_word == "from") {
        if (h.name != origin) return {};
        marked = true;
      } else if (h.previous_word == "to") {
        if (h.name != destination) return {};
        marked = true;
      }
    }
    if (!marked) {
      // Without from/to markers the first mention must be the origin.
      if (hits.empty() || hits.front().name != origin) return {};
    }
  }

  const auto dates = text::find_dates(query);
  if (dates.size() != expected_dates.size()) return {};
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (!text::same_day(dates[i], expected_dates[i])) return {};
  }
  return {true, task->aspect};
}

UtteranceClass RuleBasedSimulator::classify_utterance(const Scenario&, const History& history,
                                                      const std::string& utterance,
                                                      const std::vector<const Preference*>& unrevealed) {
  const std::string norm = text::normalize(utterance);
  const auto named = lexicon_.mentioned_aspects(norm);
  auto in_named = [&](AspectKind a) { return named.empty() || std::find(named.begin(), named.end(), a) != named.end(); };

  std::vector<const Preference*> candidates;
  for (const auto* pref : unrevealed) {
    if (in_named(pref->aspect) && topic_matches(norm, *pref)) candidates.push_back(pref);
  }
  if (!candidates.empty()) {
    auto recency = [&](AspectKind a) -> std::size_t {
      if (std::find(named.begin(), named.end(), a) != named.end()) return 0;
      for (std::size_t back = 0; back < history.size(); ++back) {
        const auto& msg = history[history.size() - 1 - back];
        const auto seen = lexicon_.mentioned_aspects(text::normalize(msg.text));
        if (std::find(seen.begin(), seen.end(), a) != seen.end()) return back + 1;
      }
      return history.size() + 1;
    };
    const Preference* pick = candidates.front();
    std::size_t best = recency(pick->aspect);
    for (const auto* c : candidates) {
      const auto r = recency(c->aspect);
      if (r < best) {
        best = r;
        pick = c;
      }
    }
    return {1, pick->preference_id};
  }

  for (auto kind : kAllAspects) {
    if (in_named(kind) && has_any_phrase(norm, attribute_terms(kind))) return {2, std::nullopt};
  }
  if (has_any_phrase(norm, lexicon_.request_cues)) return {3, std::nullopt};
  return {4, std::nullopt};
}

std::string RuleBasedSimulator::render_preference_reveal(const Preference& preference, const History&,
                                                         const std::string&, int ordinal) {
  if (preference.implicit_statements.empty()) return std::string(prompts::neutral_pool().front());
  const auto n = static_cast<int>(preference.implicit_statements.size());
  return preference.implicit_statements[static_cast<std::size_t>(((ordinal % n) + n) % n)];
}

std::string RuleBasedSimulator::render_proactive_reveal(const Preference& preference, const History& history,
                                                        const std::string& utterance, int ordinal) {
  std::string statement = render_preference_reveal(preference, history, utterance, ordinal);
  const auto* vocab = lexicon_.vocabulary(preference.aspect);
  if (vocab && has_any_phrase(text::normalize(statement), vocab->keywords)) return statement;
  if (!statement.empty() && !(statement.starts_with("I ") || statement.starts_with("I'"))) {
    statement[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(statement[0])));
  }
  return "As for the " + std::string(aspect_display_name(preference.aspect)) + ", " + statement;
}

std::string RuleBasedSimulator::render_neutral(const History& history, const std::string&) {
  const auto& pool = prompts::neutral_pool();
  return pool[history.size() % pool.size()];
}

// ---------------------------------------------------------------------------
// Slot formatting

std::string format_history(const History& history) {
  if (history.empty()) return "(no conversation yet)";
  std::string out;
  for (const auto& m : history) {
    if (!out.empty()) out += "\n";
    out += m.role == Message::Role::kAgent ? "Agent: " : "User: ";
    out += m.text;
  }
  return out;
}

std::string format_ground_truth(const Scenario& scenario) {
  Json out = Json::object();
  for (const auto& task : scenario.aspects) {
    Json args = Json::object();
    for (const auto& [k, v] : task.ground_truth_search_args) args[k] = v;
    out[std::string(aspect_name(task.aspect))] = args;
  }
  return out.dump(4);
}

std::string format_preferences(const std::vector<const Preference*>& preferences) {
  Json out = Json::array();
  for (const auto* p : preferences) {
    out.push_back({{"preference_id", p->preference_id},
                   {"aspect", aspect_name(p->aspect)},
                   {"preference", p->canonical_statement}});
  }
  return out.dump(4);
}

std::string format_preference(const Preference& preference, int ordinal) {
  Json out = {{"aspect", aspect_name(preference.aspect)}, {"preference", preference.canonical_statement}};
  if (!preference.implicit_statements.empty()) {
    const auto n = static_cast<int>(preference.implicit_statements.size());
    out["implicit_elicitation_statement"] = preference.implicit_statements[static_cast<std::size_t>(ordinal % n)];
  }
  return out.dump(4);
}

std::optional<Json> parse_reply_object(const std::string& reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  Json j = Json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

// ---------------------------------------------------------------------------
// Remote transport

RemoteEndpoint RemoteEndpoint::from_env(const std::string& prefix) {
  RemoteEndpoint e;
  auto get = [&](const char* suffix) -> std::string {
    const char* v = std::getenv((prefix + suffix).c_str());
    return v ? v : "";
  };
  e.base_url = get("_URL");
  if (auto m = get("_MODEL"); !m.empty()) e.model = m;
  e.api_key = get("_API_KEY");
  return e;
}

Json post_chat(const RemoteEndpoint& endpoint, const Json& body) {
  const auto scheme_end = endpoint.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kBackendUnavailable, "endpoint URL needs a scheme: '" + endpoint.base_url + "'");
  }
  const auto path_start = endpoint.base_url.find('/', scheme_end + 3);
  const std::string origin = endpoint.base_url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : endpoint.base_url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  path += "/chat/completions";

  if (endpoint.rate_limit) endpoint.rate_limit->acquire();
  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kBackendUnavailable, "request to " + origin + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::kBackendUnavailable, "endpoint answered HTTP " + std::to_string(res->status));
  }
  Json reply = Json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw Error(ErrorCode::kBackendUnavailable, "endpoint reply is not JSON");
  return reply;
}

std::string chat_completion(const RemoteEndpoint& endpoint, const std::string& system, const std::string& user) {
  Json body = {{"model", endpoint.model},
               {"messages", Json::array({{{"role", "system"}, {"content", system}},
                                         {{"role", "user"}, {"content", user}}})},
               {"temperature", endpoint.temperature},
               {"max_tokens", endpoint.max_tokens}};
  const Json reply = post_chat(endpoint, body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::kBackendUnavailable, "reply has no message content");
  }
}

// ---------------------------------------------------------------------------
// Remote backend

RemoteSimulator::RemoteSimulator(RemoteEndpoint endpoint, const PreferenceCatalog& catalog, WarningSink warn)
    : endpoint_(std::move(endpoint)), fallback_(catalog), warn_(std::move(warn)) {}

void RemoteSimulator::warn(const std::string& message) {
  if (warn_) {
    warn_(message);
  } else {
    std::cerr << "warning: " << message << "\n";
  }
}

std::optional<Json> RemoteSimulator::ask(const std::string& system_name, const std::string& user_name,
                                         const std::vector<std::pair<std::string, std::string>>& slots) {
  const std::string system(prompts::raw(system_name));
  const std::string user = prompts::render(prompts::raw(user_name), slots);
  for (int attempt = 1; attempt <= 2; ++attempt) {
    try {
      if (auto j = parse_reply_object(chat_completion(endpoint_, system, user))) return j;
      warn(system_name + ": reply could not be parsed (attempt " + std::to_string(attempt) + ")");
    } catch (const Error& e) {
      warn(system_name + ": " + e.what() + " (attempt " + std::to_string(attempt) + ")");
    }
  }
  return std::nullopt;
}

namespace {

std::optional<std::string> string_member(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  if (it->is_boolean()) return it->get<bool>() ? "true" : "false";
  return std::nullopt;
}

}  // namespace

SearchJudgement RemoteSimulator::judge_search(const Scenario& scenario, const std::string& query) {
  auto reply = ask("judge_search.system", "judge_search.user",
                   {{"agent_request", query}, {"ground_truth_arguments", format_ground_truth(scenario)}});
  if (!reply) {
    warn("judge_search degraded to not aligned");
    return {};
  }
  const auto verdict = text::lower(string_member(*reply, "alignment_judgement").value_or("false"));
  if (verdict != "true") return {};
  const auto aspect = aspect_from_name(text::lower(string_member(*reply, "alignment_aspect").value_or("")));
  if (!aspect || !scenario.find_aspect(*aspect)) return {};
  return {true, aspect};
}

UtteranceClass RemoteSimulator::classify_utterance(const Scenario& scenario, const History& history,
                                                   const std::string& utterance,
                                                   const std::vector<const Preference*>& unrevealed) {
  auto reply = ask("judge_utterance.system", "judge_utterance.user",
                   {{"scenario", scenario.description},
                    {"conversation_history", format_history(history)},
                    {"latest_utterance", utterance},
                    {"preferences_list", format_preferences(unrevealed)}});
  if (!reply) {
    warn("classify_utterance degraded to type 4");
    return {};
  }
  const auto type = string_member(*reply, "type").value_or("4");
  if (type == "1") {
    const auto id = string_member(*reply, "preference_id").value_or("");
    for (const auto* p : unrevealed) {
      if (p->preference_id == id) return {1, id};
    }
    return {2, std::nullopt};
  }
  if (type == "2") return {2, std::nullopt};
  if (type == "3") return {3, std::nullopt};
  return {4, std::nullopt};
}

std::string RemoteSimulator::render_preference_reveal(const Preference& preference, const History& history,
                                                      const std::string& utterance, int ordinal) {
  auto reply = ask("reveal_preference.system", "reveal_preference.user",
                   {{"preference", format_preference(preference, ordinal)},
                    {"conversation_history", format_history(history)},
                    {"latest_utterance", utterance}});
  if (reply) {
    if (auto text = string_member(*reply, "response"); text && !text->empty()) return *text;
  }
  warn("render_preference_reveal fell back to the rule-based statement");
  return fallback_.render_preference_reveal(preference, history, utterance, ordinal);
}

std::string RemoteSimulator::render_proactive_reveal(const Preference& preference, const History& history,
                                                     const std::string& utterance, int ordinal) {
  auto reply = ask("proactive_reveal.system", "proactive_reveal.user",
                   {{"preference", format_preference(preference, ordinal)},
                    {"conversation_history", format_history(history)},
                    {"latest_utterance", utterance}});
  if (reply) {
    if (auto text = string_member(*reply, "response"); text && !text->empty()) return *text;
  }
  warn("render_proactive_reveal fell back to the rule-based statement");
  return fallback_.render_proactive_reveal(preference, history, utterance, ordinal);
}

std::string RemoteSimulator::render_neutral(const History& history, const std::string& utterance) {
  auto reply = ask("neutral_reply.system", "neutral_reply.user",
                   {{"conversation_history", format_history(history)}, {"latest_utterance", utterance}});
  if (reply) {
    if (auto text = string_member(*reply, "response"); text && !text->empty()) return *text;
  }
  warn("render_neutral fell back to the neutral pool");
  return fallback_.render_neutral(history, utterance);
}

}  // namespace prefgym
