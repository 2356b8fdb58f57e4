#pragma once

// JSON mapping for every persisted or wire-level type. Field names here are
// the ones documented under docs/schemas.

#include <string>
#include <string_view>

#include <json.hpp>

#include "prefgym/catalog.hpp"
#include "prefgym/domain.hpp"

namespace prefgym {

using Json = nlohmann::ordered_json;

// All *_from_json functions throw Error(MALFORMED_REQUEST) with a path to
// the offending member when the document does not fit.

Json to_json(const FieldValue& value);
FieldValue field_value_from_json(const Json& j);

Json to_json(const Predicate& predicate);
Predicate predicate_from_json(const Json& j);

Json to_json(const Preference& preference);
Preference preference_from_json(const Json& j, AspectKind aspect);

// `hidden` adds label, label_reason and effective_total_cost.
Json to_json(const OptionRecord& option, bool hidden = true);
OptionRecord option_from_json(const Json& j, AspectKind aspect);

Json to_json(const AspectTask& task);
AspectTask aspect_task_from_json(const Json& j);

Json to_json(const Scenario& scenario);
Scenario scenario_from_json(const Json& j);

Json to_json(const EnvConfig& config);
// Missing members keep the value from `base`.
EnvConfig config_from_json(const Json& j, const EnvConfig& base = {});

Json to_json(const AgentCall& call);
AgentCall agent_call_from_json(const Json& j);

Json to_json(const TurnRecord& turn);
TurnRecord turn_from_json(const Json& j);

Json log_header_json(const EpisodeLog& log);
Json log_end_json(const EpisodeLog& log);
Json to_json(const EpisodeLog& log);
EpisodeLog log_from_json(const Json& j);

// One record per line: a header, one line per turn, then an end record.
std::string log_to_jsonl(const EpisodeLog& log);
struct ParsedLog {
  EpisodeLog log;
  bool truncated = false;  // no end record, or a torn final line
};
ParsedLog log_from_jsonl(std::string_view text);

Json to_json(const MetricsRecord& metrics);
MetricsRecord metrics_from_json(const Json& j);

Json to_json(const PreferenceCatalog& catalog);
PreferenceCatalog catalog_from_json(const Json& j);

Json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const Json& j);

// Canonical compact text used for digests.
std::string canonical(const Json& j);

}  // namespace prefgym
