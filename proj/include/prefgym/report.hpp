#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prefgym/json_io.hpp"
#include "prefgym/metrics.hpp"

namespace prefgym {

enum class GroupBy { kNone, kTier, kComposition };
std::string_view to_string(GroupBy g);
std::optional<GroupBy> group_by_from_string(std::string_view name);

// What one finished episode contributes to a report.
struct EpisodeResult {
  std::string scenario_id;
  Tier tier = Tier::kEasy;
  std::string composition;  // e.g. "223"
  int sample = 0;
  std::uint64_t seed = 0;
  EpisodeLog log;
  std::string error;  // non-empty when the episode could not run
};

struct ReportRow {
  std::string group;  // "all", a tier name or a composition label
  int episodes = 0;
  int scenarios = 0;
  MetricsRecord metrics;
  double max_score = 0.0;  // mean over scenarios of the best sample score
  std::vector<std::string> flags;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct BenchmarkReport {
  Json metadata = Json::object();
  std::vector<ReportRow> rows;  // "all" first, then groups in stable order
  friend bool operator==(const BenchmarkReport&, const BenchmarkReport&) = default;
};

// Micro-averaged rows. Groups sort easy < medium < hard, compositions
// by label.
BenchmarkReport aggregate(const std::vector<EpisodeResult>& results, GroupBy group_by,
                          TimingMode timing = TimingMode::kReward);

enum class ReportFormat { kTabular, kStructured, kHuman };
std::optional<ReportFormat> report_format_from_string(std::string_view name);

// Column titles shared by every format, in order.
const std::vector<std::string>& report_columns();

// Throws UNSUPPORTED_FORMAT for formats outside the enum.
std::string render_report(const BenchmarkReport& report, ReportFormat format);
std::string render_report(const BenchmarkReport& report, std::string_view format);

Json to_json(const BenchmarkReport& report);
BenchmarkReport report_from_json(const Json& j);

// Turn-by-turn text of a log with observations and rewards. A truncated
// log ends with a note saying so.
std::string render_transcript(const EpisodeLog& log, bool truncated = false);

// SHA-256 over the structured form.
std::string report_digest(const BenchmarkReport& report);

}  // namespace prefgym
