#include "prefgym/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "prefgym/digest.hpp"
#include "prefgym/error.hpp"

namespace prefgym {

std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::kNone: return "none";
    case GroupBy::kTier: return "tier";
    case GroupBy::kComposition: return "composition";
  }
  return "none";
}

std::optional<GroupBy> group_by_from_string(std::string_view name) {
  if (name == "none") return GroupBy::kNone;
  if (name == "tier") return GroupBy::kTier;
  if (name == "composition") return GroupBy::kComposition;
  return std::nullopt;
}

std::optional<ReportFormat> report_format_from_string(std::string_view name) {
  if (name == "tabular" || name == "csv") return ReportFormat::kTabular;
  if (name == "structured" || name == "json") return ReportFormat::kStructured;
  if (name == "human" || name == "human-readable" || name == "text") return ReportFormat::kHuman;
  return std::nullopt;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns = {
      "Best Exist Rate", "Correct Exist Rate", "Score", "Valid Search %", "Valid Action %",
      "Preference Elicited Active %", "Preference Elicited Passive %"};
  return columns;
}

namespace {

// Group key with a sort rank so tiers come out easy < medium < hard.
struct GroupKey {
  int rank = 0;
  std::string label;
  bool operator<(const GroupKey& o) const { return std::tie(rank, label) < std::tie(o.rank, o.label); }
};

struct Bucket {
  MetricTally tally;
  std::map<std::string, double> best_by_scenario;
  std::set<std::string> scenarios;
  int errors = 0;
};

ReportRow finish_row(const std::string& name, const Bucket& b) {
  ReportRow row;
  row.group = name;
  row.episodes = b.tally.episodes;
  row.scenarios = static_cast<int>(b.scenarios.size());
  auto done = finish(b.tally);
  row.metrics = done.metrics;
  row.flags = done.flags;
  if (!b.best_by_scenario.empty()) {
    double sum = 0.0;
    for (const auto& [id, s] : b.best_by_scenario) sum += s;
    row.max_score = sum / static_cast<double>(b.best_by_scenario.size());
  }
  if (b.errors > 0) row.flags.push_back("errors=" + std::to_string(b.errors));
  return row;
}

void add(Bucket& b, const EpisodeResult& r, TimingMode timing) {
  b.scenarios.insert(r.scenario_id);
  if (!r.error.empty()) {
    ++b.errors;
    return;
  }
  b.tally += tally_episode(r.log, timing);
  const double s = score_episode(r.log);
  auto [it, fresh] = b.best_by_scenario.emplace(r.scenario_id, s);
  if (!fresh) it->second = std::max(it->second, s);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<double> column_values(const MetricsRecord& m) {
  return {m.best_exist_rate, m.correct_exist_rate, m.score, m.valid_search_pct, m.valid_action_pct,
          m.pref_elicited_active_pct, m.pref_elicited_passive_pct};
}

bool is_percent(std::size_t column) { return column >= 3; }

std::string join_flags(const std::vector<std::string>& flags, char sep) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += sep;
    out += f;
  }
  return out;
}

std::string render_tabular(const BenchmarkReport& report) {
  std::string out = "Group,Episodes,Scenarios";
  for (const auto& c : report_columns()) out += "," + c;
  out += ",Max Score,First Valid Index,Weighted Score,Coverage,Flags\n";
  for (const auto& row : report.rows) {
    out += row.group + "," + std::to_string(row.episodes) + "," + std::to_string(row.scenarios);
    const auto values = column_values(row.metrics);
    for (std::size_t i = 0; i < values.size(); ++i) out += "," + fixed(is_percent(i) ? values[i] * 100 : values[i], 6);
    out += "," + fixed(row.max_score, 6);
    out += "," + (row.metrics.first_valid_index ? fixed(*row.metrics.first_valid_index, 6) : std::string());
    out += "," + fixed(row.metrics.weighted_score, 6) + "," + fixed(row.metrics.coverage, 6);
    out += "," + join_flags(row.flags, ';') + "\n";
  }
  return out;
}

std::string pad(const std::string& s, std::size_t width, bool right) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

std::string render_human(const BenchmarkReport& report) {
  std::vector<std::string> header = {"Group", "Episodes"};
  for (const auto& c : report_columns()) header.push_back(c);
  header.insert(header.end(), {"Max Score", "Weighted Score", "Coverage"});
  std::vector<std::vector<std::string>> table = {header};
  for (const auto& row : report.rows) {
    std::vector<std::string> cells = {row.group, std::to_string(row.episodes)};
    const auto values = column_values(row.metrics);
    for (std::size_t i = 0; i < values.size(); ++i) {
      cells.push_back(is_percent(i) ? fixed(values[i] * 100, 1) : fixed(values[i], 3));
    }
    cells.push_back(fixed(row.max_score, 3));
    cells.push_back(fixed(row.metrics.weighted_score, 3));
    cells.push_back(fixed(row.metrics.coverage, 3));
    table.push_back(std::move(cells));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& r : table) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::string out;
  for (auto it = report.metadata.begin(); it != report.metadata.end(); ++it) {
    if (it.key() == "config" || it.key() == "seeds") continue;
    out += it.key() + ": " + (it.value().is_string() ? it.value().get<std::string>() : it.value().dump()) + "\n";
  }
  if (!out.empty()) out += "\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < table[r].size(); ++i) {
      if (i) line += "  ";
      line += pad(table[r][i], width[i], i > 0);
    }
    out += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  for (const auto& row : report.rows) {
    if (!row.flags.empty()) out += "note: " + row.group + " has zero denominators or errors: " + join_flags(row.flags, ' ') + "\n";
  }
  return out;
}

}  // namespace

BenchmarkReport aggregate(const std::vector<EpisodeResult>& results, GroupBy group_by, TimingMode timing) {
  BenchmarkReport report;
  if (results.empty()) return report;
  Bucket all;
  std::map<GroupKey, Bucket> groups;
  for (const auto& r : results) {
    add(all, r, timing);
    if (group_by == GroupBy::kTier) {
      add(groups[{static_cast<int>(r.tier), std::string(to_string(r.tier))}], r, timing);
    } else if (group_by == GroupBy::kComposition) {
      add(groups[{static_cast<int>(r.tier), r.composition}], r, timing);
    }
  }
  report.rows.push_back(finish_row("all", all));
  for (const auto& [key, bucket] : groups) report.rows.push_back(finish_row(key.label, bucket));
  return report;
}

Json to_json(const BenchmarkReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"group", row.group},
                    {"episodes", row.episodes},
                    {"scenarios", row.scenarios},
                    {"metrics", to_json(row.metrics)},
                    {"max_score", row.max_score},
                    {"flags", row.flags}});
  }
  return {{"metadata", report.metadata}, {"columns", report_columns()}, {"rows", rows}};
}

BenchmarkReport report_from_json(const Json& j) {
  BenchmarkReport report;
  try {
    report.metadata = j.at("metadata");
    for (const auto& r : j.at("rows")) {
      ReportRow row;
      row.group = r.at("group").get<std::string>();
      row.episodes = r.at("episodes").get<int>();
      row.scenarios = r.at("scenarios").get<int>();
      row.metrics = metrics_from_json(r.at("metrics"));
      row.max_score = r.at("max_score").get<double>();
      row.flags = r.at("flags").get<std::vector<std::string>>();
      report.rows.push_back(std::move(row));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kMalformedRequest, std::string("report: ") + e.what());
  }
  return report;
}

std::string render_report(const BenchmarkReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kTabular: return render_tabular(report);
    case ReportFormat::kStructured: return to_json(report).dump(2) + "\n";
    case ReportFormat::kHuman: return render_human(report);
  }
  throw Error(ErrorCode::kUnsupportedFormat, "unknown report format");
}

std::string render_report(const BenchmarkReport& report, std::string_view format) {
  const auto f = report_format_from_string(format);
  if (!f) throw Error(ErrorCode::kUnsupportedFormat, "unsupported report format '" + std::string(format) + "'");
  return render_report(report, *f);
}

std::string report_digest(const BenchmarkReport& report) { return sha256_hex(canonical(to_json(report))); }

}  // namespace prefgym

namespace prefgym {

std::string render_transcript(const EpisodeLog& log, bool truncated) {
  std::string out = "scenario " + log.scenario_id + " (" + std::string(to_string(log.tier)) + ", composition " +
                    composition_label(log.composition) + "), mode " + std::string(to_string(log.config.mode)) +
                    ", " + std::to_string(log.preference_total) + " preferences\n";
  double total = 0.0;
  for (const auto& t : log.turns) {
    out += "\n--- turn " + std::to_string(t.turn_index) + " ---\n";
    out += "agent [" + t.call.choice + "]: " + t.call.content + "\n";
    if (!t.call.thought.empty()) out += "  thought: " + t.call.thought + "\n";
    out += "user: " + t.observation + "\n";
    out += "reward: " + fixed(t.reward, 3);
    if (!t.components.empty()) {
      out += " (";
      for (std::size_t i = 0; i < t.components.size(); ++i) {
        out += (i ? ", " : "") + t.components[i].name + " " + fixed(t.components[i].value, 3);
      }
      out += ")";
    }
    out += "\n";
    for (const auto& r : t.revealed) {
      out += "revealed: " + r.preference_id + " (" + std::string(to_string(r.source)) + ")\n";
    }
    if (t.answer_eval) out += "answer: " + t.answer_eval->option_id + " is " + std::string(to_string(t.answer_eval->label)) + "\n";
    if (t.protocol_error) out += "protocol error\n";
    total += t.reward;
  }
  out += "\n";
  if (log.terminal_reason) {
    out += "=== ended: " + std::string(to_string(*log.terminal_reason));
    if (!log.note.empty()) out += " (" + log.note + ")";
    out += "\n";
  }
  if (truncated || !log.terminal_reason) {
    out += "=== log truncated after " + std::to_string(log.turns.size()) + " turns; no end record\n";
  }
  out += "total reward " + fixed(total, 3) + ", score " + fixed(score_episode(log), 3) + "\n";
  return out;
}

}  // namespace prefgym
