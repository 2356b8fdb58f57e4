#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "prefgym/domain.hpp"
#include "prefgym/lexicon.hpp"
#include "prefgym/validation.hpp"

namespace prefgym {

enum class FieldKind {
  kArg,       // copied from a search argument (`source`)
  kPath,      // origin, optional layovers, destination
  kText,      // one value from `pool`
  kInteger,   // value on the grid min, min+step, ..., max
  kList,      // ordered subset of `pool`
  kServices,  // subset of `pool`, each priced on the min..max grid
};

std::string_view to_string(FieldKind kind);

struct FieldTemplate {
  std::string key;
  FieldKind kind = FieldKind::kText;
  std::string source;
  std::vector<std::string> pool;
  std::int64_t min = 0;
  std::int64_t max = 0;
  std::int64_t step = 1;
  int min_items = 0;
  int max_items = 0;
  friend bool operator==(const FieldTemplate&, const FieldTemplate&) = default;
};

// Where a ground-truth search argument gets its value from the trip plan:
// origin, destination, start, end or dining_date.
struct SearchArgTemplate {
  std::string name;
  std::string from;
  friend bool operator==(const SearchArgTemplate&, const SearchArgTemplate&) = default;
};

struct AspectTemplate {
  AspectKind aspect = AspectKind::kFlight;
  std::vector<SearchArgTemplate> search_args;
  std::vector<FieldTemplate> fields;
  std::vector<FieldBounds> plausibility;
  std::vector<Preference> preferences;  // catalog order

  const FieldTemplate* field(std::string_view key) const;
  friend bool operator==(const AspectTemplate&, const AspectTemplate&) = default;
};

struct CatalogMetadata {
  int aspects = 0;
  int categories = 0;
  int preferences = 0;
  int elicitation_ways = 0;  // implicit statements in total
};

struct PreferenceCatalog {
  std::string name;
  std::string version;
  Lexicon lexicon;
  std::vector<AspectTemplate> aspects;

  const AspectTemplate* aspect(AspectKind kind) const;
  CatalogMetadata metadata() const;
  friend bool operator==(const PreferenceCatalog&, const PreferenceCatalog&) = default;
};

// Parses and checks a catalog document. Throws MALFORMED_CATALOG when the
// text is not a catalog and INVARIANT_VIOLATION (details = codes) when it
// is one but breaks a rule.
PreferenceCatalog load_catalog(std::string_view source);
PreferenceCatalog load_catalog_file(const std::string& path);
const PreferenceCatalog& builtin_catalog();
std::string_view builtin_catalog_text();

// Every rule a catalog must satisfy; empty when fine.
ValidationReport check_catalog(const PreferenceCatalog& catalog);

// SHA-256 of the canonical catalog serialisation.
std::string catalog_digest(const PreferenceCatalog& catalog);

struct GenerationOptions {
  OptionCounts counts;
};

// Aspect task without options; synthesize_options fills them in.
Scenario sample_scenario(const PreferenceCatalog& catalog, const std::vector<int>& composition,
                         std::uint64_t seed, const GenerationOptions& options = {});

std::vector<OptionRecord> synthesize_options(const PreferenceCatalog& catalog,
                                             const AspectTask& task, OptionCounts counts,
                                             std::uint64_t seed);

// Same scenario with every aspect's options rebuilt under new counts.
Scenario regenerate_options(const PreferenceCatalog& catalog, const Scenario& scenario,
                            OptionCounts counts, std::uint64_t seed);

struct PlanEntry {
  std::vector<int> composition;
  int count = 0;
  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

// "22:10,33:10,44:10"
std::vector<PlanEntry> parse_plan(std::string_view text);
std::string format_plan(const std::vector<PlanEntry>& plan);
std::vector<int> parse_composition(std::string_view text);

struct DatasetManifest {
  std::string catalog_digest;
  std::string plan;
  std::uint64_t seed = 0;
  OptionCounts counts;
  std::map<std::string, int> tier_counts;  // easy / medium / hard
  std::vector<std::pair<std::string, std::string>> scenarios;  // id, digest
  std::string digest;  // over every scenario digest, in order
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct Dataset {
  std::vector<Scenario> scenarios;
  DatasetManifest manifest;
};

Dataset generate_dataset(const PreferenceCatalog& catalog, const std::vector<PlanEntry>& plan,
                         std::uint64_t seed, const GenerationOptions& options = {});

// Recomputes manifest digests and tier counts for a list of scenarios.
DatasetManifest build_manifest(const std::vector<Scenario>& scenarios);

// Dataset directory: manifest.json plus scenarios/<id>.json.
void write_dataset(const Dataset& dataset, const std::string& dir);
Dataset read_dataset(const std::string& path);

}  // namespace prefgym
