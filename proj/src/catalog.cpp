#include "prefgym/catalog.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "assets.hpp"
#include "prefgym/digest.hpp"
#include "prefgym/error.hpp"
#include "prefgym/json_io.hpp"
#include "prefgym/predicates.hpp"
#include "prefgym/rng.hpp"
#include "prefgym/text.hpp"

namespace prefgym {

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::kArg: return "arg";
    case FieldKind::kPath: return "path";
    case FieldKind::kText: return "text";
    case FieldKind::kInteger: return "integer";
    case FieldKind::kList: return "list";
    case FieldKind::kServices: return "services";
  }
  return "text";
}

const FieldTemplate* AspectTemplate::field(std::string_view key) const {
  for (const auto& f : fields) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

const AspectTemplate* PreferenceCatalog::aspect(AspectKind kind) const {
  for (const auto& a : aspects) {
    if (a.aspect == kind) return &a;
  }
  return nullptr;
}

CatalogMetadata PreferenceCatalog::metadata() const {
  CatalogMetadata m;
  m.aspects = static_cast<int>(aspects.size());
  std::set<std::string> categories;
  for (const auto& a : aspects) {
    for (const auto& p : a.preferences) {
      ++m.preferences;
      m.elicitation_ways += static_cast<int>(p.implicit_statements.size());
      categories.insert(std::string(aspect_name(a.aspect)) + "/" + p.category);
    }
  }
  m.categories = static_cast<int>(categories.size());
  return m;
}

// ---------------------------------------------------------------------------
// Catalog checks

namespace {

const std::set<std::string> kTripSources = {"origin", "destination", "start", "end", "dining_date"};

bool in_pool(const FieldTemplate& f, const std::string& value) {
  return std::find(f.pool.begin(), f.pool.end(), value) != f.pool.end();
}

// Grid points min + k * step that fall inside [lo, hi].
std::pair<std::int64_t, std::int64_t> grid_span(const FieldTemplate& f, std::int64_t lo, std::int64_t hi) {
  lo = std::max(lo, f.min);
  hi = std::min(hi, f.max);
  if (f.step <= 0 || lo > hi) return {1, 0};
  const std::int64_t first = (lo - f.min + f.step - 1) / f.step;
  const std::int64_t last = (hi - f.min) / f.step;
  return {first, last};
}

bool grid_has(const FieldTemplate& f, std::int64_t lo, std::int64_t hi) {
  auto [first, last] = grid_span(f, lo, hi);
  return first <= last;
}

void add(ValidationReport& r, std::string code, std::string where, std::string message) {
  r.push_back({std::move(code), std::move(where), std::move(message)});
}

void check_predicate(const AspectTemplate& a, const Preference& p, const std::string& where,
                     ValidationReport& r) {
  const FieldTemplate* f = a.field(p.predicate.field);
  if (!f) {
    add(r, "UNKNOWN_FIELD", where, "predicate field '" + p.predicate.field + "' is not an option field");
    return;
  }
  auto wrong_kind = [&] {
    add(r, "PREDICATE_KIND", where,
        std::string(to_string(p.predicate.op)) + " does not apply to a " + std::string(to_string(f->kind)) + " field");
  };
  const auto& text = p.predicate.text;
  const auto n = p.predicate.number;
  switch (p.predicate.op) {
    case PredicateOp::kEquals:
    case PredicateOp::kNotEquals:
      if (f->kind != FieldKind::kText) return wrong_kind();
      if (!in_pool(*f, text) || f->pool.size() < 2) {
        add(r, "INFEASIBLE_PREDICATE", where, "value must be one of at least two pool entries");
      }
      break;
    case PredicateOp::kContains:
      if (f->kind != FieldKind::kList) return wrong_kind();
      if (!in_pool(*f, text)) add(r, "INFEASIBLE_PREDICATE", where, "'" + text + "' is not in the pool");
      break;
    case PredicateOp::kHasService:
      if (f->kind != FieldKind::kServices) return wrong_kind();
      if (!in_pool(*f, text)) add(r, "INFEASIBLE_PREDICATE", where, "'" + text + "' is not in the pool");
      break;
    case PredicateOp::kAtLeast:
      if (f->kind != FieldKind::kInteger) return wrong_kind();
      if (!grid_has(*f, n, f->max) || !grid_has(*f, f->min, n - 1)) {
        add(r, "INFEASIBLE_PREDICATE", where, "threshold leaves no value on one side");
      }
      break;
    case PredicateOp::kAtMost:
      if (f->kind != FieldKind::kInteger) return wrong_kind();
      if (!grid_has(*f, f->min, n) || !grid_has(*f, n + 1, f->max)) {
        add(r, "INFEASIBLE_PREDICATE", where, "threshold leaves no value on one side");
      }
      break;
    case PredicateOp::kMaxItems:
      if (f->kind == FieldKind::kPath) {
        if (n < 2) add(r, "INFEASIBLE_PREDICATE", where, "a path always has two endpoints");
      } else if (f->kind == FieldKind::kList) {
        if (n < 0 || static_cast<std::int64_t>(f->pool.size()) <= n) {
          add(r, "INFEASIBLE_PREDICATE", where, "pool too small to exceed the limit");
        }
      } else {
        return wrong_kind();
      }
      break;
  }
}

void check_aspect(const PreferenceCatalog& c, const AspectTemplate& a, std::set<std::string>& ids,
                  ValidationReport& r) {
  const std::string where = "aspect/" + std::string(aspect_name(a.aspect));
  if (a.preferences.size() < 4) {
    add(r, "TOO_FEW_PREFERENCES", where, "need at least 4 preferences, got " + std::to_string(a.preferences.size()));
  }
  if (a.search_args.empty()) add(r, "MISSING_SEARCH_ARGS", where, "no search arguments");
  if (!c.lexicon.vocabulary(a.aspect)) add(r, "MISSING_VOCABULARY", where, "no lexicon entry");

  std::set<std::string> arg_names;
  for (const auto& s : a.search_args) {
    if (!arg_names.insert(s.name).second) add(r, "DUPLICATE_SEARCH_ARG", where, s.name);
    if (!kTripSources.count(s.from)) add(r, "UNKNOWN_ARG_SOURCE", where + "/" + s.name, "unknown source '" + s.from + "'");
    const bool on_path = (s.name == "origin" || s.name == "destination") && a.field("path");
    bool shown = on_path;
    for (const auto& f : a.fields) shown = shown || (f.kind == FieldKind::kArg && f.source == s.name);
    if (!shown) add(r, "UNSHOWN_SEARCH_ARG", where + "/" + s.name, "no option field carries this argument");
  }

  std::set<std::string> keys;
  for (const auto& f : a.fields) {
    const std::string fw = where + "/field/" + f.key;
    if (!keys.insert(f.key).second) add(r, "DUPLICATE_FIELD", fw, "repeated key");
    switch (f.kind) {
      case FieldKind::kArg:
        if (!arg_names.count(f.source)) add(r, "UNKNOWN_ARG_SOURCE", fw, "no search argument '" + f.source + "'");
        break;
      case FieldKind::kPath:
        if (!arg_names.count("origin") || !arg_names.count("destination")) {
          add(r, "PATH_WITHOUT_ENDPOINTS", fw, "path needs origin and destination arguments");
        }
        break;
      case FieldKind::kText:
        if (f.pool.empty()) add(r, "EMPTY_POOL", fw, "text field needs a pool");
        break;
      case FieldKind::kInteger:
      case FieldKind::kServices:
        if (f.step <= 0 || f.min > f.max) add(r, "BAD_RANGE", fw, "need step > 0 and min <= max");
        if (f.kind == FieldKind::kServices && f.pool.empty()) add(r, "EMPTY_POOL", fw, "services need a pool");
        break;
      case FieldKind::kList:
        break;
    }
    if ((f.kind == FieldKind::kList || f.kind == FieldKind::kServices) &&
        (f.min_items < 0 || f.min_items > f.max_items)) {
      add(r, "BAD_RANGE", fw, "need 0 <= min_items <= max_items");
    }
  }
  const FieldTemplate* cost = a.field("cost");
  if (!cost || cost->kind != FieldKind::kInteger) add(r, "MISSING_COST", where, "integer 'cost' field required");

  for (const auto& b : a.plausibility) {
    const FieldTemplate* f = a.field(b.field);
    const std::string bw = where + "/plausibility/" + b.field;
    if (!f || f->kind != FieldKind::kInteger) {
      add(r, "BAD_PLAUSIBILITY", bw, "bounds must name an integer field");
    } else if (f->min < b.min || f->max > b.max) {
      add(r, "BAD_PLAUSIBILITY", bw, "template range exceeds the plausibility bounds");
    }
  }

  for (std::size_t i = 0; i < a.preferences.size(); ++i) {
    const auto& p = a.preferences[i];
    const std::string pw = where + "/" + p.preference_id;
    if (!ids.insert(p.preference_id).second) add(r, "DUPLICATE_PREFERENCE", pw, "repeated preference id");
    if (p.aspect != a.aspect) add(r, "PREFERENCE_ASPECT_MISMATCH", pw, "preference filed under another aspect");
    if (p.implicit_statements.size() < 2) {
      add(r, "TOO_FEW_STATEMENTS", pw, "need at least 2 implicit statements");
    }
    for (auto& v : validate_preference(p)) r.push_back(std::move(v));
    check_predicate(a, p, pw, r);
  }
}

}  // namespace

ValidationReport check_catalog(const PreferenceCatalog& catalog) {
  ValidationReport r;
  if (catalog.version.empty()) add(r, "MISSING_VERSION", "catalog", "version required");
  std::set<AspectKind> kinds;
  std::set<std::string> ids;
  for (const auto& a : catalog.aspects) {
    if (!kinds.insert(a.aspect).second) add(r, "DUPLICATE_ASPECT", "aspect/" + std::string(aspect_name(a.aspect)), "repeated");
    check_aspect(catalog, a, ids, r);
  }
  if (catalog.aspects.size() != kAllAspects.size()) {
    add(r, "ASPECT_COUNT", "catalog", "expected 5 aspects, got " + std::to_string(catalog.aspects.size()));
  }
  if (catalog.lexicon.cities.size() < 4) add(r, "TOO_FEW_CITIES", "lexicon", "need at least 4 cities");
  return r;
}

PreferenceCatalog load_catalog(std::string_view source) {
  Json j = Json::parse(source, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kMalformedCatalog, "not a JSON object");
  PreferenceCatalog catalog;
  try {
    catalog = catalog_from_json(j);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedCatalog, e.what());
  }
  const auto report = check_catalog(catalog);
  if (!report.empty()) {
    std::vector<std::string> details;
    for (const auto& v : report) details.push_back(v.code + " " + v.where + ": " + v.message);
    throw Error(ErrorCode::kInvariantViolation,
                std::to_string(report.size()) + " catalog rule(s) broken, first " + report.front().code, details);
  }
  return catalog;
}

PreferenceCatalog load_catalog_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_catalog(ss.str());
}

std::string_view builtin_catalog_text() { return asset_text("catalog.json"); }

const PreferenceCatalog& builtin_catalog() {
  static const PreferenceCatalog catalog = load_catalog(builtin_catalog_text());
  return catalog;
}

std::string catalog_digest(const PreferenceCatalog& catalog) { return sha256_hex(canonical(to_json(catalog))); }

// ---------------------------------------------------------------------------
// Generation

namespace {

struct Trip {
  std::string origin;
  std::string destination;
  text::CalendarDate start;
  text::CalendarDate end;
  text::CalendarDate dining;

  std::string value(const std::string& from) const {
    if (from == "origin") return origin;
    if (from == "destination") return destination;
    if (from == "start") return text::to_iso(start);
    if (from == "end") return text::to_iso(end);
    return text::to_iso(dining);
  }
};

Trip draw_trip(const PreferenceCatalog& catalog, Rng& rng) {
  const auto& cities = catalog.lexicon.cities;
  Trip t;
  const auto o = rng.below(cities.size());
  auto d = rng.below(cities.size() - 1);
  if (d >= o) ++d;
  t.origin = cities[o].name;
  t.destination = cities[d].name;
  t.start = {2025, static_cast<int>(rng.between(1, 11)), static_cast<int>(rng.between(1, 20))};
  const int nights = static_cast<int>(rng.between(3, 7));
  t.end = text::add_days(t.start, nights);
  t.dining = text::add_days(t.start, static_cast<int>(rng.between(1, nights - 1)));
  return t;
}

std::string_view with_article(AspectKind kind) {
  switch (kind) {
    case AspectKind::kFlight: return "a flight";
    case AspectKind::kHotel: return "a hotel";
    case AspectKind::kApartment: return "an apartment";
    case AspectKind::kRentalCar: return "a rental car";
    case AspectKind::kRestaurant: return "a restaurant";
  }
  return "";
}

std::string describe(const Trip& trip, const std::vector<AspectKind>& aspects) {
  std::string list;
  for (std::size_t i = 0; i < aspects.size(); ++i) {
    if (i > 0) list += i + 1 == aspects.size() ? " and " : ", ";
    list += with_article(aspects[i]);
  }
  std::string out = "I'm planning a trip from " + trip.origin + " to " + trip.destination + ", leaving on " +
                    text::spoken_date(trip.start) + " and coming back on " + text::spoken_date(trip.end) +
                    ". Please help me find " + list + ".";
  if (std::find(aspects.begin(), aspects.end(), AspectKind::kRestaurant) != aspects.end()) {
    out += " I plan to eat out in " + trip.destination + " on " + text::spoken_date(trip.dining) + ".";
  }
  return out;
}

std::vector<Preference> pick_preferences(const AspectTemplate& a, int count, Rng& rng) {
  std::vector<std::size_t> order(a.preferences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int attempt = 0; attempt < 64; ++attempt) {
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::size_t> chosen;
    for (auto idx : order) {
      if (static_cast<int>(chosen.size()) == count) break;
      bool ok = true;
      for (auto c : chosen) ok = ok && compatible(a.preferences[idx], a.preferences[c]);
      if (ok) chosen.push_back(idx);
    }
    if (static_cast<int>(chosen.size()) == count) {
      std::sort(chosen.begin(), chosen.end());
      std::vector<Preference> out;
      for (auto idx : chosen) out.push_back(a.preferences[idx]);
      return out;
    }
  }
  throw Error(ErrorCode::kCatalogTooSmall, "aspect " + std::string(aspect_name(a.aspect)) + " has no " +
                                               std::to_string(count) + " compatible preferences");
}

std::int64_t draw_grid(const FieldTemplate& f, std::int64_t lo, std::int64_t hi, Rng& rng) {
  auto [first, last] = grid_span(f, lo, hi);
  if (first > last) throw Error(ErrorCode::kInvariantViolation, "no grid value for field " + f.key);
  return f.min + rng.between(first, last) * f.step;
}

std::size_t pool_index(const FieldTemplate& f, const std::string& item) {
  return static_cast<std::size_t>(std::find(f.pool.begin(), f.pool.end(), item) - f.pool.begin());
}

// Random ordered subset of the pool.
std::vector<std::size_t> draw_subset(const FieldTemplate& f, Rng& rng) {
  const int hi = std::min<int>(f.max_items, static_cast<int>(f.pool.size()));
  const int lo = std::min(f.min_items, hi);
  const auto size = static_cast<std::size_t>(rng.between(lo, hi));
  std::vector<std::size_t> idx(f.pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(size);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::string search_arg(const AspectTask& task, const std::string& name) {
  for (const auto& [k, v] : task.ground_truth_search_args) {
    if (k == name) return v;
  }
  return "";
}

std::string other_city(const PreferenceCatalog& catalog, const std::vector<std::string>& avoid, Rng& rng) {
  std::vector<std::string> pool;
  for (const auto& c : catalog.lexicon.cities) {
    if (std::find(avoid.begin(), avoid.end(), c.name) == avoid.end()) pool.push_back(c.name);
  }
  return pool[rng.below(pool.size())];
}

class OptionFactory {
 public:
  OptionFactory(const PreferenceCatalog& catalog, const AspectTemplate& tmpl, const AspectTask& task, Rng& rng)
      : catalog_(catalog), tmpl_(tmpl), task_(task), rng_(rng) {}

  VisibleFields base() {
    VisibleFields out;
    for (const auto& f : tmpl_.fields) {
      switch (f.kind) {
        case FieldKind::kArg:
          out.push_back({f.key, search_arg(task_, f.source)});
          break;
        case FieldKind::kPath: {
          const auto from = search_arg(task_, "origin");
          const auto to = search_arg(task_, "destination");
          StringList path{from};
          if (rng_.coin()) path.push_back(other_city(catalog_, {from, to}, rng_));
          path.push_back(to);
          out.push_back({f.key, path});
          break;
        }
        case FieldKind::kText:
          out.push_back({f.key, f.pool[rng_.below(f.pool.size())]});
          break;
        case FieldKind::kInteger:
          out.push_back({f.key, draw_grid(f, f.min, f.max, rng_)});
          break;
        case FieldKind::kList: {
          StringList items;
          for (auto i : draw_subset(f, rng_)) items.push_back(f.pool[i]);
          out.push_back({f.key, items});
          break;
        }
        case FieldKind::kServices: {
          ServiceCosts services;
          for (auto i : draw_subset(f, rng_)) services.emplace_back(f.pool[i], draw_grid(f, f.min, f.max, rng_));
          out.push_back({f.key, services});
          break;
        }
      }
    }
    return out;
  }

  void satisfy(VisibleFields& fields, const Predicate& p) {
    if (prefgym::satisfies(fields, p)) return;
    const FieldTemplate& f = *tmpl_.field(p.field);
    FieldValue& v = *find_field(fields, p.field);
    switch (p.op) {
      case PredicateOp::kEquals:
        v = p.text;
        break;
      case PredicateOp::kNotEquals:
        v = pick_other(f, p.text);
        break;
      case PredicateOp::kContains:
        insert_item(f, std::get<StringList>(v), p.text);
        break;
      case PredicateOp::kAtLeast:
        v = draw_grid(f, p.number, f.max, rng_);
        break;
      case PredicateOp::kAtMost:
        v = draw_grid(f, f.min, p.number, rng_);
        break;
      case PredicateOp::kMaxItems: {
        auto& items = std::get<StringList>(v);
        const auto limit = static_cast<std::size_t>(p.number);
        if (f.kind == FieldKind::kPath) {
          const std::string last = items.back();
          items.resize(limit - 1);
          items.push_back(last);
        } else {
          items.resize(limit);
        }
        break;
      }
      case PredicateOp::kHasService: {
        auto& services = std::get<ServiceCosts>(v);
        services.emplace_back(p.text, draw_grid(f, f.min, f.max, rng_));
        std::sort(services.begin(), services.end(), [&](const auto& a, const auto& b) {
          return pool_index(f, a.first) < pool_index(f, b.first);
        });
        break;
      }
    }
  }

  void violate(VisibleFields& fields, const Predicate& p) {
    const FieldTemplate& f = *tmpl_.field(p.field);
    FieldValue& v = *find_field(fields, p.field);
    switch (p.op) {
      case PredicateOp::kEquals:
        v = pick_other(f, p.text);
        break;
      case PredicateOp::kNotEquals:
        v = p.text;
        break;
      case PredicateOp::kContains: {
        auto& items = std::get<StringList>(v);
        items.erase(std::remove(items.begin(), items.end(), p.text), items.end());
        break;
      }
      case PredicateOp::kAtLeast:
        v = draw_grid(f, f.min, p.number - 1, rng_);
        break;
      case PredicateOp::kAtMost:
        v = draw_grid(f, p.number + 1, f.max, rng_);
        break;
      case PredicateOp::kMaxItems: {
        auto& items = std::get<StringList>(v);
        if (f.kind == FieldKind::kPath) {
          while (static_cast<std::int64_t>(items.size()) <= p.number) {
            items.insert(items.end() - 1, other_city(catalog_, items, rng_));
          }
        } else {
          for (const auto& item : f.pool) {
            if (static_cast<std::int64_t>(items.size()) > p.number) break;
            if (std::find(items.begin(), items.end(), item) == items.end()) insert_item(f, items, item);
          }
        }
        break;
      }
      case PredicateOp::kHasService: {
        auto& services = std::get<ServiceCosts>(v);
        services.erase(std::remove_if(services.begin(), services.end(),
                                      [&](const auto& s) { return s.first == p.text; }),
                       services.end());
        break;
      }
    }
  }

  // Returns the reason text.
  std::string corrupt(VisibleFields& fields) {
    const bool can_mismatch = !tmpl_.search_args.empty();
    const bool can_inflate = !tmpl_.plausibility.empty();
    if (can_mismatch && (!can_inflate || rng_.coin())) {
      const auto& arg = tmpl_.search_args[rng_.below(tmpl_.search_args.size())];
      const bool on_path = (arg.name == "origin" || arg.name == "destination") && tmpl_.field("path");
      if (on_path) {
        auto& path = std::get<StringList>(*find_field(fields, "path"));
        const auto replacement = other_city(catalog_, path, rng_);
        (arg.name == "origin" ? path.front() : path.back()) = replacement;
      } else {
        for (const auto& f : tmpl_.fields) {
          if (f.kind != FieldKind::kArg || f.source != arg.name) continue;
          auto& value = std::get<std::string>(*find_field(fields, f.key));
          if (auto date = text::parse_iso_date(value)) {
            value = text::to_iso(text::add_days(*date, static_cast<int>(rng_.between(1, 3))));
          } else {
            value = other_city(catalog_, {value}, rng_);
          }
        }
      }
      return "does not match the search argument " + arg.name;
    }
    const auto& bound = tmpl_.plausibility[rng_.below(tmpl_.plausibility.size())];
    const std::int64_t out_of_band = bound.field == "cost" ? 1000000 : 1000;
    *find_field(fields, bound.field) = std::max(out_of_band, bound.max + 1);
    return "implausible " + bound.field;
  }

 private:
  std::string pick_other(const FieldTemplate& f, const std::string& avoid) {
    std::vector<std::string> pool;
    for (const auto& s : f.pool) {
      if (s != avoid) pool.push_back(s);
    }
    return pool[rng_.below(pool.size())];
  }

  static void insert_item(const FieldTemplate& f, StringList& items, const std::string& item) {
    if (std::find(items.begin(), items.end(), item) != items.end()) return;
    items.push_back(item);
    std::stable_sort(items.begin(), items.end(),
                     [&](const auto& a, const auto& b) { return pool_index(f, a) < pool_index(f, b); });
  }

  const PreferenceCatalog& catalog_;
  const AspectTemplate& tmpl_;
  const AspectTask& task_;
  Rng& rng_;
};

}  // namespace

std::vector<OptionRecord> synthesize_options(const PreferenceCatalog& catalog, const AspectTask& task,
                                             OptionCounts counts, std::uint64_t seed) {
  const AspectTemplate* tmpl = catalog.aspect(task.aspect);
  if (!tmpl) throw Error(ErrorCode::kCatalogTooSmall, "catalog has no " + std::string(aspect_name(task.aspect)));
  if (counts.wrong < 0 || counts.noise < 0) throw Error(ErrorCode::kInvalidConfig, "option counts must be >= 0");
  if (counts.wrong > 0 && task.preferences.empty()) {
    throw Error(ErrorCode::kInvalidScenario, "wrong options need at least one preference");
  }
  Rng rng(seed);
  OptionFactory factory(catalog, *tmpl, task, rng);
  auto all_satisfied = [&] {
    VisibleFields fields = factory.base();
    for (const auto& p : task.preferences) factory.satisfy(fields, p.predicate);
    return fields;
  };

  std::vector<OptionRecord> options;
  for (int i = 0; i < 3; ++i) {
    OptionRecord o;
    o.aspect = task.aspect;
    o.visible_fields = all_satisfied();
    o.label = Label::kCorrect;
    o.label_reason = "satisfies every preference";
    options.push_back(std::move(o));
  }
  // Strict cost minimum: everyone else is pushed above the cheapest.
  const FieldTemplate* cost_field = tmpl->field("cost");
  const std::int64_t step = cost_field ? cost_field->step : 1;
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (effective_cost(options[i].visible_fields, task.preferences) <
        effective_cost(options[best].visible_fields, task.preferences)) {
      best = i;
    }
  }
  const auto best_cost = effective_cost(options[best].visible_fields, task.preferences);
  for (std::size_t i = 0; i < 3; ++i) {
    if (i == best) continue;
    const auto c = effective_cost(options[i].visible_fields, task.preferences);
    if (c <= best_cost) std::get<std::int64_t>(*find_field(options[i].visible_fields, "cost")) += best_cost - c + step;
  }
  options[best].label = Label::kBest;
  options[best].label_reason = "satisfies every preference at the lowest total cost";

  for (int i = 0; i < counts.wrong; ++i) {
    OptionRecord o;
    o.aspect = task.aspect;
    o.visible_fields = all_satisfied();
    const auto& target = task.preferences[rng.below(task.preferences.size())];
    factory.violate(o.visible_fields, target.predicate);
    o.label = Label::kWrong;
    o.label_reason = "violates " + target.preference_id + ": " + target.canonical_statement;
    options.push_back(std::move(o));
  }
  for (int i = 0; i < counts.noise; ++i) {
    OptionRecord o;
    o.aspect = task.aspect;
    o.visible_fields = factory.base();
    o.label = Label::kNoise;
    o.label_reason = factory.corrupt(o.visible_fields);
    options.push_back(std::move(o));
  }

  rng.shuffle(std::span<OptionRecord>(options));
  for (std::size_t i = 0; i < options.size(); ++i) {
    options[i].option_id = OptionId{id_prefix(task.aspect), static_cast<std::uint32_t>(i + 1)}.str();
    options[i].effective_total_cost = effective_cost(options[i].visible_fields, task.preferences);
  }
  return options;
}

Scenario sample_scenario(const PreferenceCatalog& catalog, const std::vector<int>& composition, std::uint64_t seed,
                         const GenerationOptions& options) {
  Scenario s;
  s.tier = tier_of(composition);
  if (composition.size() > catalog.aspects.size()) {
    throw Error(ErrorCode::kCatalogTooSmall, "composition needs more aspects than the catalog has");
  }
  if (catalog.lexicon.cities.size() < 4) throw Error(ErrorCode::kCatalogTooSmall, "catalog needs at least 4 cities");
  Rng rng(seed);

  std::vector<std::size_t> aspect_order(catalog.aspects.size());
  for (std::size_t i = 0; i < aspect_order.size(); ++i) aspect_order[i] = i;
  rng.shuffle(std::span<std::size_t>(aspect_order));
  aspect_order.resize(composition.size());
  std::sort(aspect_order.begin(), aspect_order.end());
  std::vector<int> counts = composition;
  rng.shuffle(std::span<int>(counts));

  const Trip trip = draw_trip(catalog, rng);
  std::vector<AspectKind> kinds;
  for (std::size_t i = 0; i < aspect_order.size(); ++i) {
    const AspectTemplate& tmpl = catalog.aspects[aspect_order[i]];
    AspectTask task;
    task.aspect = tmpl.aspect;
    for (const auto& arg : tmpl.search_args) task.ground_truth_search_args.emplace_back(arg.name, trip.value(arg.from));
    task.preferences = pick_preferences(tmpl, counts[i], rng);
    task.plausibility = tmpl.plausibility;
    s.aspects.push_back(std::move(task));
    kinds.push_back(tmpl.aspect);
  }
  for (std::size_t i = 0; i < s.aspects.size(); ++i) {
    s.aspects[i].options = synthesize_options(catalog, s.aspects[i], options.counts, mix_seed(seed, 100 + i));
  }
  s.composition = counts;
  s.description = describe(trip, kinds);
  s.scenario_id = "t" + composition_label(composition) + "-s" + std::to_string(seed);
  return s;
}

Scenario regenerate_options(const PreferenceCatalog& catalog, const Scenario& scenario, OptionCounts counts,
                            std::uint64_t seed) {
  Scenario out = scenario;
  for (std::size_t i = 0; i < out.aspects.size(); ++i) {
    out.aspects[i].options = synthesize_options(catalog, out.aspects[i], counts, mix_seed(seed, 100 + i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plans and datasets

std::vector<int> parse_composition(std::string_view text) {
  std::vector<int> out;
  for (char ch : text) {
    if (ch < '0' || ch > '9') {
      throw Error(ErrorCode::kUnsupportedComposition, "composition must be digits, got '" + std::string(text) + "'");
    }
    out.push_back(ch - '0');
  }
  tier_of(out);
  return out;
}

std::vector<PlanEntry> parse_plan(std::string_view text) {
  std::vector<PlanEntry> plan;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    pos = comma == std::string_view::npos ? text.size() + 1 : comma + 1;
    if (item.empty()) continue;
    auto colon = item.find(':');
    PlanEntry entry;
    entry.composition = parse_composition(item.substr(0, colon));
    entry.count = 1;
    if (colon != std::string_view::npos) {
      const std::string n(item.substr(colon + 1));
      try {
        std::size_t used = 0;
        entry.count = std::stoi(n, &used);
        if (used != n.size() || entry.count < 1) throw std::invalid_argument(n);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kMalformedRequest, "bad count in plan entry '" + std::string(item) + "'");
      }
    }
    plan.push_back(std::move(entry));
  }
  if (plan.empty()) throw Error(ErrorCode::kMalformedRequest, "plan is empty");
  return plan;
}

std::string format_plan(const std::vector<PlanEntry>& plan) {
  std::string out;
  for (const auto& e : plan) {
    if (!out.empty()) out += ",";
    for (int n : e.composition) out += std::to_string(n);
    out += ":" + std::to_string(e.count);
  }
  return out;
}

DatasetManifest build_manifest(const std::vector<Scenario>& scenarios) {
  DatasetManifest m;
  m.tier_counts = {{"easy", 0}, {"medium", 0}, {"hard", 0}};
  std::string all;
  for (const auto& s : scenarios) {
    const auto d = sha256_hex(canonical(to_json(s)));
    m.scenarios.emplace_back(s.scenario_id, d);
    ++m.tier_counts[std::string(to_string(s.tier))];
    all += d;
    all += '\n';
  }
  m.digest = sha256_hex(all);
  return m;
}

Dataset generate_dataset(const PreferenceCatalog& catalog, const std::vector<PlanEntry>& plan, std::uint64_t seed,
                         const GenerationOptions& options) {
  if (plan.empty()) throw Error(ErrorCode::kMalformedRequest, "plan is empty");
  Dataset ds;
  int serial = 0;
  for (std::size_t e = 0; e < plan.size(); ++e) {
    for (int i = 0; i < plan[e].count; ++i) {
      Scenario s = sample_scenario(catalog, plan[e].composition, mix_seed(mix_seed(seed, e), i), options);
      char id[32];
      std::snprintf(id, sizeof id, "-%04d", ++serial);
      s.scenario_id = "t" + composition_label(plan[e].composition) + id;
      ds.scenarios.push_back(std::move(s));
    }
  }
  ds.manifest = build_manifest(ds.scenarios);
  ds.manifest.catalog_digest = catalog_digest(catalog);
  ds.manifest.plan = format_plan(plan);
  ds.manifest.seed = seed;
  ds.manifest.counts = options.counts;
  return ds;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << body;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Json j = Json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kInvalidScenario, path.string() + " is not valid JSON");
  return j;
}

Scenario parse_scenario(const Json& j, const std::string& where) {
  try {
    return scenario_from_json(j);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidScenario, where + ": " + e.what());
  }
}

}  // namespace

void write_dataset(const Dataset& dataset, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "scenarios", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir + ": " + ec.message());
  for (const auto& s : dataset.scenarios) {
    write_file(fs::path(dir) / "scenarios" / (s.scenario_id + ".json"), to_json(s).dump(2) + "\n");
  }
  write_file(fs::path(dir) / "manifest.json", to_json(dataset.manifest).dump(2) + "\n");
}

Dataset read_dataset(const std::string& path) {
  namespace fs = std::filesystem;
  Dataset ds;
  fs::path root(path);
  if (fs::is_regular_file(root) && root.filename() != "manifest.json") {
    Json j = read_json(root);
    if (j.is_array()) {
      for (const auto& item : j) ds.scenarios.push_back(parse_scenario(item, path));
    } else {
      ds.scenarios.push_back(parse_scenario(j, path));
    }
    ds.manifest = build_manifest(ds.scenarios);
    return ds;
  }
  if (fs::is_regular_file(root)) root = root.parent_path();
  if (!fs::is_directory(root)) throw Error(ErrorCode::kIoError, "no dataset at " + path);
  Json mj = read_json(root / "manifest.json");
  try {
    ds.manifest = manifest_from_json(mj);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidScenario, "manifest: " + std::string(e.what()));
  }
  for (const auto& [id, digest] : ds.manifest.scenarios) {
    const auto file = root / "scenarios" / (id + ".json");
    Scenario s = parse_scenario(read_json(file), file.string());
    if (sha256_hex(canonical(to_json(s))) != digest) {
      throw Error(ErrorCode::kInvalidScenario, "digest mismatch for " + id);
    }
    ds.scenarios.push_back(std::move(s));
  }
  return ds;
}

}  // namespace prefgym
