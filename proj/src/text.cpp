#include "prefgym/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <regex>

namespace prefgym::text {
namespace {

constexpr std::array<std::string_view, 12> kMonths = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

constexpr std::array<int, 12> kDaysInMonth = {31, 28, 31, 30, 31, 30,
                                              31, 31, 30, 31, 30, 31};

std::string strip_plural(std::string word) {
  if (word.size() > 3 && word.back() == 's' && word[word.size() - 2] != 's' &&
      !std::isdigit(static_cast<unsigned char>(word[word.size() - 2]))) {
    word.pop_back();
  }
  return word;
}

int month_from_word(const std::string& word) {
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (word == kMonths[i] || (word.size() >= 3 && kMonths[i].substr(0, word.size()) == word &&
                               word.size() <= kMonths[i].size())) {
      return static_cast<int>(i) + 1;
    }
  }
  return 0;
}

bool valid_day(int month, int day) {
  return month >= 1 && month <= 12 && day >= 1 && day <= kDaysInMonth[month - 1] + (month == 2);
}

bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int days_in(int year, int month) {
  return kDaysInMonth[month - 1] + ((month == 2 && is_leap(year)) ? 1 : 0);
}

}  // namespace

std::string lower(std::string_view in) {
  std::string out(in);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> tokens(std::string_view in) {
  std::vector<std::string> out;
  std::string current;
  for (char raw : in) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      out.push_back(strip_plural(std::move(current)));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(strip_plural(std::move(current)));
  return out;
}

std::string normalize(std::string_view in) {
  std::string out = " ";
  for (auto& token : tokens(in)) {
    out += token;
    out += ' ';
  }
  return out;
}

std::size_t find_phrase(const std::string& haystack, std::string_view phrase) {
  const std::string needle = normalize(phrase);
  if (needle.size() <= 1) return std::string::npos;
  return haystack.find(needle);
}

bool contains_phrase(const std::string& haystack, std::string_view phrase) {
  return find_phrase(haystack, phrase) != std::string::npos;
}

std::optional<CalendarDate> parse_iso_date(std::string_view iso) {
  static const std::regex kIso(R"(^(\d{4})-(\d{1,2})-(\d{1,2})$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(iso.begin(), iso.end(), m, kIso)) return std::nullopt;
  CalendarDate date{std::stoi(m[1].str()), std::stoi(m[2].str()), std::stoi(m[3].str())};
  if (!valid_day(date.month, date.day)) return std::nullopt;
  return date;
}

std::string to_iso(const CalendarDate& date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", date.year, date.month, date.day);
  return buf;
}

std::string spoken_date(const CalendarDate& date) {
  std::string month(kMonths[static_cast<std::size_t>(date.month - 1)]);
  month[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(month[0])));
  const int d = date.day;
  std::string suffix = "th";
  if (d % 100 < 11 || d % 100 > 13) {
    if (d % 10 == 1) suffix = "st";
    if (d % 10 == 2) suffix = "nd";
    if (d % 10 == 3) suffix = "rd";
  }
  return month + " " + std::to_string(d) + suffix;
}

CalendarDate add_days(const CalendarDate& date, int days) {
  CalendarDate out = date;
  out.day += days;
  while (out.day > days_in(out.year, out.month)) {
    out.day -= days_in(out.year, out.month);
    if (++out.month > 12) {
      out.month = 1;
      ++out.year;
    }
  }
  return out;
}

std::vector<CalendarDate> find_dates(std::string_view in) {
  std::string work = lower(in);
  struct Hit {
    std::size_t pos;
    CalendarDate date;
  };
  std::vector<Hit> hits;

  auto consume = [&](const std::regex& re, auto&& build) {
    std::string masked = work;
    for (auto it = std::sregex_iterator(work.begin(), work.end(), re);
         it != std::sregex_iterator(); ++it) {
      const auto& m = *it;
      if (auto date = build(m)) {
        hits.push_back({static_cast<std::size_t>(m.position(0)), *date});
        for (std::size_t i = 0; i < static_cast<std::size_t>(m.length(0)); ++i) {
          masked[static_cast<std::size_t>(m.position(0)) + i] = ' ';
        }
      }
    }
    work = std::move(masked);
  };

  static const std::regex kIso(R"((\d{4})-(\d{1,2})-(\d{1,2}))");
  consume(kIso, [](const std::smatch& m) -> std::optional<CalendarDate> {
    CalendarDate d{std::stoi(m[1].str()), std::stoi(m[2].str()), std::stoi(m[3].str())};
    if (!valid_day(d.month, d.day)) return std::nullopt;
    return d;
  });

  static const std::regex kMonthFirst(
      R"(\b([a-z]{3,9})\.?\s+(\d{1,2})(?:st|nd|rd|th)?\b(?:,?\s+(\d{4})\b)?)");
  consume(kMonthFirst, [](const std::smatch& m) -> std::optional<CalendarDate> {
    const int month = month_from_word(m[1].str());
    const int day = std::stoi(m[2].str());
    if (!month || !valid_day(month, day)) return std::nullopt;
    return CalendarDate{m[3].matched ? std::stoi(m[3].str()) : 0, month, day};
  });

  static const std::regex kDayFirst(
      R"(\b(\d{1,2})(?:st|nd|rd|th)?\s+(?:of\s+)?([a-z]{3,9})\b(?:,?\s+(\d{4})\b)?)");
  consume(kDayFirst, [](const std::smatch& m) -> std::optional<CalendarDate> {
    const int month = month_from_word(m[2].str());
    const int day = std::stoi(m[1].str());
    if (!month || !valid_day(month, day)) return std::nullopt;
    return CalendarDate{m[3].matched ? std::stoi(m[3].str()) : 0, month, day};
  });

  static const std::regex kNumeric(R"(\b(\d{1,2})/(\d{1,2})(?:/(\d{4}))?\b)");
  consume(kNumeric, [](const std::smatch& m) -> std::optional<CalendarDate> {
    const int month = std::stoi(m[1].str());
    const int day = std::stoi(m[2].str());
    if (!valid_day(month, day)) return std::nullopt;
    return CalendarDate{m[3].matched ? std::stoi(m[3].str()) : 0, month, day};
  });

  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
  std::vector<CalendarDate> out;
  out.reserve(hits.size());
  for (const auto& hit : hits) out.push_back(hit.date);
  return out;
}

bool same_day(const CalendarDate& a, const CalendarDate& b) {
  if (a.month != b.month || a.day != b.day) return false;
  return a.year == 0 || b.year == 0 || a.year == b.year;
}

}  // namespace prefgym::text
