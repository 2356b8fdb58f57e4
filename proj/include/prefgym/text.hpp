#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prefgym::text {

std::string lower(std::string_view in);

// Lowercases, turns punctuation into spaces, strips simple plurals
// ("layovers" -> "layover") and pads with single spaces so that phrase
// lookups can anchor on word boundaries: " hotel in austin ".
std::string normalize(std::string_view in);

std::vector<std::string> tokens(std::string_view in);

// `haystack` must come from normalize(); `phrase` is normalized here.
bool contains_phrase(const std::string& haystack, std::string_view phrase);

// Offset of the first occurrence, or npos.
std::size_t find_phrase(const std::string& haystack, std::string_view phrase);

struct CalendarDate {
  int year = 0;  // 0 when the text did not say
  int month = 0;
  int day = 0;

  friend bool operator==(const CalendarDate&, const CalendarDate&) = default;
};

std::optional<CalendarDate> parse_iso_date(std::string_view iso);
std::string to_iso(const CalendarDate& date);
// "April 10th"
std::string spoken_date(const CalendarDate& date);
CalendarDate add_days(const CalendarDate& date, int days);

// Every date mention in free text, in order of appearance. Understands
// ISO dates, "April 10th", "Apr 10, 2025", "10 April" and "4/10".
std::vector<CalendarDate> find_dates(std::string_view in);

// Same day; the year only has to agree when both sides state one.
bool same_day(const CalendarDate& a, const CalendarDate& b);

}  // namespace prefgym::text
