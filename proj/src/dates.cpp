#include "fomc/dates.hpp"

#include <charconv>

#include <fmt/format.h>

#include "fomc/error.hpp"

namespace fomc {

namespace {

int parse_field(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError(fmt::format("invalid date '{}'", whole));
  }
  return value;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
  std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                  std::chrono::day{day}};
  if (!ymd.ok()) throw ValidationError(fmt::format("invalid date {}-{}-{}", year, month, day));
  days_ = std::chrono::sys_days{ymd};
}

Date Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw ValidationError(fmt::format("invalid date '{}' (expected YYYY-MM-DD)", text));
  }
  int y = parse_field(text.substr(0, 4), text);
  int m = parse_field(text.substr(5, 2), text);
  int d = parse_field(text.substr(8, 2), text);
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ValidationError(fmt::format("invalid date '{}'", text));
  return Date{std::chrono::sys_days{ymd}};
}

std::string Date::iso() const {
  auto d = ymd();
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

bool Date::is_weekend() const {
  std::chrono::weekday wd{days_};
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

DateRange DateRange::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ValidationError(fmt::format("invalid date range '{}' (expected FIRST:LAST)", text));
  }
  DateRange r{Date::parse(text.substr(0, colon)), Date::parse(text.substr(colon + 1))};
  if (!r.well_ordered()) throw ValidationError(fmt::format("date range '{}' is reversed", text));
  return r;
}

}  // namespace fomc
