#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace fomc {

// Calendar date backed by a day count, so ordering and arithmetic are cheap.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  // Strict YYYY-MM-DD; throws ValidationError otherwise.
  static Date parse(std::string_view text);

  std::string iso() const;
  std::chrono::sys_days days() const { return days_; }
  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
  bool is_weekend() const;
  Date next_day() const { return Date{days_ + std::chrono::days{1}}; }

  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

// Closed interval [first, last].
struct DateRange {
  Date first;
  Date last;

  bool contains(const Date& d) const { return first <= d && d <= last; }
  bool well_ordered() const { return first <= last; }
  // "YYYY-MM-DD:YYYY-MM-DD"
  static DateRange parse(std::string_view text);
  std::string str() const { return first.iso() + ":" + last.iso(); }
};

}  // namespace fomc
