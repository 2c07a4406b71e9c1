#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace loadmix {

enum class Weekday { mon = 0, tue, wed, thu, fri, sat, sun };

std::string_view weekday_name(Weekday w);
Weekday parse_weekday(std::string_view name);

/// Calendar date (proleptic Gregorian), ordered and hashable by day count.
class Date {
public:
  Date() = default;
  Date(int year, unsigned month, unsigned day);

  static Date from_days(std::chrono::sys_days d);
  /// Parses `YYYY-MM-DD`; throws DataError on malformed or impossible dates.
  static Date parse(std::string_view iso);

  std::chrono::sys_days days() const { return days_; }
  Weekday weekday() const;
  std::string iso() const;

  Date next() const { return from_days(days_ + std::chrono::days{1}); }
  Date prev() const { return from_days(days_ - std::chrono::days{1}); }

  auto operator<=>(const Date&) const = default;

private:
  std::chrono::sys_days days_{};
};

} // namespace loadmix
