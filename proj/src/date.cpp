#include "loadmix/date.hpp"

#include "loadmix/errors.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace loadmix {

namespace {
constexpr std::array<std::string_view, 7> kWeekdayNames = {"Mon", "Tue", "Wed", "Thu",
                                                            "Fri", "Sat", "Sun"};

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError("malformed date '" + std::string(whole) + "'");
  return v;
}
} // namespace

std::string_view weekday_name(Weekday w) { return kWeekdayNames.at(static_cast<int>(w)); }

Weekday parse_weekday(std::string_view name) {
  for (std::size_t i = 0; i < kWeekdayNames.size(); ++i) {
    const auto ref = kWeekdayNames[i];
    if (name.size() >= 3 && name.size() <= 9) {
      bool match = true;
      for (std::size_t c = 0; c < 3; ++c) {
        const char a = static_cast<char>(std::tolower(static_cast<unsigned char>(name[c])));
        const char b = static_cast<char>(std::tolower(static_cast<unsigned char>(ref[c])));
        if (a != b) match = false;
      }
      if (match) return static_cast<Weekday>(i);
    }
  }
  throw ConfigError("unknown weekday '" + std::string(name) + "'");
}

Date::Date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok())
    throw DataError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) +
                    "-" + std::to_string(day));
  days_ = std::chrono::sys_days{ymd};
}

Date Date::from_days(std::chrono::sys_days d) {
  Date out;
  out.days_ = d;
  return out;
}

Date Date::parse(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
    throw DataError("malformed date '" + std::string(iso) + "' (expected YYYY-MM-DD)");
  const int y = parse_int(iso.substr(0, 4), iso);
  const int m = parse_int(iso.substr(5, 2), iso);
  const int d = parse_int(iso.substr(8, 2), iso);
  if (m < 1 || m > 12 || d < 1 || d > 31)
    throw DataError("malformed date '" + std::string(iso) + "'");
  return Date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

Weekday Date::weekday() const {
  // iso_encoding: Mon = 1 .. Sun = 7
  const std::chrono::weekday w{days_};
  return static_cast<Weekday>(w.iso_encoding() - 1);
}

std::string Date::iso() const {
  const std::chrono::year_month_day ymd{days_};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

} // namespace loadmix
