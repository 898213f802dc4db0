#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "mdx/errors.hpp"

namespace mdx {

using Date = std::chrono::sys_days;

inline bool is_leap_year(int year) {
  return std::chrono::year{year}.is_leap();
}

inline int days_in_year(int year) { return is_leap_year(year) ? 366 : 365; }

inline int year_of(Date d) {
  return static_cast<int>(std::chrono::year_month_day{d}.year());
}

inline Date first_day_of_year(int year) {
  using namespace std::chrono;
  return sys_days{year_month_day{std::chrono::year{year}, January, day{1}}};
}

/// Strict YYYY-MM-DD parse. Rejects out-of-calendar dates (e.g. Feb 30).
inline Date parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-')
    throw ParseError("bad date '" + std::string(s) + "': expected YYYY-MM-DD");
  auto digits = [&](int from, int to) {
    int v = 0;
    for (int i = from; i < to; ++i) {
      const char c = s[static_cast<std::size_t>(i)];
      if (c < '0' || c > '9')
        throw ParseError("bad date '" + std::string(s) + "': expected YYYY-MM-DD");
      v = v * 10 + (c - '0');
    }
    return v;
  };
  const std::chrono::year_month_day ymd{
      std::chrono::year{digits(0, 4)},
      std::chrono::month{static_cast<unsigned>(digits(5, 7))},
      std::chrono::day{static_cast<unsigned>(digits(8, 10))}};
  if (!ymd.ok())
    throw ParseError("bad date '" + std::string(s) + "': not a calendar day");
  return Date{ymd};
}

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

}  // namespace mdx
