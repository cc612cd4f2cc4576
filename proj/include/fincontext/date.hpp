#pragma once

#include <algorithm>
#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "fincontext/errors.hpp"

namespace fincontext {

// A Gregorian calendar date. Stored as days since the Unix epoch so that
// comparisons and day arithmetic are trivial.
class Date {
 public:
  constexpr Date() = default;

  static std::optional<Date> from_ymd(int year, unsigned month, unsigned day) {
    std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                    std::chrono::day{day}};
    if (!ymd.ok()) return std::nullopt;
    return Date(std::chrono::sys_days{ymd});
  }

  // Throws DateError when the triple is not a valid calendar date.
  static Date ymd(int year, unsigned month, unsigned day) {
    auto d = from_ymd(year, month, day);
    if (!d) {
      throw DateError(DateError::Reason::calendar,
                      "invalid calendar date " + std::to_string(day) + "/" +
                          std::to_string(month) + "/" + std::to_string(year));
    }
    return *d;
  }

  static constexpr Date from_days(std::chrono::sys_days days) { return Date(days); }

  constexpr std::chrono::sys_days days() const { return days_; }
  std::int64_t serial() const { return days_.time_since_epoch().count(); }

  int year() const { return static_cast<int>(ymd().year()); }
  unsigned month() const { return static_cast<unsigned>(ymd().month()); }
  unsigned day() const { return static_cast<unsigned>(ymd().day()); }

  Date plus_days(std::int64_t n) const { return Date(days_ + std::chrono::days{n}); }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;
  friend constexpr bool operator==(const Date&, const Date&) = default;

 private:
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}

  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }

  std::chrono::sys_days days_{};
};

// Closed interval of calendar days.
struct DateRange {
  Date start;
  Date end;

  bool contains(Date d) const { return start <= d && d <= end; }
  friend bool operator==(const DateRange&, const DateRange&) = default;
};

inline std::int64_t days_between(Date a, Date b) { return b.serial() - a.serial(); }

// Distance between two closed intervals in days: 0 when they overlap,
// otherwise the distance between the nearest boundaries.
inline std::int64_t interval_gap(const DateRange& a, const DateRange& b) {
  if (a.end < b.start) return days_between(a.end, b.start);
  if (b.end < a.start) return days_between(b.end, a.start);
  return 0;
}

inline Date last_day_of_month(int year, unsigned month) {
  std::chrono::year_month_day_last last{std::chrono::year{year},
                                        std::chrono::month_day_last{std::chrono::month{month}}};
  return Date::from_days(std::chrono::sys_days{last});
}

// Shifts by whole calendar months, clamping the day to the target month's
// length (31 Aug - 6 months = 29 Feb in a leap year).
inline Date add_months(Date d, int months) {
  int total = d.year() * 12 + static_cast<int>(d.month()) - 1 + months;
  int year = total >= 0 ? total / 12 : (total - 11) / 12;
  unsigned month = static_cast<unsigned>(total - year * 12 + 1);
  unsigned day = std::min(d.day(), last_day_of_month(year, month).day());
  return Date::ymd(year, month, day);
}

// d/m/yyyy without zero padding: 7/1/2024.
inline std::string format_date(Date d) {
  return std::to_string(d.day()) + "/" + std::to_string(d.month()) + "/" +
         std::to_string(d.year());
}

inline std::string format_range(const DateRange& r) {
  return format_date(r.start) + " - " + format_date(r.end);
}

namespace detail {

inline bool parse_digits(std::string_view s, std::size_t min_len, std::size_t max_len,
                         unsigned& out) {
  if (s.size() < min_len || s.size() > max_len) return false;
  unsigned v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

// Strict day/month/year. Day and month take one or two digits, the year
// exactly four. 7/1/2024 is the 7th of January.
inline Date parse_date_token(std::string_view text) {
  auto fail = [&](const std::string& why) {
    return DateError(DateError::Reason::format,
                     "malformed date \"" + std::string(text) + "\": " + why);
  };
  auto p1 = text.find('/');
  if (p1 == std::string_view::npos) throw fail("expected d/m/yyyy");
  auto p2 = text.find('/', p1 + 1);
  if (p2 == std::string_view::npos || text.find('/', p2 + 1) != std::string_view::npos) {
    throw fail("expected d/m/yyyy");
  }
  unsigned day = 0, month = 0, year = 0;
  if (!detail::parse_digits(text.substr(0, p1), 1, 2, day)) throw fail("bad day field");
  if (!detail::parse_digits(text.substr(p1 + 1, p2 - p1 - 1), 1, 2, month)) {
    throw fail("bad month field");
  }
  if (!detail::parse_digits(text.substr(p2 + 1), 4, 4, year)) throw fail("bad year field");
  if (month < 1 || month > 12) {
    throw DateError(DateError::Reason::calendar,
                    "month out of range in \"" + std::string(text) + "\"");
  }
  auto d = Date::from_ymd(static_cast<int>(year), month, day);
  if (!d) {
    throw DateError(DateError::Reason::calendar,
                    "day out of range in \"" + std::string(text) + "\"");
  }
  return *d;
}

}  // namespace fincontext
