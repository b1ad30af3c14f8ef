#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace sunncast {

/// Calendar day, no time-of-day. All station data is daily.
using Date = std::chrono::sys_days;

/// Parses "YYYY-MM-DD". Returns nullopt on malformed text or an
/// impossible calendar day (2021-02-29 and the like).
std::optional<Date> parse_date(std::string_view text);

std::string format_date(Date d);

/// 1-based day of year, 1..365 (366 in leap years).
int day_of_year(Date d);

int year_of(Date d);

/// First date with the given day-of-year on or after `from`. A
/// day-of-year of 366 only exists in leap years and is skipped in
/// others.
Date next_day_of_year(Date from, int doy);

}  // namespace sunncast
