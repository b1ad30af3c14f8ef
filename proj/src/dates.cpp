#include "sunncast/dates.hpp"

#include <charconv>
#include <cstdio>

namespace sunncast {

namespace {

bool parse_int(std::string_view text, int& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

int day_of_year(Date d) {
  const std::chrono::year_month_day ymd{d};
  const Date jan1{std::chrono::year_month_day{ymd.year(), std::chrono::January, std::chrono::day{1}}};
  return int((d - jan1).count()) + 1;
}

int year_of(Date d) { return int(std::chrono::year_month_day{d}.year()); }

Date next_day_of_year(Date from, int doy) {
  Date d = from;
  // At most two year boundaries need crossing (doy 366 in a non-leap year).
  for (int guard = 0; guard < 3 * 366; ++guard) {
    if (day_of_year(d) == doy) return d;
    d += std::chrono::days{1};
  }
  return from;  // unreachable for valid doy
}

}  // namespace sunncast
