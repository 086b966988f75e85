#include "survstore/timeutil.hpp"

#include <charconv>
#include <cstdio>

#include "survstore/error.hpp"

namespace survstore {

namespace {

[[noreturn]] void bad_time(std::string_view text) {
  throw Error(ErrorCode::InvalidArgument, "invalid date/time '" + std::string(text) + "'");
}

int read_int(std::string_view text, std::size_t pos, std::size_t width, std::string_view whole) {
  if (pos + width > text.size()) bad_time(whole);
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + width, value);
  if (ec != std::errc() || ptr != first + width) bad_time(whole);
  return value;
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  auto day = std::chrono::floor<std::chrono::days>(t);
  std::chrono::year_month_day ymd{day};
  std::chrono::hh_mm_ss hms{t - day};
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
  return buffer;
}

std::string format_date(Date d) {
  char buffer[16];
  std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buffer;
}

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') bad_time(text);
  Date d{std::chrono::year{read_int(text, 0, 4, text)},
         std::chrono::month{static_cast<unsigned>(read_int(text, 5, 2, text))},
         std::chrono::day{static_cast<unsigned>(read_int(text, 8, 2, text))}};
  if (!d.ok()) bad_time(text);
  return d;
}

Timestamp parse_timestamp(std::string_view text) {
  std::string_view body = text;
  if (!body.empty() && (body.back() == 'Z' || body.back() == 'z')) body.remove_suffix(1);
  Date d = parse_date(body.substr(0, std::min<std::size_t>(body.size(), 10)));
  Timestamp t = start_of(d);
  if (body.size() == 10) return t;
  if (body[10] != 'T' && body[10] != ' ') bad_time(text);
  if (body.size() != 16 && body.size() != 19) bad_time(text);
  if (body[13] != ':') bad_time(text);
  int hours = read_int(body, 11, 2, text);
  int minutes = read_int(body, 14, 2, text);
  int seconds = 0;
  if (body.size() == 19) {
    if (body[16] != ':') bad_time(text);
    seconds = read_int(body, 17, 2, text);
  }
  if (hours > 23 || minutes > 59 || seconds > 59) bad_time(text);
  return t + std::chrono::hours{hours} + std::chrono::minutes{minutes} +
         std::chrono::seconds{seconds};
}

Date date_of(Timestamp t) { return Date{std::chrono::floor<std::chrono::days>(t)}; }

Timestamp start_of(Date d) { return std::chrono::sys_days{d}; }

Timestamp system_now() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

}  // namespace survstore
