#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace survstore {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::year_month_day;

/// "YYYY-MM-DDTHH:MM:SSZ", always UTC.
std::string format_timestamp(Timestamp t);
/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM", "YYYY-MM-DDTHH:MM:SS" with an
/// optional trailing 'Z'. A space may replace the 'T'.
Timestamp parse_timestamp(std::string_view text);

std::string format_date(Date d);
Date parse_date(std::string_view text);

Date date_of(Timestamp t);
Timestamp start_of(Date d);
Timestamp system_now();

}  // namespace survstore
