#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace survstore {

/// ASCII case folding. Non-ASCII bytes pass through unchanged, so names
/// compare case-insensitively only in their ASCII letters.
std::string fold_case(std::string_view text);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);
bool istarts_with(std::string_view text, std::string_view prefix);

std::string trim(std::string_view text);

/// Fixed-point rendering, e.g. format_fixed(1.5, 3) == "1.500".
std::string format_fixed(double value, int decimals);

namespace csv {

using Row = std::vector<std::string>;

/// RFC 4180 quoting: fields containing ',', '"', CR or LF are quoted and
/// embedded quotes doubled.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

/// Parses RFC 4180 text (LF or CRLF line ends). A trailing newline does not
/// produce an empty row. Throws MalformedCsv on an unterminated quote.
std::vector<Row> parse(std::string_view text);

}  // namespace csv

}  // namespace survstore
