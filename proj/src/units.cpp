#include "survstore/units.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "survstore/error.hpp"

namespace survstore {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Part { Degrees, Minutes, Seconds };

// Consumes one DMS marker at `pos`, returning the part it denotes.
bool take_marker(std::string_view text, std::size_t& pos, Part& part) {
  auto starts = [&](std::string_view token) { return text.substr(pos, token.size()) == token; };
  if (starts("\xC2\xB0")) {  // °
    pos += 2;
    part = Part::Degrees;
  } else if (starts("\xE2\x80\xB2")) {  // ′
    pos += 3;
    part = Part::Minutes;
  } else if (starts("\xE2\x80\xB3")) {  // ″
    pos += 3;
    part = Part::Seconds;
  } else if (starts("''")) {
    pos += 2;
    part = Part::Seconds;
  } else if (pos < text.size()) {
    switch (text[pos]) {
      case 'd': case 'D': part = Part::Degrees; break;
      case '\'': case 'm': case 'M': part = Part::Minutes; break;
      case '"': case 's': case 'S': part = Part::Seconds; break;
      default: return false;
    }
    ++pos;
  } else {
    return false;
  }
  return true;
}

[[noreturn]] void malformed(std::string_view text, std::string_view why) {
  throw Error(ErrorCode::MalformedAngle,
              "malformed angle '" + std::string(text) + "': " + std::string(why));
}

}  // namespace

Angle Angle::from_radians(double radians) {
  if (!std::isfinite(radians)) throw Error(ErrorCode::InvalidArgument, "angle must be finite");
  return Angle(radians);
}

Angle Angle::from_degrees(double degrees) {
  if (!std::isfinite(degrees)) throw Error(ErrorCode::InvalidArgument, "angle must be finite");
  return Angle(degrees * std::numbers::pi / 180.0);
}

Bearing::Bearing(Angle angle) : angle_(normalize_bearing(angle).angle_) {}

double metres_per(LengthUnit unit) noexcept {
  switch (unit) {
    case LengthUnit::Metre: return 1.0;
    case LengthUnit::InternationalFoot: return 0.3048;
  }
  return 1.0;
}

double square_metres_per(AreaUnit unit) noexcept {
  switch (unit) {
    case AreaUnit::SquareMetre: return 1.0;
    case AreaUnit::Hectare: return 10000.0;
    case AreaUnit::Acre: return 4046.8564224;
    case AreaUnit::SquareFoot: return 0.09290304;
  }
  return 1.0;
}

std::string_view unit_symbol(LengthUnit unit) noexcept {
  return unit == LengthUnit::Metre ? "m" : "ft";
}

std::string_view unit_symbol(AreaUnit unit) noexcept {
  switch (unit) {
    case AreaUnit::SquareMetre: return "m2";
    case AreaUnit::Hectare: return "ha";
    case AreaUnit::Acre: return "acre";
    case AreaUnit::SquareFoot: return "ft2";
  }
  return "m2";
}

LengthUnit parse_length_unit(std::string_view text) {
  if (text == "m" || text == "metre" || text == "meter") return LengthUnit::Metre;
  if (text == "ft" || text == "foot" || text == "feet") return LengthUnit::InternationalFoot;
  throw Error(ErrorCode::InvalidArgument, "unknown length unit '" + std::string(text) + "'");
}

AreaUnit parse_area_unit(std::string_view text) {
  if (text == "m2" || text == "sqm") return AreaUnit::SquareMetre;
  if (text == "ha" || text == "hectare") return AreaUnit::Hectare;
  if (text == "acre" || text == "ac") return AreaUnit::Acre;
  if (text == "ft2" || text == "sqft") return AreaUnit::SquareFoot;
  throw Error(ErrorCode::InvalidArgument, "unknown area unit '" + std::string(text) + "'");
}

Angle parse_angle(std::string_view text) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };

  skip_space();
  bool negative = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
    negative = text[pos] == '-';
    ++pos;
  }

  double parts[3] = {0.0, 0.0, 0.0};
  bool fractional[3] = {false, false, false};
  int next_part = 0;
  bool any_marker = false;
  int numbers = 0;

  while (true) {
    skip_space();
    if (pos >= text.size()) break;

    std::size_t start = pos;
    bool has_dot = false;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) {
      if (text[pos] == '.') {
        if (has_dot) malformed(text, "repeated decimal point");
        has_dot = true;
      }
      ++pos;
    }
    if (pos == start) malformed(text, "expected a number");
    std::string_view digits = text.substr(start, pos - start);
    if (digits == ".") malformed(text, "expected a number");

    double value = 0.0;
    // from_chars rejects a leading '.', so prefix a zero.
    std::string buffer = digits.front() == '.' ? "0" + std::string(digits) : std::string(digits);
    auto [ptr, ec] = std::from_chars(buffer.data(), buffer.data() + buffer.size(), value);
    if (ec != std::errc() || ptr != buffer.data() + buffer.size()) malformed(text, "bad number");
    ++numbers;

    skip_space();
    Part part;
    if (!take_marker(text, pos, part)) {
      if (pos < text.size()) malformed(text, "unexpected character");
      if (any_marker) malformed(text, "missing unit marker after last component");
      parts[0] = value;
      fractional[0] = has_dot;
      next_part = 1;
      break;
    }
    any_marker = true;
    int index = static_cast<int>(part);
    if (index < next_part) malformed(text, "components out of order");
    if (index != next_part && next_part == 0) malformed(text, "degrees must come first");
    parts[index] = value;
    fractional[index] = has_dot;
    next_part = index + 1;
  }

  if (numbers == 0) malformed(text, "empty");

  // Only the final component may be fractional.
  for (int i = 0; i + 1 < next_part; ++i) {
    if (fractional[i]) malformed(text, "only the last component may have a fraction");
  }
  if (parts[1] >= 60.0) {
    throw Error(ErrorCode::OutOfRange, "minutes must be below 60 in '" + std::string(text) + "'");
  }
  if (parts[2] >= 60.0) {
    throw Error(ErrorCode::OutOfRange, "seconds must be below 60 in '" + std::string(text) + "'");
  }

  double degrees = parts[0] + parts[1] / 60.0 + parts[2] / 3600.0;
  return Angle::from_degrees(negative ? -degrees : degrees);
}

std::string format_dms(Angle angle, int seconds_decimals) {
  if (seconds_decimals < 0) seconds_decimals = 0;
  if (seconds_decimals > 9) seconds_decimals = 9;

  long long scale = 1;
  for (int i = 0; i < seconds_decimals; ++i) scale *= 10;

  double degrees = angle.degrees();
  long long units = std::llround(std::fabs(degrees) * 3600.0 * static_cast<double>(scale));
  const long long per_degree = 3600 * scale;
  const long long per_minute = 60 * scale;

  long long whole_degrees = units / per_degree;
  long long remainder = units % per_degree;
  long long minutes = remainder / per_minute;
  long long second_units = remainder % per_minute;

  char buffer[64];
  const char* sign = (degrees < 0 && units != 0) ? "-" : "";
  if (seconds_decimals == 0) {
    std::snprintf(buffer, sizeof buffer, "%s%lld\xC2\xB0%02lld'%02lld\"", sign, whole_degrees,
                  minutes, second_units);
  } else {
    std::snprintf(buffer, sizeof buffer, "%s%lld\xC2\xB0%02lld'%02lld.%0*lld\"", sign,
                  whole_degrees, minutes, second_units / scale, seconds_decimals,
                  second_units % scale);
  }
  return buffer;
}

Bearing normalize_bearing(Angle angle) {
  double r = std::fmod(angle.radians(), kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  Bearing bearing;
  bearing.angle_ = Angle::from_radians(r);
  return bearing;
}

double convert_area(double value, AreaUnit from, AreaUnit to) {
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "area must be finite");
  if (value < 0.0) throw Error(ErrorCode::NegativeArea, "area must not be negative");
  if (from == to) return value;
  return value * square_metres_per(from) / square_metres_per(to);
}

double convert_length(double value, LengthUnit from, LengthUnit to) {
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "length must be finite");
  if (from == to) return value;
  return value * metres_per(from) / metres_per(to);
}

}  // namespace survstore
