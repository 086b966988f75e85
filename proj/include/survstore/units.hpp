#pragma once

#include <numbers>
#include <string>
#include <string_view>

namespace survstore {

/// Plane angle held in radians. Non-finite values are rejected on
/// construction, so every Angle in the system is usable arithmetic.
class Angle {
 public:
  constexpr Angle() = default;

  static Angle from_radians(double radians);
  static Angle from_degrees(double degrees);

  double radians() const noexcept { return radians_; }
  double degrees() const noexcept { return radians_ * 180.0 / std::numbers::pi; }

  Angle operator+(Angle other) const { return from_radians(radians_ + other.radians_); }
  Angle operator-(Angle other) const { return from_radians(radians_ - other.radians_); }
  Angle operator-() const { return from_radians(-radians_); }

  friend bool operator==(Angle, Angle) = default;

 private:
  explicit constexpr Angle(double radians) : radians_(radians) {}
  double radians_ = 0.0;
};

class Bearing;
Bearing normalize_bearing(Angle angle);

/// Whole-circle bearing, clockwise from grid north, always in [0, 2*pi).
class Bearing {
 public:
  constexpr Bearing() = default;
  explicit Bearing(Angle angle);

  Angle angle() const noexcept { return angle_; }
  double radians() const noexcept { return angle_.radians(); }
  double degrees() const noexcept { return angle_.degrees(); }

  friend bool operator==(Bearing, Bearing) = default;
  friend Bearing normalize_bearing(Angle angle);

 private:
  Angle angle_;
};

enum class LengthUnit { Metre, InternationalFoot };
enum class AreaUnit { SquareMetre, Hectare, Acre, SquareFoot };

/// Metres per unit / square metres per unit. Exact by definition.
double metres_per(LengthUnit unit) noexcept;
double square_metres_per(AreaUnit unit) noexcept;

std::string_view unit_symbol(LengthUnit unit) noexcept;
std::string_view unit_symbol(AreaUnit unit) noexcept;
LengthUnit parse_length_unit(std::string_view text);
AreaUnit parse_area_unit(std::string_view text);

/// Accepts decimal degrees ("12.5", "-3") or DMS with either the symbol set
/// ° ' " or the ASCII markers d m s ("30°15'36\"", "30d15m36s", "30°15'").
/// Only the last component may carry a fraction; minutes and seconds must be
/// below 60.
Angle parse_angle(std::string_view text);

/// Renders D°MM'SS" with `seconds_decimals` fractional second digits.
std::string format_dms(Angle angle, int seconds_decimals = 0);

double convert_area(double value, AreaUnit from, AreaUnit to);
double convert_length(double value, LengthUnit from, LengthUnit to);

}  // namespace survstore
