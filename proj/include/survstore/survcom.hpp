#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survstore/units.hpp"

namespace survstore {

/// Plane grid position in metres. Easting/northing are always finite; a
/// present elevation is finite.
struct GridPoint {
  double easting = 0.0;
  double northing = 0.0;
  std::optional<double> elevation;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

/// Throws InvalidCoordinate if any supplied component is non-finite.
GridPoint make_point(double easting, double northing, std::optional<double> elevation = {});

struct Join {
  Bearing bearing;
  double distance = 0.0;
};

/// Bearing and horizontal distance from `from` to `to`.
Join join(const GridPoint& from, const GridPoint& to);

/// Absolute shoelace area in square metres, closing the ring implicitly.
/// Coordinates are shifted to the first vertex first so national-grid
/// magnitudes do not swamp small parcels. Self-intersection is not detected.
double polygon_area(std::span<const GridPoint> vertices);

// ---------------------------------------------------------------------------
// Detailing by rays

struct StationSetup {
  GridPoint station;  // elevation required
  double instrument_height = 0.0;
  Bearing reference_bearing;
  Angle hcr_to_reference;
};

struct RayObservation {
  std::string point_name;
  Angle hcr;
  Angle vcr_zenith;  // 0 = up, 90 deg = horizontal
  double slope_distance = 0.0;
  double target_height = 0.0;
};

struct DetailedPoint {
  std::string point_name;
  GridPoint position;
  Bearing bearing;
  double horizontal_distance = 0.0;
};

std::vector<DetailedPoint> detail_points(const StationSetup& setup,
                                         std::span<const RayObservation> observations);

// ---------------------------------------------------------------------------
// Horizontal circular curve

struct CurveInput {
  Angle deflection;
  std::optional<double> radius;
  std::optional<double> curve_length;
  double ip_chainage = 0.0;
  double standard_chord = 20.0;
  /// When non-empty, replaces the generated even-chainage chords. Must sum to
  /// the curve length within 1 mm.
  std::vector<double> chord_override;
};

struct CurvePeg {
  std::string name;
  double chainage = 0.0;
  double chord = 0.0;  // from the previous peg
  Angle tangential;    // chord / 2R
  Angle cumulative;
};

struct CurveSolution {
  Angle deflection;
  double radius = 0.0;
  double curve_length = 0.0;
  double tangent_length = 0.0;
  double external_distance = 0.0;
  double mid_ordinate = 0.0;
  double long_chord = 0.0;
  double chainage_t1 = 0.0;
  double chainage_t2 = 0.0;
  double initial_subchord = 0.0;
  double final_subchord = 0.0;
  int full_chords = 0;
  double standard_chord = 0.0;
  std::vector<CurvePeg> pegs;  // T1, P1..Pn, T2
};

CurveSolution curve_solve(const CurveInput& input);

// ---------------------------------------------------------------------------
// Levelling

enum class LevelMethod { RiseFall, HeightOfCollimation };

std::string_view method_name(LevelMethod method);
LevelMethod parse_level_method(std::string_view text);

/// One line of a field book. Valid shapes: BS only (first row), IS only,
/// FS only, or FS+BS (change point). A book of more than one row ends on an
/// FS-only row.
struct LevelReading {
  std::string point;
  std::optional<double> back_sight;
  std::optional<double> inter_sight;
  std::optional<double> fore_sight;
  std::string remarks;
};

struct LevelRow {
  std::string point;
  std::optional<double> back_sight;
  std::optional<double> inter_sight;
  std::optional<double> fore_sight;
  std::optional<double> rise;
  std::optional<double> fall;
  std::optional<double> collimation;  // HPC, height-of-collimation books only
  double reduced_level = 0.0;
  std::string remarks;
};

struct LevelBook {
  LevelMethod method = LevelMethod::RiseFall;
  std::vector<LevelRow> rows;
  double sum_back_sight = 0.0;
  double sum_fore_sight = 0.0;
  double sum_rise = 0.0;
  double sum_fall = 0.0;
  std::optional<double> closing_rl;
  std::optional<double> misclose;
  bool checks_pass = false;
};

LevelBook reduce_levels(LevelMethod method, std::span<const LevelReading> readings,
                        double start_rl, std::optional<double> closing_rl = {});

/// Re-derives every arithmetic relation of a reduced book from its own
/// columns: per-row rise/fall or collimation, each reduced level, the column
/// sums, and the closing identity sum(BS) - sum(FS) = last RL - first RL
/// (and = sum(rise) - sum(fall) for rise-and-fall). Returns the failed checks;
/// empty means the book is arithmetically sound.
std::vector<std::string> verify_level_book(const LevelBook& book);

}  // namespace survstore
