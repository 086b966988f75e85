#include "survstore/survcom.hpp"

#include <cmath>
#include <numbers>

#include "survstore/error.hpp"

namespace survstore {

namespace {

constexpr double kChainageEpsilon = 1e-9;
constexpr double kCurveTolerance = 0.001;  // 1 mm
constexpr long long kMaxPegs = 100000;

bool finite(double v) { return std::isfinite(v); }

void require(bool condition, const std::string& message, nlohmann::json details = nullptr) {
  if (!condition) throw Error(ErrorCode::InvalidArgument, message, std::move(details));
}

}  // namespace

GridPoint make_point(double easting, double northing, std::optional<double> elevation) {
  if (!finite(easting) || !finite(northing) || (elevation && !finite(*elevation))) {
    throw Error(ErrorCode::InvalidCoordinate, "coordinates must be finite numbers");
  }
  return GridPoint{easting, northing, elevation};
}

Join join(const GridPoint& from, const GridPoint& to) {
  double de = to.easting - from.easting;
  double dn = to.northing - from.northing;
  double distance = std::hypot(de, dn);
  if (!finite(distance)) throw Error(ErrorCode::InvalidCoordinate, "coordinates must be finite");
  if (distance == 0.0) {
    throw Error(ErrorCode::CoincidentPoints, "points coincide; bearing is undefined");
  }
  return Join{normalize_bearing(Angle::from_radians(std::atan2(de, dn))), distance};
}

double polygon_area(std::span<const GridPoint> vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) {
    throw Error(ErrorCode::TooFewVertices, "a polygon needs at least 3 vertices",
                {{"vertices", n}});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const GridPoint& a = vertices[i];
    const GridPoint& b = vertices[(i + 1) % n];
    if (!finite(a.easting) || !finite(a.northing)) {
      throw Error(ErrorCode::InvalidCoordinate, "vertex coordinates must be finite",
                  {{"index", i}});
    }
    if (a.easting == b.easting && a.northing == b.northing) {
      throw Error(ErrorCode::DegenerateEdge, "consecutive vertices coincide",
                  {{"index", i}, {"next", (i + 1) % n}});
    }
  }

  const double e0 = vertices[0].easting;
  const double n0 = vertices[0].northing;
  double twice_area = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const GridPoint& a = vertices[i];
    const GridPoint& b = vertices[(i + 1) % n];
    twice_area += (a.easting - e0) * (b.northing - n0) - (b.easting - e0) * (a.northing - n0);
  }
  return std::fabs(twice_area) / 2.0;
}

std::vector<DetailedPoint> detail_points(const StationSetup& setup,
                                         std::span<const RayObservation> observations) {
  if (observations.empty()) {
    throw Error(ErrorCode::EmptyObservations, "at least one ray observation is required");
  }
  const GridPoint& station = setup.station;
  make_point(station.easting, station.northing, station.elevation);
  require(station.elevation.has_value(), "station elevation is required for detailing");
  require(finite(setup.instrument_height) && setup.instrument_height >= 0.0,
          "instrument height must be a non-negative number");

  std::vector<DetailedPoint> points;
  points.reserve(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const RayObservation& ray = observations[i];
    nlohmann::json where = {{"index", i}, {"point", ray.point_name}};
    require(finite(ray.slope_distance) && ray.slope_distance > 0.0,
            "slope distance must be positive", where);
    require(finite(ray.target_height) && ray.target_height >= 0.0,
            "target height must be a non-negative number", where);
    const double zenith = ray.vcr_zenith.radians();
    require(zenith > 0.0 && zenith < std::numbers::pi,
            "zenith angle must lie strictly between 0 and 180 degrees", where);

    Bearing bearing =
        normalize_bearing(setup.reference_bearing.angle() + (ray.hcr - setup.hcr_to_reference));
    const double horizontal = ray.slope_distance * std::sin(zenith);
    const double vertical = ray.slope_distance * std::cos(zenith);

    DetailedPoint point;
    point.point_name = ray.point_name;
    point.bearing = bearing;
    point.horizontal_distance = horizontal;
    point.position.easting = station.easting + horizontal * std::sin(bearing.radians());
    point.position.northing = station.northing + horizontal * std::cos(bearing.radians());
    point.position.elevation =
        *station.elevation + setup.instrument_height + vertical - ray.target_height;
    points.push_back(std::move(point));
  }
  return points;
}

CurveSolution curve_solve(const CurveInput& input) {
  const double delta = input.deflection.radians();
  if (!(delta > 0.0 && delta < std::numbers::pi)) {
    throw Error(ErrorCode::DeflectionOutOfRange,
                "deflection angle must lie strictly between 0 and 180 degrees",
                {{"deflection_deg", input.deflection.degrees()}});
  }
  require(finite(input.ip_chainage), "intersection point chainage must be finite");
  require(finite(input.standard_chord) && input.standard_chord > 0.0,
          "standard chord must be positive");

  double radius = 0.0;
  if (input.radius) {
    require(finite(*input.radius) && *input.radius > 0.0, "radius must be positive");
    radius = *input.radius;
    if (input.curve_length) {
      require(finite(*input.curve_length) && *input.curve_length > 0.0,
              "curve length must be positive");
      double implied = radius * delta;
      if (std::fabs(implied - *input.curve_length) > kCurveTolerance) {
        throw Error(ErrorCode::InconsistentRadiusLength,
                    "curve length disagrees with radius x deflection by more than 1 mm",
                    {{"radius", radius},
                     {"curve_length", *input.curve_length},
                     {"implied_length", implied}});
      }
    }
  } else if (input.curve_length) {
    require(finite(*input.curve_length) && *input.curve_length > 0.0,
            "curve length must be positive");
    radius = *input.curve_length / delta;
  } else {
    throw Error(ErrorCode::InvalidArgument, "either radius or curve length is required");
  }

  CurveSolution s;
  s.deflection = input.deflection;
  s.radius = radius;
  s.curve_length = radius * delta;
  s.tangent_length = radius * std::tan(delta / 2.0);
  s.external_distance = radius * (1.0 / std::cos(delta / 2.0) - 1.0);
  s.mid_ordinate = radius * (1.0 - std::cos(delta / 2.0));
  s.long_chord = 2.0 * radius * std::sin(delta / 2.0);
  s.chainage_t1 = input.ip_chainage - s.tangent_length;
  s.chainage_t2 = s.chainage_t1 + s.curve_length;
  s.standard_chord = input.standard_chord;

  std::vector<double> chords;
  long long first_multiple = 0;  // pegs sit on exact multiples of c when set
  bool even_pegs = false;
  if (!input.chord_override.empty()) {
    double total = 0.0;
    for (double c : input.chord_override) {
      require(finite(c) && c > 0.0, "every chord must be positive");
      total += c;
    }
    if (std::fabs(total - s.curve_length) > kCurveTolerance) {
      throw Error(ErrorCode::InvalidArgument, "chords must sum to the curve length within 1 mm",
                  {{"chord_sum", total}, {"curve_length", s.curve_length}});
    }
    chords = input.chord_override;
    s.initial_subchord = chords.front();
    s.final_subchord = chords.size() > 1 ? chords.back() : 0.0;
    s.full_chords = chords.size() > 2 ? static_cast<int>(chords.size() - 2) : 0;
  } else {
    const double c = input.standard_chord;
    // First multiple of c strictly after T1, last strictly before T2.
    long long first = static_cast<long long>(std::floor(s.chainage_t1 / c)) + 1;
    if (first * c - s.chainage_t1 < kChainageEpsilon) ++first;
    long long last = static_cast<long long>(std::ceil(s.chainage_t2 / c)) - 1;
    if (s.chainage_t2 - last * c < kChainageEpsilon) --last;
    require(last - first < kMaxPegs, "standard chord too short: too many pegs");

    if (first > last) {
      chords.push_back(s.curve_length);
      s.initial_subchord = s.curve_length;
      s.final_subchord = 0.0;
      s.full_chords = 0;
    } else {
      s.initial_subchord = first * c - s.chainage_t1;
      s.final_subchord = s.chainage_t2 - last * c;
      s.full_chords = static_cast<int>(last - first);
      chords.push_back(s.initial_subchord);
      for (long long k = first; k < last; ++k) chords.push_back(c);
      chords.push_back(s.final_subchord);
      first_multiple = first;
      even_pegs = true;
    }
  }

  s.pegs.reserve(chords.size() + 1);
  s.pegs.push_back(CurvePeg{"T1", s.chainage_t1, 0.0, Angle{}, Angle{}});
  double chainage = s.chainage_t1;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < chords.size(); ++i) {
    const bool last = i + 1 == chords.size();
    const double tangential = chords[i] / (2.0 * radius);
    cumulative += tangential;
    chainage += chords[i];
    CurvePeg peg;
    peg.name = last ? "T2" : "P" + std::to_string(i + 1);
    if (last) {
      peg.chainage = s.chainage_t2;
    } else if (even_pegs) {
      peg.chainage = static_cast<double>(first_multiple + static_cast<long long>(i)) * input.standard_chord;
    } else {
      peg.chainage = chainage;
    }
    peg.chord = chords[i];
    peg.tangential = Angle::from_radians(tangential);
    peg.cumulative = Angle::from_radians(cumulative);
    s.pegs.push_back(std::move(peg));
  }
  return s;
}

// ---------------------------------------------------------------------------

std::string_view method_name(LevelMethod method) {
  return method == LevelMethod::RiseFall ? "rise_fall" : "height_of_collimation";
}

LevelMethod parse_level_method(std::string_view text) {
  if (text == "rise_fall" || text == "rf" || text == "rise-fall") return LevelMethod::RiseFall;
  if (text == "height_of_collimation" || text == "hpc" || text == "hoc" ||
      text == "height-of-collimation") {
    return LevelMethod::HeightOfCollimation;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown levelling method '" + std::string(text) + "'");
}

namespace {

enum class RowShape { BackSight, InterSight, ForeSight, ChangePoint };

template <typename Row>
std::optional<std::string> shape_problem(const Row& row, std::size_t index, std::size_t count,
                                         RowShape& shape) {
  for (const auto& v : {row.back_sight, row.inter_sight, row.fore_sight}) {
    if (v && !finite(*v)) return "staff readings must be finite";
  }
  const bool bs = row.back_sight.has_value();
  const bool is = row.inter_sight.has_value();
  const bool fs = row.fore_sight.has_value();
  if (index == 0) {
    if (!bs) return "first row must carry a back-sight";
    if (is || fs) return "first row must carry only a back-sight";
    shape = RowShape::BackSight;
    return std::nullopt;
  }
  if (bs && fs && !is) {
    if (index + 1 == count) return "book must not end on a change point";
    shape = RowShape::ChangePoint;
  } else if (is && !bs && !fs) {
    if (index + 1 == count) return "book must end on a fore-sight";
    shape = RowShape::InterSight;
  } else if (fs && !bs && !is) {
    shape = RowShape::ForeSight;
  } else if (bs && !is && !fs) {
    return "back-sight without a preceding fore-sight";
  } else {
    return "row must hold exactly one of BS, IS, FS, or FS+BS";
  }
  return std::nullopt;
}

double sighted(const LevelRow& row) {
  return row.inter_sight ? *row.inter_sight : *row.fore_sight;
}

bool close(double a, double b) {
  return std::fabs(a - b) <= 1e-9 + 1e-12 * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

LevelBook reduce_levels(LevelMethod method, std::span<const LevelReading> readings,
                        double start_rl, std::optional<double> closing_rl) {
  if (readings.empty() || !readings.front().back_sight) {
    throw Error(ErrorCode::NoBackSightFirst, "the first row must be a back-sight on a known level");
  }
  require(finite(start_rl), "starting reduced level must be finite");
  if (closing_rl) require(finite(*closing_rl), "closing reduced level must be finite");

  for (std::size_t i = 0; i < readings.size(); ++i) {
    RowShape shape;
    if (auto problem = shape_problem(readings[i], i, readings.size(), shape)) {
      throw Error(ErrorCode::MalformedRow, *problem,
                  {{"row", i}, {"point", readings[i].point}});
    }
  }

  LevelBook book;
  book.method = method;
  book.closing_rl = closing_rl;
  book.rows.reserve(readings.size());

  double previous = *readings.front().back_sight;  // last reading on the current setup
  double collimation = start_rl + previous;
  double level = start_rl;

  for (std::size_t i = 0; i < readings.size(); ++i) {
    const LevelReading& in = readings[i];
    LevelRow row;
    row.point = in.point;
    row.back_sight = in.back_sight;
    row.inter_sight = in.inter_sight;
    row.fore_sight = in.fore_sight;
    row.remarks = in.remarks;

    if (i == 0) {
      row.reduced_level = start_rl;
      if (method == LevelMethod::HeightOfCollimation) row.collimation = collimation;
    } else {
      const double reading = in.inter_sight ? *in.inter_sight : *in.fore_sight;
      if (method == LevelMethod::RiseFall) {
        const double diff = previous - reading;
        if (diff >= 0.0) {
          row.rise = diff;
        } else {
          row.fall = -diff;
        }
        level += diff;
        row.reduced_level = level;
        previous = in.back_sight ? *in.back_sight : reading;
      } else {
        row.reduced_level = collimation - reading;
        if (in.back_sight) {
          collimation = row.reduced_level + *in.back_sight;
          row.collimation = collimation;
        }
      }
    }

    if (row.back_sight) book.sum_back_sight += *row.back_sight;
    if (row.fore_sight) book.sum_fore_sight += *row.fore_sight;
    if (row.rise) book.sum_rise += *row.rise;
    if (row.fall) book.sum_fall += *row.fall;
    book.rows.push_back(std::move(row));
  }

  if (closing_rl) book.misclose = book.rows.back().reduced_level - *closing_rl;
  book.checks_pass = verify_level_book(book).empty();
  return book;
}

std::vector<std::string> verify_level_book(const LevelBook& book) {
  std::vector<std::string> failures;
  if (book.rows.empty()) {
    failures.emplace_back("book has no rows");
    return failures;
  }
  auto fail = [&](std::size_t row, const std::string& what) {
    failures.push_back("row " + std::to_string(row) + ": " + what);
  };

  double sum_bs = 0.0, sum_fs = 0.0, sum_rise = 0.0, sum_fall = 0.0;
  double previous = 0.0;
  double collimation = 0.0;
  bool shapes_ok = true;

  for (std::size_t i = 0; i < book.rows.size(); ++i) {
    const LevelRow& row = book.rows[i];
    RowShape shape;
    if (auto problem = shape_problem(row, i, book.rows.size(), shape)) {
      fail(i, *problem);
      shapes_ok = false;
      break;
    }
    if (row.back_sight) sum_bs += *row.back_sight;
    if (row.fore_sight) sum_fs += *row.fore_sight;
    if (row.rise) sum_rise += *row.rise;
    if (row.fall) sum_fall += *row.fall;

    if (book.method == LevelMethod::RiseFall) {
      if (i == 0) {
        previous = *row.back_sight;
        continue;
      }
      const double reading = sighted(row);
      const double movement = row.rise.value_or(0.0) - row.fall.value_or(0.0);
      if (!close(movement, previous - reading)) fail(i, "rise/fall disagrees with readings");
      if (!close(row.reduced_level, book.rows[i - 1].reduced_level + movement)) {
        fail(i, "reduced level disagrees with rise/fall");
      }
      previous = row.back_sight ? *row.back_sight : reading;
    } else {
      if (i > 0 && !close(row.reduced_level, collimation - sighted(row))) {
        fail(i, "reduced level disagrees with collimation");
      }
      if (row.back_sight) {
        if (!row.collimation || !close(*row.collimation, row.reduced_level + *row.back_sight)) {
          fail(i, "collimation disagrees with RL + BS");
        }
        collimation = row.collimation.value_or(row.reduced_level + *row.back_sight);
      }
    }
  }
  if (!shapes_ok) return failures;

  if (!close(sum_bs, book.sum_back_sight)) failures.emplace_back("sum of BS column is wrong");
  if (!close(sum_fs, book.sum_fore_sight)) failures.emplace_back("sum of FS column is wrong");
  if (!close(sum_rise, book.sum_rise)) failures.emplace_back("sum of rise column is wrong");
  if (!close(sum_fall, book.sum_fall)) failures.emplace_back("sum of fall column is wrong");

  const double level_change = book.rows.back().reduced_level - book.rows.front().reduced_level;
  // A lone opening back-sight has no closed setup to check.
  if (book.rows.size() > 1 && !close(book.sum_back_sight - book.sum_fore_sight, level_change)) {
    failures.emplace_back("sum(BS) - sum(FS) != last RL - first RL");
  }
  if (book.method == LevelMethod::RiseFall && !close(book.sum_rise - book.sum_fall, level_change)) {
    failures.emplace_back("sum(rise) - sum(fall) != last RL - first RL");
  }
  if (book.closing_rl &&
      (!book.misclose || !close(*book.misclose, book.rows.back().reduced_level - *book.closing_rl))) {
    failures.emplace_back("misclose disagrees with closing level");
  }
  return failures;
}

}  // namespace survstore
