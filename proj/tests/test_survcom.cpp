#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"
#include "survstore/survcom.hpp"

using namespace survstore;
using namespace survstore::testing;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kArcSecond = kPi / (180.0 * 3600.0);

GridPoint pt(double e, double n) { return GridPoint{e, n, std::nullopt}; }

}  // namespace

TEST_SUITE("survcom") {

// ----------------------------------------------------------------- join

TEST_CASE("join examples") {
  Join north = join(pt(0, 0), pt(0, 100));
  CHECK(north.bearing.radians() == 0.0);
  CHECK(north.distance == 100.0);

  Join ne = join(pt(1000, 1000), pt(1100, 1100));
  CHECK(ne.bearing.degrees() == doctest::Approx(45.0).epsilon(1e-14));
  CHECK(ne.distance == doctest::Approx(100.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(ne.distance == doctest::Approx(141.421).epsilon(1e-5));

  CHECK(join(pt(0, 0), pt(-10, 0)).bearing.degrees() == doctest::Approx(270.0).epsilon(1e-14));
  CHECK(join(pt(0, 0), pt(0, -10)).bearing.degrees() == doctest::Approx(180.0).epsilon(1e-14));
  CHECK_CODE(join(pt(0, 0), pt(0, 0)), ErrorCode::CoincidentPoints);
  CHECK_CODE(make_point(NAN, 0), ErrorCode::InvalidCoordinate);
}

TEST_CASE("property: join matches the quadrant oracle and is antisymmetric") {
  Rng rng(0x5eed0101);
  for (int i = 0; i < 1000; ++i) {
    GridPoint a = pt(uniform(rng, 600000, 700000), uniform(rng, 700000, 800000));
    GridPoint b = pt(a.easting + uniform(rng, -5000, 5000), a.northing + uniform(rng, -5000, 5000));
    Join ab = join(a, b);
    Join ba = join(b, a);
    const double de = b.easting - a.easting;
    const double dn = b.northing - a.northing;
    CHECK(ab.bearing.radians() == doctest::Approx(oracle::bearing(de, dn)).epsilon(1e-12));
    CHECK(ab.distance == doctest::Approx(std::sqrt(de * de + dn * dn)).epsilon(1e-14));
    CHECK(ab.distance == ba.distance);
    CHECK(oracle::angular_gap(ba.bearing.radians(), ab.bearing.radians() + kPi) < 1e-12);
  }
}

// ----------------------------------------------------------------- area

TEST_CASE("polygon_area examples") {
  std::vector<GridPoint> rect = {pt(0, 0), pt(4, 0), pt(4, 3), pt(0, 3)};
  CHECK(polygon_area(rect) == 12.0);
  std::vector<GridPoint> pentagon = {pt(0, 0), pt(6, 0), pt(8, 4), pt(3, 7), pt(-1, 3)};
  CHECK(polygon_area(pentagon) == 42.0);
  CHECK(oracle::fan_area(pentagon) == doctest::Approx(42.0).epsilon(1e-12));

  std::vector<GridPoint> two = {pt(0, 0), pt(1, 0)};
  CHECK_CODE(polygon_area(two), ErrorCode::TooFewVertices);
  std::vector<GridPoint> repeated = {pt(0, 0), pt(1, 0), pt(1, 0), pt(0, 1)};
  CHECK_CODE(polygon_area(repeated), ErrorCode::DegenerateEdge);
  std::vector<GridPoint> closing = {pt(0, 0), pt(1, 0), pt(0, 1), pt(0, 0)};
  CHECK_CODE(polygon_area(closing), ErrorCode::DegenerateEdge);
}

TEST_CASE("area of a national-grid parcel keeps its precision") {
  std::vector<GridPoint> rect = {pt(660000, 730000), pt(660004, 730000), pt(660004, 730003),
                                 pt(660000, 730003)};
  CHECK(polygon_area(rect) == 12.0);
}

TEST_CASE("property: shoelace equals fan triangulation on random convex polygons") {
  Rng rng(0x5eed0102);
  for (int i = 0; i < 500; ++i) {
    std::vector<GridPoint> poly = oracle::random_convex_polygon(rng);
    const double area = polygon_area(poly);
    CHECK(std::fabs(area - oracle::fan_area(poly)) <= 1e-6 * area);
  }
}

TEST_CASE("property: area is invariant under rotation, reversal and translation") {
  Rng rng(0x5eed0103);
  for (int i = 0; i < 300; ++i) {
    std::vector<GridPoint> poly = oracle::random_convex_polygon(rng);
    const double area = polygon_area(poly);

    std::vector<GridPoint> rotated = poly;
    std::rotate(rotated.begin(), rotated.begin() + uniform_int(rng, 1, poly.size() - 1), rotated.end());
    CHECK(std::fabs(polygon_area(rotated) - area) <= 1e-6 * area);

    std::vector<GridPoint> reversed(poly.rbegin(), poly.rend());
    CHECK(std::fabs(polygon_area(reversed) - area) <= 1e-6 * area);

    const double de = uniform(rng, -1e6, 1e6);
    const double dn = uniform(rng, -1e6, 1e6);
    std::vector<GridPoint> moved;
    for (const GridPoint& p : poly) moved.push_back(pt(p.easting + de, p.northing + dn));
    CHECK(std::fabs(polygon_area(moved) - area) <= 1e-6 * area);
  }
}

// ----------------------------------------------------------------- detailing

namespace {

StationSetup example_setup() {
  StationSetup s;
  s.station = GridPoint{1000, 2000, 50};
  s.instrument_height = 1.5;
  s.reference_bearing = normalize_bearing(Angle::from_degrees(0));
  s.hcr_to_reference = Angle::from_degrees(0);
  return s;
}

RayObservation ray(double hcr_deg, double zenith_deg, double slope, double th) {
  return RayObservation{"P", Angle::from_degrees(hcr_deg), Angle::from_degrees(zenith_deg), slope, th};
}

}  // namespace

TEST_CASE("detail_points examples") {
  StationSetup setup = example_setup();
  std::vector<RayObservation> rays = {ray(90, 90, 100, 1.5), ray(90, 60, 100, 1.5)};
  auto points = detail_points(setup, rays);
  REQUIRE(points.size() == 2);
  CHECK(points[0].position.easting == doctest::Approx(1100.0).epsilon(1e-12));
  CHECK(points[0].position.northing == doctest::Approx(2000.0).epsilon(1e-12));
  CHECK(*points[0].position.elevation == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(points[1].position.easting == doctest::Approx(1000.0 + 100.0 * std::sqrt(3.0) / 2.0).epsilon(1e-12));
  CHECK(points[1].position.easting == doctest::Approx(1086.603).epsilon(1e-6));
  CHECK(points[1].position.northing == doctest::Approx(2000.0).epsilon(1e-12));
  CHECK(*points[1].position.elevation == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(points[1].horizontal_distance == doctest::Approx(86.60254037844386).epsilon(1e-14));
}

TEST_CASE("detail_points rejects bad observations") {
  StationSetup setup = example_setup();
  std::vector<RayObservation> none;
  CHECK_CODE(detail_points(setup, none), ErrorCode::EmptyObservations);
  std::vector<RayObservation> zero = {ray(0, 90, 0, 0)};
  CHECK_CODE(detail_points(setup, zero), ErrorCode::InvalidArgument);
  std::vector<RayObservation> up = {ray(0, 0, 10, 0)};
  CHECK_CODE(detail_points(setup, up), ErrorCode::InvalidArgument);
  std::vector<RayObservation> negative_th = {ray(0, 90, 10, -1)};
  CHECK_CODE(detail_points(setup, negative_th), ErrorCode::InvalidArgument);
  StationSetup no_z = setup;
  no_z.station.elevation.reset();
  std::vector<RayObservation> ok = {ray(0, 90, 10, 0)};
  CHECK_CODE(detail_points(no_z, ok), ErrorCode::InvalidArgument);
  StationSetup low = setup;
  low.instrument_height = -0.1;
  CHECK_CODE(detail_points(low, ok), ErrorCode::InvalidArgument);
}

TEST_CASE("property: joining station to a detailed point reproduces the ray") {
  Rng rng(0x5eed0104);
  for (int i = 0; i < 500; ++i) {
    oracle::DetailCase c = oracle::random_detail_case(rng);
    std::vector<RayObservation> rays = {c.ray};
    DetailedPoint p = detail_points(c.setup, rays).front();
    Join back = join(c.setup.station, p.position);
    CHECK(std::fabs(back.distance - c.expected_horizontal) <= 1e-9);
    CHECK(oracle::angular_gap(back.bearing.radians(), c.expected_bearing) <= 1e-9);
    CHECK(std::fabs(*p.position.elevation - c.expected_elevation) <= 1e-9);
  }
}

// ----------------------------------------------------------------- curve

TEST_CASE("curve oracle: delta 30, R 500, IP 2000, chord 20") {
  CurveInput in;
  in.deflection = Angle::from_degrees(30);
  in.radius = 500;
  in.ip_chainage = 2000;
  in.standard_chord = 20;
  CurveSolution s = curve_solve(in);

  using namespace oracle::curve30;
  CHECK(std::fabs(s.tangent_length - kT) < 1e-9);
  CHECK(std::fabs(s.curve_length - kL) < 1e-9);
  CHECK(std::fabs(s.external_distance - kE) < 1e-9);
  CHECK(std::fabs(s.mid_ordinate - kM) < 1e-9);
  CHECK(std::fabs(s.long_chord - kLC) < 1e-9);
  CHECK(std::fabs(s.chainage_t1 - kT1) < 1e-9);
  CHECK(std::fabs(s.chainage_t2 - kT2) < 1e-9);
  CHECK(std::fabs(s.initial_subchord - kInitial) < 1e-9);
  CHECK(std::fabs(s.final_subchord - kFinal) < 1e-9);
  CHECK(s.full_chords == 12);

  // 1 mm against the rounded published figures
  CHECK(std::fabs(s.tangent_length - 133.975) < 0.001);
  CHECK(std::fabs(s.chainage_t2 - 2127.824) < 0.001);
  CHECK(std::fabs(s.final_subchord - 7.824) < 0.001);

  REQUIRE(s.pegs.size() == 15);
  CHECK(s.pegs.front().name == "T1");
  CHECK(s.pegs.back().name == "T2");
  CHECK(s.pegs[1].chainage == 1880.0);
  CHECK(s.pegs[13].chainage == 2120.0);
  for (std::size_t i = 2; i < 14; ++i) {
    CHECK(s.pegs[i].chord == 20.0);
    CHECK(std::fabs(s.pegs[i].tangential.radians() - 0.02) < 1e-15);
    CHECK(format_dms(s.pegs[i].tangential) == "1°08'45\"");
  }
  CHECK(std::fabs(s.pegs.back().cumulative.radians() - kPi / 12) < kArcSecond);
  CHECK(format_dms(s.pegs.back().cumulative) == "15°00'00\"");
}

TEST_CASE("curve from length alone and consistency of both") {
  CurveInput in;
  in.deflection = Angle::from_degrees(30);
  in.curve_length = oracle::curve30::kL;
  in.ip_chainage = 2000;
  CurveSolution s = curve_solve(in);
  CHECK(std::fabs(s.radius - 500.0) < 1e-9);

  in.radius = 500;
  in.curve_length = oracle::curve30::kL + 0.0009;
  CHECK_NOTHROW(curve_solve(in));
  in.curve_length = oracle::curve30::kL + 0.0011;
  CHECK_CODE(curve_solve(in), ErrorCode::InconsistentRadiusLength);
}

TEST_CASE("curve input errors") {
  CurveInput in;
  in.radius = 500;
  in.ip_chainage = 2000;
  in.deflection = Angle::from_degrees(0);
  CHECK_CODE(curve_solve(in), ErrorCode::DeflectionOutOfRange);
  in.deflection = Angle::from_degrees(180);
  CHECK_CODE(curve_solve(in), ErrorCode::DeflectionOutOfRange);
  in.deflection = Angle::from_degrees(-10);
  CHECK_CODE(curve_solve(in), ErrorCode::DeflectionOutOfRange);
  in.deflection = Angle::from_degrees(30);
  in.radius.reset();
  CHECK_CODE(curve_solve(in), ErrorCode::InvalidArgument);
  in.radius = -5;
  CHECK_CODE(curve_solve(in), ErrorCode::InvalidArgument);
  in.radius = 500;
  in.standard_chord = 0;
  CHECK_CODE(curve_solve(in), ErrorCode::InvalidArgument);
}

TEST_CASE("short curve between two chord multiples is one chord") {
  CurveInput in;
  in.deflection = Angle::from_degrees(2);
  in.radius = 100;  // L = 3.49 m
  in.ip_chainage = 1005;
  in.standard_chord = 20;
  CurveSolution s = curve_solve(in);
  REQUIRE(s.pegs.size() == 2);
  CHECK(s.initial_subchord == s.curve_length);
  CHECK(s.final_subchord == 0.0);
  CHECK(std::fabs(s.pegs.back().cumulative.radians() - Angle::from_degrees(1).radians()) < 1e-12);
}

TEST_CASE("chord override") {
  CurveInput in;
  in.deflection = Angle::from_degrees(30);
  in.radius = 500;
  in.ip_chainage = 2000;
  const double L = oracle::curve30::kL;
  in.chord_override = {L / 4, L / 4, L / 2};
  CurveSolution s = curve_solve(in);
  REQUIRE(s.pegs.size() == 4);
  CHECK(std::fabs(s.pegs[2].chainage - (oracle::curve30::kT1 + L / 2)) < 1e-9);
  CHECK(std::fabs(s.pegs.back().cumulative.radians() - kPi / 12) < kArcSecond);
  in.chord_override = {L / 2, L / 2 - 0.01};
  CHECK_CODE(curve_solve(in), ErrorCode::InvalidArgument);
}

TEST_CASE("property: curve identities on random curves") {
  Rng rng(0x5eed0105);
  for (int i = 0; i < 200; ++i) {
    CurveInput in = oracle::random_curve_input(rng);
    CurveSolution s = curve_solve(in);
    CHECK(oracle::curve_identity_failures(in, s, 1e-9, 1e-9) == std::vector<std::string>{});
    for (std::size_t k = 1; k + 1 < s.pegs.size(); ++k) {
      const double m = s.pegs[k].chainage / in.standard_chord;
      CHECK(std::fabs(m - std::round(m)) < 1e-9);
      CHECK(s.pegs[k].chainage > s.pegs[k - 1].chainage);
    }
  }
}

// ----------------------------------------------------------------- levels

namespace {

LevelReading bs(double v) { return {"", v, std::nullopt, std::nullopt, ""}; }
LevelReading is(double v) { return {"", std::nullopt, v, std::nullopt, ""}; }
LevelReading fs(double v) { return {"", std::nullopt, std::nullopt, v, ""}; }
LevelReading cp(double f, double b) { return {"", b, std::nullopt, f, ""}; }

}  // namespace

TEST_CASE("levels worked example, both methods") {
  std::vector<LevelReading> rows = {bs(1.500), is(1.320), fs(0.790)};
  for (LevelMethod m : {LevelMethod::RiseFall, LevelMethod::HeightOfCollimation}) {
    LevelBook book = reduce_levels(m, rows, 100.0);
    REQUIRE(book.rows.size() == 3);
    CHECK(book.rows[0].reduced_level == doctest::Approx(100.000).epsilon(1e-12));
    CHECK(book.rows[1].reduced_level == doctest::Approx(100.180).epsilon(1e-12));
    CHECK(book.rows[2].reduced_level == doctest::Approx(100.710).epsilon(1e-12));
    CHECK(book.sum_back_sight - book.sum_fore_sight == doctest::Approx(0.710).epsilon(1e-12));
    CHECK(book.checks_pass);
    if (m == LevelMethod::RiseFall) {
      CHECK(*book.rows[1].rise == doctest::Approx(0.180).epsilon(1e-12));
      CHECK(*book.rows[2].rise == doctest::Approx(0.530).epsilon(1e-12));
      CHECK(book.sum_rise - book.sum_fall == doctest::Approx(0.710).epsilon(1e-12));
    } else {
      CHECK(*book.rows[0].collimation == doctest::Approx(101.500).epsilon(1e-12));
    }
  }
}

TEST_CASE("levels single row and misclose") {
  std::vector<LevelReading> one = {bs(1.5)};
  LevelBook book = reduce_levels(LevelMethod::RiseFall, one, 100.0);
  REQUIRE(book.rows.size() == 1);
  CHECK(book.rows[0].reduced_level == 100.0);
  CHECK(book.checks_pass);

  std::vector<LevelReading> rows = {bs(1.500), cp(1.200, 0.800), fs(1.100)};
  LevelBook closed = reduce_levels(LevelMethod::HeightOfCollimation, rows, 100.0, 99.990);
  CHECK(closed.rows.back().reduced_level == doctest::Approx(100.0).epsilon(1e-12));
  REQUIRE(closed.misclose.has_value());
  CHECK(*closed.misclose == doctest::Approx(0.010).epsilon(1e-9));
  CHECK(closed.checks_pass);
}

TEST_CASE("levels row-shape errors") {
  std::vector<LevelReading> no_bs = {is(1.0), fs(1.2)};
  CHECK_CODE(reduce_levels(LevelMethod::RiseFall, no_bs, 100.0), ErrorCode::NoBackSightFirst);
  std::vector<LevelReading> empty;
  CHECK_CODE(reduce_levels(LevelMethod::RiseFall, empty, 100.0), ErrorCode::NoBackSightFirst);
  std::vector<LevelReading> two_bs = {bs(1.0), bs(1.2), fs(1.0)};
  CHECK_CODE(reduce_levels(LevelMethod::RiseFall, two_bs, 100.0), ErrorCode::MalformedRow);
  std::vector<LevelReading> mixed = {bs(1.0), {"", std::nullopt, 1.0, 1.0, ""}, fs(1.0)};
  CHECK_CODE(reduce_levels(LevelMethod::RiseFall, mixed, 100.0), ErrorCode::MalformedRow);
  std::vector<LevelReading> blank = {bs(1.0), {"", std::nullopt, std::nullopt, std::nullopt, ""}, fs(1.0)};
  CHECK_CODE(reduce_levels(LevelMethod::RiseFall, blank, 100.0), ErrorCode::MalformedRow);
  std::vector<LevelReading> open_cp = {bs(1.0), cp(1.0, 1.0)};
  CHECK_CODE(reduce_levels(LevelMethod::RiseFall, open_cp, 100.0), ErrorCode::MalformedRow);
  std::vector<LevelReading> open_is = {bs(1.0), is(1.0)};
  CHECK_CODE(reduce_levels(LevelMethod::RiseFall, open_is, 100.0), ErrorCode::MalformedRow);
  std::vector<LevelReading> first_fs = {cp(1.0, 1.0), fs(1.0)};
  CHECK_CODE(reduce_levels(LevelMethod::RiseFall, first_fs, 100.0), ErrorCode::MalformedRow);
  CHECK(parse_level_method("hpc") == LevelMethod::HeightOfCollimation);
  CHECK_CODE(parse_level_method("guess"), ErrorCode::InvalidArgument);
}

TEST_CASE("property: both reductions agree with the ground truth on random books") {
  Rng rng(0x5eed0106);
  for (int i = 0; i < 500; ++i) {
    oracle::SyntheticBook b = oracle::random_level_book(rng);
    LevelBook rf = reduce_levels(LevelMethod::RiseFall, b.readings, b.start_rl);
    LevelBook hpc = reduce_levels(LevelMethod::HeightOfCollimation, b.readings, b.start_rl);
    REQUIRE(rf.rows.size() == b.true_levels.size());
    for (std::size_t k = 0; k < rf.rows.size(); ++k) {
      CHECK(std::fabs(rf.rows[k].reduced_level - hpc.rows[k].reduced_level) <= 1e-9);
      CHECK(std::fabs(rf.rows[k].reduced_level - b.true_levels[k]) <= 1e-9);
    }
    CHECK(rf.checks_pass);
    CHECK(hpc.checks_pass);
    CHECK(verify_level_book(rf).empty());
    CHECK(verify_level_book(hpc).empty());
  }
}

TEST_CASE("property: perturbing any single booked reading fails the checks") {
  Rng rng(0x5eed0107);
  for (int i = 0; i < 500; ++i) {
    oracle::SyntheticBook b = oracle::random_level_book(rng);
    for (LevelMethod m : {LevelMethod::RiseFall, LevelMethod::HeightOfCollimation}) {
      LevelBook book = reduce_levels(m, b.readings, b.start_rl);
      oracle::perturb_one_reading(rng, book);
      CHECK_FALSE(verify_level_book(book).empty());
    }
  }
}

}  // TEST_SUITE
