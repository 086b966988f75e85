#include "survstore/api.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "survstore/backup.hpp"
#include "survstore/beacons.hpp"
#include "survstore/catalog.hpp"
#include "survstore/codec.hpp"
#include "survstore/ledger.hpp"
#include "survstore/survcom.hpp"
#include "survstore/text.hpp"
#include "survstore/units.hpp"

namespace survstore {

using nlohmann::json;

const std::vector<OperationRoute>& operation_manifest() {
  static const std::vector<OperationRoute> routes = {
      {"units_angles", "parse_angle", "POST", "/api/units/angle", "units angle"},
      {"units_angles", "convert", "POST", "/api/units/convert", "units convert"},
      {"survcom", "polygon_area", "POST", "/api/compute/area", "compute area"},
      {"survcom", "join", "POST", "/api/compute/join", "compute join"},
      {"survcom", "detail_points", "POST", "/api/compute/detailing", "compute detailing"},
      {"survcom", "curve_solve", "POST", "/api/compute/curve", "compute curve"},
      {"survcom", "reduce_levels", "POST", "/api/compute/levels", "compute levels"},
      {"beacon_registry", "add_beacon", "POST", "/api/beacons", "beacon add"},
      {"beacon_registry", "list_beacons", "GET", "/api/beacons", "beacon list"},
      {"beacon_registry", "search_beacons", "GET", "/api/beacons", "beacon search"},
      {"beacon_registry", "get_beacon", "GET", "/api/beacons/{id}", "beacon show"},
      {"beacon_registry", "update_beacon", "PUT", "/api/beacons/{id}", "beacon update"},
      {"beacon_registry", "delete_beacon", "DELETE", "/api/beacons/{id}", "beacon delete"},
      {"beacon_registry", "restore_beacon", "POST", "/api/beacons/{id}/restore", "beacon restore"},
      {"beacon_registry", "set_photo", "PUT", "/api/beacons/{id}/photo", "beacon photo"},
      {"beacon_registry", "get_photo", "GET", "/api/beacons/{id}/photo", "beacon photo-get"},
      {"beacon_registry", "export_csv", "GET", "/api/beacons/export.csv", "beacon export"},
      {"beacon_registry", "beacon_join", "GET", "/api/beacons/join", "beacon join"},
      {"beacon_registry", "to_geojson", "GET", "/api/beacons/geojson", "beacon geojson"},
      {"lending_ledger", "create_lending", "POST", "/api/lendings", "lend new"},
      {"lending_ledger", "list_lendings", "GET", "/api/lendings", "lend list"},
      {"lending_ledger", "search_transactions", "GET", "/api/lendings", "lend search"},
      {"lending_ledger", "get_lending", "GET", "/api/lendings/{id}", "lend show"},
      {"lending_ledger", "return_lending", "POST", "/api/lendings/{id}/return", "lend return"},
      {"lending_ledger", "return_note", "GET", "/api/lendings/{id}/return-note", "lend note"},
      {"lending_ledger", "soft_delete", "DELETE", "/api/lendings/{id}", "lend delete"},
      {"lending_ledger", "restore_deleted", "POST", "/api/lendings/{id}/restore", "lend restore"},
      {"lending_ledger", "recycle_bin", "GET", "/api/recycle-bin", "lend bin"},
      {"lending_ledger", "purge", "DELETE", "/api/recycle-bin/lendings/{id}", "lend purge"},
      {"lending_ledger", "availability_snapshot", "GET", "/api/stats/availability",
       "stock availability"},
      {"lending_ledger", "daily_series", "GET", "/api/stats/daily", "stock daily"},
      {"lending_ledger", "list_instruments", "GET", "/api/instruments", "stock list"},
      {"lending_ledger", "upsert_instrument", "PUT", "/api/instruments", "stock upsert"},
      {"instrument_catalog", "search_catalog", "GET", "/api/catalog", "catalog search"},
      {"instrument_catalog", "upsert_entry", "PUT", "/api/catalog", "catalog upsert"},
      {"instrument_catalog", "import_csv", "POST", "/api/catalog/import", "catalog import"},
      {"instrument_catalog", "locate_instrument", "GET", "/api/catalog/locate/{name}",
       "catalog locate"},
      {"instrument_catalog", "list_jobs", "GET", "/api/catalog/jobs", "catalog jobs"},
      {"instrument_catalog", "job_requirements", "GET", "/api/catalog/jobs/{type}", "catalog job"},
      {"instrument_catalog", "upsert_job", "PUT", "/api/catalog/jobs/{type}", "catalog job-set"},
      {"instrument_catalog", "check_integrity", "GET", "/api/catalog/integrity", "catalog check"},
      {"persistence_backup", "store_status", "GET", "/api/store", "store status"},
      {"persistence_backup", "create_backup", "POST", "/api/backup", "backup create"},
      {"persistence_backup", "upload_backup", "POST", "/api/backup/upload", "backup upload"},
      {"persistence_backup", "restore_backup", "POST", "/api/backup/restore", "backup restore"},
  };
  return routes;
}

json error_body(const Error& error) {
  return {{"error",
           {{"code", code_name(error.code())},
            {"message", error.what()},
            {"details", error.details()}}}};
}

namespace {

// ---------------------------------------------------------------- responses

HttpResponse json_response(const json& body, int status = 200) {
  return {status, "application/json", body.dump(), {}};
}

HttpResponse text_response(std::string body, std::string content_type) {
  return {200, std::move(content_type), std::move(body), {}};
}

HttpResponse error_response(const Error& error) {
  return json_response(error_body(error), http_status(error.code()));
}

// ---------------------------------------------------------------- request parsing

[[noreturn]] void bad_request(const std::string& message, json details = nullptr) {
  throw Error(ErrorCode::MalformedRequest, message, std::move(details));
}

json body_json(const HttpRequest& req) {
  if (trim(req.body).empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) bad_request("request body is not valid JSON");
  if (!j.is_object()) bad_request("request body must be a JSON object");
  return j;
}

const json* member(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

double number_value(const json& v, const std::string& what) {
  if (!v.is_number()) bad_request("'" + what + "' must be a number", {{"field", what}});
  return v.get<double>();
}

double req_number(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) bad_request(std::string("missing field '") + key + "'", {{"field", key}});
  return number_value(*v, key);
}

std::optional<double> opt_number(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) return std::nullopt;
  return number_value(*v, key);
}

std::int64_t int_value(const json& v, const std::string& what) {
  if (!v.is_number_integer()) bad_request("'" + what + "' must be an integer", {{"field", what}});
  return v.get<std::int64_t>();
}

std::int64_t req_int(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) bad_request(std::string("missing field '") + key + "'", {{"field", key}});
  return int_value(*v, key);
}

std::optional<std::int64_t> opt_int(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) return std::nullopt;
  return int_value(*v, key);
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) return std::nullopt;
  if (!v->is_string()) bad_request(std::string("'") + key + "' must be a string", {{"field", key}});
  return v->get<std::string>();
}

std::string req_string(const json& j, const char* key) {
  auto v = opt_string(j, key);
  if (!v) bad_request(std::string("missing field '") + key + "'", {{"field", key}});
  return *v;
}

std::optional<bool> opt_bool(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) return std::nullopt;
  if (!v->is_boolean()) bad_request(std::string("'") + key + "' must be a boolean", {{"field", key}});
  return v->get<bool>();
}

/// Degrees as a number, or any text parse_angle accepts.
Angle angle_value(const json& v, const std::string& what) {
  if (v.is_string()) return parse_angle(v.get<std::string>());
  return Angle::from_degrees(number_value(v, what));
}

Angle req_angle(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) bad_request(std::string("missing field '") + key + "'", {{"field", key}});
  return angle_value(*v, key);
}

std::optional<Angle> opt_angle(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) return std::nullopt;
  return angle_value(*v, key);
}

int dms_decimals(const json& j) {
  std::int64_t d = opt_int(j, "dms_decimals").value_or(0);
  if (d < 0 || d > 9) {
    throw Error(ErrorCode::InvalidArgument, "dms_decimals must be between 0 and 9",
                {{"dms_decimals", d}});
  }
  return static_cast<int>(d);
}

/// [E, N] / [E, N, Z] or {"easting", "northing", "elevation"}.
GridPoint point_value(const json& v, const std::string& what) {
  if (v.is_array()) {
    if (v.size() < 2 || v.size() > 3) bad_request("'" + what + "' must be [E, N] or [E, N, Z]");
    std::optional<double> z;
    if (v.size() == 3 && !v[2].is_null()) z = number_value(v[2], what);
    return make_point(number_value(v[0], what), number_value(v[1], what), z);
  }
  if (!v.is_object()) bad_request("'" + what + "' must be a point", {{"field", what}});
  return make_point(req_number(v, "easting"), req_number(v, "northing"), opt_number(v, "elevation"));
}

GridPoint req_point(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) bad_request(std::string("missing field '") + key + "'", {{"field", key}});
  return point_value(*v, key);
}

std::optional<std::string> query(const HttpRequest& req, const std::string& key) {
  auto it = req.query.find(key);
  if (it == req.query.end()) return std::nullopt;
  return it->second;
}

bool query_flag(const HttpRequest& req, const std::string& key) {
  auto v = query(req, key);
  if (!v) return false;
  std::string f = fold_case(*v);
  if (f == "" || f == "1" || f == "true" || f == "yes") return true;
  if (f == "0" || f == "false" || f == "no") return false;
  bad_request("query parameter '" + key + "' must be true or false", {{"parameter", key}});
}

std::int64_t parse_id(std::string_view text) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an integer");
  }
  return value;
}

BeaconSelection selection_of(const HttpRequest& req) {
  auto ids = query(req, "ids");
  if (!ids) return std::nullopt;
  std::vector<std::int64_t> out;
  std::string_view rest = *ids;
  while (!rest.empty()) {
    std::size_t comma = rest.find(',');
    std::string part = trim(rest.substr(0, comma));
    if (!part.empty()) {
      try {
        out.push_back(parse_id(part));
      } catch (const std::invalid_argument&) {
        bad_request("ids must be a comma-separated list of integers", {{"ids", *ids}});
      }
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

// ---------------------------------------------------------------- JSON views

json angle_json(Angle a, int decimals) {
  return {{"radians", a.radians()}, {"degrees", a.degrees()}, {"dms", format_dms(a, decimals)}};
}

json bearing_json(Bearing b, int decimals) { return angle_json(b.angle(), decimals); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json stock_json(const InstrumentStock& s) {
  json j = to_json(s);
  j["remaining"] = s.remaining();
  return j;
}

json beacon_json(const BeaconRecord& b, std::optional<LengthUnit> unit) {
  json j = to_json(b);
  if (unit) {
    auto conv = [&](double metres) { return convert_length(metres, LengthUnit::Metre, *unit); };
    j["display"] = {{"unit", unit_symbol(*unit)},
                    {"easting", conv(b.position.easting)},
                    {"northing", conv(b.position.northing)},
                    {"elevation", b.position.elevation ? json(conv(*b.position.elevation))
                                                       : json(nullptr)}};
  }
  return j;
}

json note_json(const ReturnNote& note) {
  json lines = json::array();
  for (const auto& l : note.lines) {
    lines.push_back(
        {{"instrument_name", l.instrument_name}, {"quantity", l.quantity}, {"serials", l.serials}});
  }
  return {{"lending_id", note.lending_id},
          {"issued_at", format_timestamp(note.issued_at)},
          {"lent_at", format_timestamp(note.lent_at)},
          {"person_name", note.person_name},
          {"person_department", note.person_department},
          {"person_phone", note.person_phone},
          {"lines", std::move(lines)},
          {"total_instru", note.total_instru},
          {"remarks", note.remarks},
          {"text", render_return_note(note)}};
}

json availability_json(const AvailabilitySnapshot& s) {
  json rows = json::array();
  for (const auto& r : s.instruments) {
    rows.push_back({{"instrument_name", r.instrument_name},
                    {"available", r.available},
                    {"lent", r.lent},
                    {"faulty", r.faulty},
                    {"total", r.total}});
  }
  return {{"instruments", std::move(rows)},
          {"totals",
           {{"available", s.available}, {"lent", s.lent}, {"faulty", s.faulty}, {"total", s.total}}}};
}

json level_book_json(const LevelBook& book) {
  json rows = json::array();
  for (const auto& r : book.rows) {
    rows.push_back({{"point", r.point},
                    {"bs", optional_json(r.back_sight)},
                    {"is", optional_json(r.inter_sight)},
                    {"fs", optional_json(r.fore_sight)},
                    {"rise", optional_json(r.rise)},
                    {"fall", optional_json(r.fall)},
                    {"hpc", optional_json(r.collimation)},
                    {"rl", r.reduced_level},
                    {"remarks", r.remarks}});
  }
  json sums = {{"bs", book.sum_back_sight}, {"fs", book.sum_fore_sight}};
  if (book.method == LevelMethod::RiseFall) {
    sums["rise"] = book.sum_rise;
    sums["fall"] = book.sum_fall;
  }
  return {{"method", method_name(book.method)},
          {"rows", std::move(rows)},
          {"sums", std::move(sums)},
          {"closing_rl", optional_json(book.closing_rl)},
          {"misclose", optional_json(book.misclose)},
          {"checks_pass", book.checks_pass},
          {"check_failures", verify_level_book(book)}};
}

json curve_json(const CurveSolution& s, int decimals) {
  json pegs = json::array();
  for (const auto& p : s.pegs) {
    pegs.push_back({{"name", p.name},
                    {"chainage", p.chainage},
                    {"chord", p.chord},
                    {"tangential", angle_json(p.tangential, decimals)},
                    {"cumulative", angle_json(p.cumulative, decimals)}});
  }
  return {{"deflection", angle_json(s.deflection, decimals)},
          {"radius", s.radius},
          {"curve_length", s.curve_length},
          {"tangent_length", s.tangent_length},
          {"external_distance", s.external_distance},
          {"mid_ordinate", s.mid_ordinate},
          {"long_chord", s.long_chord},
          {"chainage_t1", s.chainage_t1},
          {"chainage_t2", s.chainage_t2},
          {"initial_subchord", s.initial_subchord},
          {"final_subchord", s.final_subchord},
          {"full_chords", s.full_chords},
          {"standard_chord", s.standard_chord},
          {"pegs", std::move(pegs)}};
}

json counts_json(const StoreState& s) {
  std::size_t details = 0;
  for (const auto& l : s.lendings) details += l.details.size();
  return {{"beacons", s.beacons.size()},         {"lendings", s.lendings.size()},
          {"lending_details", details},           {"instruments", s.instruments.size()},
          {"catalog", s.catalog.size()},          {"job_templates", s.job_templates.size()},
          {"recycle", s.recycle.size()}};
}

std::string media_type_of(const std::string& path) {
  std::string ext = fold_case(fs::path(path).extension().string());
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    std::size_t slash = path.find('/', pos);
    if (slash == std::string_view::npos) slash = path.size();
    if (slash > pos) out.emplace_back(path.substr(pos, slash - pos));
    pos = slash + 1;
  }
  return out;
}

// `+` means a space only in query strings.
std::string percent_decode(std::string_view text, bool plus_is_space = true) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%' && i + 2 < text.size() && std::isxdigit(static_cast<unsigned char>(text[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(text[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(text.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else if (plus_is_space && text[i] == '+') {
      out += ' ';
    } else {
      out += text[i];
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- routing

void ApiService::add(std::string method, std::string path, Handler handler) {
  Route route{std::move(method), path, split_path(path), std::move(handler)};
  routes_.push_back(std::move(route));
}

std::vector<ApiService::RoutePattern> ApiService::routes() const {
  std::vector<RoutePattern> out;
  for (const auto& r : routes_) out.push_back({r.method, r.path});
  return out;
}

HttpResponse ApiService::handle(std::string method, std::string_view target, std::string body) {
  HttpRequest request;
  request.method = std::move(method);
  request.body = std::move(body);
  std::size_t q = target.find('?');
  request.path = percent_decode(target.substr(0, q), false);
  if (q != std::string_view::npos) {
    std::string_view rest = target.substr(q + 1);
    while (!rest.empty()) {
      std::size_t amp = rest.find('&');
      std::string_view pair = rest.substr(0, amp);
      std::size_t eq = pair.find('=');
      std::string key = percent_decode(pair.substr(0, eq));
      std::string value = eq == std::string_view::npos ? "" : percent_decode(pair.substr(eq + 1));
      if (!key.empty()) request.query.emplace(std::move(key), std::move(value));
      if (amp == std::string_view::npos) break;
      rest.remove_prefix(amp + 1);
    }
  }
  return handle(request);
}

HttpResponse ApiService::handle(const HttpRequest& request) {
  try {
    return dispatch(request);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const json::exception& e) {
    return error_response(Error(ErrorCode::MalformedRequest, e.what()));
  } catch (const std::exception& e) {
    return error_response(Error(ErrorCode::Internal, e.what()));
  }
}

HttpResponse ApiService::dispatch(const HttpRequest& request) {
  std::vector<std::string> segments = split_path(request.path);
  const Route* best = nullptr;
  Params best_params;
  int best_literals = -1;
  for (const Route& route : routes_) {
    if (route.method != request.method || route.segments.size() != segments.size()) continue;
    Params params;
    int literals = 0;
    bool ok = true;
    for (std::size_t i = 0; ok && i < segments.size(); ++i) {
      const std::string& pattern = route.segments[i];
      if (pattern.size() > 2 && pattern.front() == '{' && pattern.back() == '}') {
        std::string name = pattern.substr(1, pattern.size() - 2);
        if (name == "id") {
          try {
            parse_id(segments[i]);
          } catch (const std::invalid_argument&) {
            ok = false;
          }
        }
        params[name] = segments[i];
      } else if (pattern == segments[i]) {
        ++literals;
      } else {
        ok = false;
      }
    }
    // Literal segments win over parameters (/api/beacons/geojson vs {id}).
    if (ok && literals > best_literals) {
      best = &route;
      best_params = std::move(params);
      best_literals = literals;
    }
  }
  if (!best) {
    throw Error(ErrorCode::NotFound, "no route for " + request.method + " " + request.path,
                {{"route", request.method + " " + request.path}});
  }
  return best->handler(best_params, request);
}

// ---------------------------------------------------------------- handlers

ApiService::ApiService(Store& store, ApiConfig config) : store_(store), config_(std::move(config)) {
  auto id_of = [](const Params& p) { return parse_id(p.at("id")); };

  // units_angles
  add("POST", "/api/units/angle", [](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    Angle a = req_angle(j, "angle");
    int d = dms_decimals(j);
    json out = angle_json(a, d);
    out["bearing"] = bearing_json(normalize_bearing(a), d);
    return json_response(out);
  });
  add("POST", "/api/units/convert", [](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    std::string kind = opt_string(j, "kind").value_or("length");
    double value = req_number(j, "value");
    std::string from = req_string(j, "from");
    std::string to = req_string(j, "to");
    double result;
    if (kind == "length") {
      result = convert_length(value, parse_length_unit(from), parse_length_unit(to));
    } else if (kind == "area") {
      result = convert_area(value, parse_area_unit(from), parse_area_unit(to));
    } else {
      throw Error(ErrorCode::InvalidArgument, "kind must be 'length' or 'area'", {{"kind", kind}});
    }
    return json_response({{"kind", kind}, {"value", result}, {"unit", to}});
  });

  // survcom
  add("POST", "/api/compute/area", [](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    const json* v = member(j, "vertices");
    if (!v || !v->is_array()) bad_request("'vertices' must be an array of points");
    std::vector<GridPoint> vertices;
    for (std::size_t i = 0; i < v->size(); ++i) {
      vertices.push_back(point_value((*v)[i], "vertices[" + std::to_string(i) + "]"));
    }
    double area = polygon_area(vertices);
    json out = {{"area_m2", area}};
    if (auto unit = opt_string(j, "unit")) {
      AreaUnit u = parse_area_unit(*unit);
      out["area"] = convert_area(area, AreaUnit::SquareMetre, u);
      out["unit"] = unit_symbol(u);
    }
    return json_response(out);
  });
  add("POST", "/api/compute/join", [](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    Join r = join(req_point(j, "from"), req_point(j, "to"));
    return json_response({{"bearing", bearing_json(r.bearing, dms_decimals(j))}, {"distance", r.distance}});
  });
  add("POST", "/api/compute/detailing", [](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    StationSetup setup;
    setup.station = req_point(j, "station");
    setup.instrument_height = opt_number(j, "instrument_height").value_or(0.0);
    setup.reference_bearing = normalize_bearing(req_angle(j, "reference_bearing"));
    setup.hcr_to_reference = opt_angle(j, "hcr_to_reference").value_or(Angle::from_radians(0));
    const json* obs = member(j, "observations");
    if (!obs || !obs->is_array()) bad_request("'observations' must be an array");
    std::vector<RayObservation> rays;
    for (const json& o : *obs) {
      if (!o.is_object()) bad_request("each observation must be an object");
      RayObservation ray;
      ray.point_name = opt_string(o, "point_name").value_or("");
      ray.hcr = req_angle(o, "hcr");
      ray.vcr_zenith = opt_angle(o, "zenith").value_or(Angle::from_degrees(90));
      ray.slope_distance = req_number(o, "slope_distance");
      ray.target_height = opt_number(o, "target_height").value_or(0.0);
      rays.push_back(std::move(ray));
    }
    int d = dms_decimals(j);
    json points = json::array();
    for (const DetailedPoint& p : detail_points(setup, rays)) {
      points.push_back({{"point_name", p.point_name},
                        {"easting", p.position.easting},
                        {"northing", p.position.northing},
                        {"elevation", optional_json(p.position.elevation)},
                        {"bearing", bearing_json(p.bearing, d)},
                        {"horizontal_distance", p.horizontal_distance}});
    }
    return json_response({{"points", std::move(points)}});
  });
  add("POST", "/api/compute/curve", [](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    CurveInput in;
    in.deflection = req_angle(j, "deflection");
    in.radius = opt_number(j, "radius");
    in.curve_length = opt_number(j, "curve_length");
    in.ip_chainage = req_number(j, "ip_chainage");
    in.standard_chord = opt_number(j, "chord").value_or(20.0);
    if (const json* o = member(j, "chord_override")) {
      if (!o->is_array()) bad_request("'chord_override' must be an array of numbers");
      for (const json& c : *o) in.chord_override.push_back(number_value(c, "chord_override"));
    }
    return json_response(curve_json(curve_solve(in), dms_decimals(j)));
  });
  add("POST", "/api/compute/levels", [](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    LevelMethod method = parse_level_method(opt_string(j, "method").value_or("rise_fall"));
    const json* rows = member(j, "rows");
    if (!rows || !rows->is_array()) bad_request("'rows' must be an array");
    std::vector<LevelReading> readings;
    for (const json& r : *rows) {
      if (!r.is_object()) bad_request("each row must be an object");
      readings.push_back({opt_string(r, "point").value_or(""), opt_number(r, "bs"),
                          opt_number(r, "is"), opt_number(r, "fs"),
                          opt_string(r, "remarks").value_or("")});
    }
    LevelBook book =
        reduce_levels(method, readings, req_number(j, "start_rl"), opt_number(j, "closing_rl"));
    return json_response(level_book_json(book));
  });

  // beacon_registry
  add("POST", "/api/beacons", [this](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    BeaconDraft draft;
    draft.beacon_name = req_string(j, "beacon_name");
    draft.position = GridPoint{req_number(j, "easting"), req_number(j, "northing"),
                               opt_number(j, "elevation")};
    draft.description = opt_string(j, "description").value_or("");
    draft.photo_ref = opt_string(j, "photo_ref");
    draft.revision_surveyor = opt_string(j, "revision_surveyor").value_or("");
    if (auto d = opt_string(j, "revision_date")) draft.revision_date = parse_date(*d);
    draft.marked = opt_bool(j, "marked").value_or(false);
    return json_response(to_json(BeaconRegistry(store_).add(draft)), 201);
  });
  add("GET", "/api/beacons", [this](const Params&, const HttpRequest& req) {
    json out = json::array();
    for (const auto& b : BeaconRegistry(store_).search(query(req, "q").value_or(""))) {
      out.push_back(to_json(b));
    }
    return json_response(out);
  });
  add("GET", "/api/beacons/{id}", [this, id_of](const Params& p, const HttpRequest& req) {
    std::optional<LengthUnit> unit;
    if (auto u = query(req, "unit")) unit = parse_length_unit(*u);
    return json_response(beacon_json(BeaconRegistry(store_).get(id_of(p)), unit));
  });
  add("PUT", "/api/beacons/{id}", [this, id_of](const Params& p, const HttpRequest& req) {
    json j = body_json(req);
    BeaconChanges c;
    c.beacon_name = opt_string(j, "beacon_name");
    c.easting = opt_number(j, "easting");
    c.northing = opt_number(j, "northing");
    if (j.contains("elevation")) c.elevation = opt_number(j, "elevation");
    c.description = opt_string(j, "description");
    if (j.contains("photo_ref")) c.photo_ref = opt_string(j, "photo_ref");
    c.revision_surveyor = opt_string(j, "revision_surveyor");
    if (auto d = opt_string(j, "revision_date")) c.revision_date = parse_date(*d);
    c.marked = opt_bool(j, "marked");
    return json_response(to_json(BeaconRegistry(store_).update(id_of(p), c)));
  });
  add("DELETE", "/api/beacons/{id}", [this, id_of](const Params& p, const HttpRequest&) {
    BeaconRegistry(store_).remove(id_of(p));
    return json_response({{"deleted", id_of(p)}});
  });
  add("POST", "/api/beacons/{id}/restore", [this, id_of](const Params& p, const HttpRequest&) {
    return json_response(to_json(BeaconRegistry(store_).restore(id_of(p))));
  });
  add("PUT", "/api/beacons/{id}/photo", [this, id_of](const Params& p, const HttpRequest& req) {
    auto file = query(req, "file");
    if (!file) bad_request("query parameter 'file' names the photo file");
    return json_response(to_json(BeaconRegistry(store_).set_photo(id_of(p), *file, req.body)));
  });
  add("GET", "/api/beacons/{id}/photo", [this, id_of](const Params& p, const HttpRequest&) {
    BeaconRegistry registry(store_);
    BeaconRecord b = registry.get(id_of(p));
    std::string bytes = registry.photo_bytes(b.beacon_id);
    return text_response(std::move(bytes), media_type_of(*b.photo_ref));
  });
  add("GET", "/api/beacons/export.csv", [this](const Params&, const HttpRequest& req) {
    LengthUnit unit = parse_length_unit(query(req, "unit").value_or("m"));
    return text_response(BeaconRegistry(store_).export_csv(selection_of(req), unit),
                         "text/csv; charset=utf-8");
  });
  add("GET", "/api/beacons/join", [this](const Params&, const HttpRequest& req) {
    auto a = query(req, "a");
    auto b = query(req, "b");
    if (!a || !b) bad_request("query parameters 'a' and 'b' name the two beacons");
    Join r = BeaconRegistry(store_).join(*a, *b);
    return json_response({{"from", *a},
                          {"to", *b},
                          {"bearing", bearing_json(r.bearing, 0)},
                          {"distance", r.distance}});
  });
  add("GET", "/api/beacons/geojson", [this](const Params&, const HttpRequest& req) {
    return text_response(BeaconRegistry(store_).to_geojson(selection_of(req)).dump(),
                         "application/geo+json");
  });

  // lending_ledger
  add("POST", "/api/lendings", [this](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    NewLending n;
    n.person_name = req_string(j, "person_name");
    n.person_department = opt_string(j, "person_department").value_or("");
    n.person_phone = opt_string(j, "person_phone").value_or("");
    n.remarks = opt_string(j, "remarks").value_or("");
    if (auto d = opt_string(j, "date")) n.date = parse_timestamp(*d);
    const json* details = member(j, "details");
    if (details && !details->is_array()) bad_request("'details' must be an array");
    if (details) {
      for (const json& d : *details) {
        if (!d.is_object()) bad_request("each detail must be an object");
        LendingLine line;
        line.instrument_name = req_string(d, "instrument_name");
        line.quantity = req_int(d, "quantity");
        if (const json* s = member(d, "serials")) {
          if (!s->is_array()) bad_request("'serials' must be an array of strings");
          for (const json& serial : *s) {
            if (!serial.is_string()) bad_request("'serials' must be an array of strings");
            line.serials.push_back(serial.get<std::string>());
          }
        }
        n.lines.push_back(std::move(line));
      }
    }
    return json_response(to_json(LendingLedger(store_).create(n)), 201);
  });
  add("GET", "/api/lendings", [this](const Params&, const HttpRequest& req) {
    json out = json::array();
    for (const auto& l : LendingLedger(store_).search(query(req, "q").value_or(""),
                                                       query_flag(req, "include_deleted"))) {
      out.push_back(to_json(l));
    }
    return json_response(out);
  });
  add("GET", "/api/lendings/{id}", [this, id_of](const Params& p, const HttpRequest&) {
    return json_response(to_json(LendingLedger(store_).get(id_of(p))));
  });
  add("POST", "/api/lendings/{id}/return", [this, id_of](const Params& p, const HttpRequest& req) {
    json j = body_json(req);
    return json_response(
        note_json(LendingLedger(store_).return_lending(id_of(p), opt_string(j, "remarks").value_or(""))));
  });
  add("GET", "/api/lendings/{id}/return-note", [this, id_of](const Params& p, const HttpRequest& req) {
    ReturnNote note = LendingLedger(store_).return_note(id_of(p));
    if (query(req, "format").value_or("") == "text") {
      return text_response(render_return_note(note), "text/plain; charset=utf-8");
    }
    return json_response(note_json(note));
  });
  add("DELETE", "/api/lendings/{id}", [this, id_of](const Params& p, const HttpRequest&) {
    LendingLedger(store_).soft_delete(id_of(p));
    return json_response({{"deleted", id_of(p)}});
  });
  add("POST", "/api/lendings/{id}/restore", [this, id_of](const Params& p, const HttpRequest&) {
    return json_response(to_json(LendingLedger(store_).restore(id_of(p))));
  });
  add("GET", "/api/recycle-bin", [this](const Params&, const HttpRequest&) {
    auto state = store_.snapshot();
    json lendings = json::array();
    for (const auto& l : LendingLedger(store_).recycle_bin()) lendings.push_back(to_json(l));
    json beacons = json::array();
    for (const auto& b : state->beacons) {
      if (b.deleted) beacons.push_back(to_json(b));
    }
    json entries = json::array();
    for (const auto& r : state->recycle) entries.push_back(to_json(r));
    return json_response({{"lendings", std::move(lendings)},
                          {"beacons", std::move(beacons)},
                          {"entries", std::move(entries)}});
  });
  add("DELETE", "/api/recycle-bin/lendings/{id}", [this, id_of](const Params& p, const HttpRequest& req) {
    LendingLedger(store_).purge(id_of(p), query_flag(req, "force"));
    return json_response({{"purged", id_of(p)}});
  });
  add("GET", "/api/stats/availability", [this](const Params&, const HttpRequest&) {
    return json_response(availability_json(LendingLedger(store_).availability()));
  });
  add("GET", "/api/stats/daily", [this](const Params&, const HttpRequest& req) {
    auto from = query(req, "from");
    auto to = query(req, "to");
    if (!from || !to) bad_request("query parameters 'from' and 'to' are required (YYYY-MM-DD)");
    json points = json::array();
    for (const auto& p : LendingLedger(store_).daily_series(parse_date(*from), parse_date(*to))) {
      points.push_back({{"date", format_date(p.date)}, {"instruments_lent", p.instruments_lent}});
    }
    return json_response({{"from", *from}, {"to", *to}, {"points", std::move(points)}});
  });
  add("GET", "/api/instruments", [this](const Params&, const HttpRequest&) {
    json out = json::array();
    for (const auto& s : LendingLedger(store_).instruments()) out.push_back(stock_json(s));
    return json_response(out);
  });
  add("PUT", "/api/instruments", [this](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    return json_response(stock_json(LendingLedger(store_).upsert_instrument(
        req_string(j, "instrument_name"), req_int(j, "total"), opt_int(j, "faulty"),
        opt_string(j, "description"))));
  });

  // instrument_catalog
  add("GET", "/api/catalog", [this](const Params&, const HttpRequest& req) {
    json out = json::array();
    for (const auto& e : InstrumentCatalog(store_).search(query(req, "q").value_or(""))) {
      out.push_back(to_json(e));
    }
    return json_response(out);
  });
  add("PUT", "/api/catalog", [this](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    CatalogEntry e;
    e.instrument_name = req_string(j, "instrument_name");
    e.description = opt_string(j, "description").value_or("");
    e.room = req_string(j, "room");
    e.shelf = opt_string(j, "shelf").value_or("");
    if (const json* m = member(j, "media_refs")) {
      if (!m->is_array()) bad_request("'media_refs' must be an array of strings");
      for (const json& r : *m) {
        if (!r.is_string()) bad_request("'media_refs' must be an array of strings");
        e.media_refs.push_back(r.get<std::string>());
      }
    }
    return json_response(to_json(InstrumentCatalog(store_).upsert(e)));
  });
  add("POST", "/api/catalog/import", [this](const Params&, const HttpRequest& req) {
    return json_response({{"imported", InstrumentCatalog(store_).import_csv(req.body)}});
  });
  add("GET", "/api/catalog/locate/{name}", [this](const Params& p, const HttpRequest&) {
    InstrumentLocation loc = InstrumentCatalog(store_).locate(p.at("name"));
    return json_response({{"instrument_name", loc.instrument_name},
                          {"room", loc.room},
                          {"shelf", loc.shelf},
                          {"description", loc.description}});
  });
  add("GET", "/api/catalog/jobs", [this](const Params&, const HttpRequest&) {
    json out = json::array();
    for (const auto& t : InstrumentCatalog(store_).jobs()) out.push_back(to_json(t));
    return json_response(out);
  });
  add("GET", "/api/catalog/jobs/{type}", [this](const Params& p, const HttpRequest&) {
    json rows = json::array();
    for (const auto& r : InstrumentCatalog(store_).job_requirements(p.at("type"))) {
      rows.push_back({{"instrument_name", r.instrument_name},
                      {"quantity", r.quantity},
                      {"available", r.available ? json(*r.available) : json(nullptr)}});
    }
    return json_response({{"job_type", p.at("type")}, {"requirements", std::move(rows)}});
  });
  add("PUT", "/api/catalog/jobs/{type}", [this](const Params& p, const HttpRequest& req) {
    json j = body_json(req);
    JobTemplate t;
    t.job_type = p.at("type");
    const json* reqs = member(j, "required_instruments");
    if (!reqs || !reqs->is_array()) bad_request("'required_instruments' must be an array");
    for (const json& r : *reqs) {
      if (!r.is_object()) bad_request("each requirement must be an object");
      t.required_instruments.push_back({req_string(r, "instrument_name"), req_int(r, "quantity")});
    }
    return json_response(to_json(InstrumentCatalog(store_).set_job(t)));
  });
  add("GET", "/api/catalog/integrity", [this](const Params&, const HttpRequest&) {
    json dangling = json::array();
    for (const auto& d : InstrumentCatalog(store_).check_integrity()) {
      dangling.push_back({{"job_type", d.job_type}, {"instrument_name", d.instrument_name}});
    }
    bool ok = dangling.empty();
    return json_response({{"ok", ok}, {"dangling", std::move(dangling)}});
  });

  // persistence_backup
  add("GET", "/api/store", [this](const Params&, const HttpRequest&) {
    auto state = store_.snapshot();
    return json_response({{"persistent", store_.persistent()},
                          {"root", store_.root().string()},
                          {"generation", store_.generation()},
                          {"schema_version", Store::kSchemaVersion},
                          {"content_digest", state_digest(*state)},
                          {"counts", counts_json(*state)}});
  });
  auto default_archive_path = [this]() {
    fs::path dir = config_.backup_dir;
    if (dir.empty()) {
      if (!store_.persistent()) {
        bad_request("'dest' is required when the store has no directory");
      }
      // Beside the store, not in it: a restore replaces the whole store directory.
      fs::path root = store_.root();
      if (!root.has_filename()) root = root.parent_path();
      dir = root.parent_path() / (root.filename().string() + "-backups");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::string stamp = format_timestamp(store_.now());
    std::erase_if(stamp, [](char c) { return c == '-' || c == ':'; });
    return dir / ("survstore-" + stamp + ".archive");
  };
  auto receipt_json = [](const BackupReceipt& r) {
    return json{{"path", r.path.string()},
                {"size", r.size},
                {"sha256", r.sha256},
                {"manifest", r.manifest}};
  };
  add("POST", "/api/backup", [this, default_archive_path, receipt_json](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    auto dest = opt_string(j, "dest");
    fs::path path = dest ? fs::path(*dest) : default_archive_path();
    return json_response(receipt_json(create_backup(store_, path)), 201);
  });
  add("POST", "/api/backup/upload", [this, default_archive_path, receipt_json](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    std::string url = opt_string(j, "url").value_or(config_.backup_url);
    json out = json::object();
    fs::path archive;
    if (auto given = opt_string(j, "archive")) {
      archive = *given;
    } else {
      BackupReceipt created = create_backup(store_, default_archive_path());
      archive = created.path;
      out["backup"] = receipt_json(created);
    }
    UploadReceipt r = upload_backup(archive, url);
    out["archive"] = archive.string();
    out["status"] = r.status;
    out["size"] = r.size;
    out["local_digest"] = r.local_digest;
    out["remote_digest"] = r.remote_digest;
    return json_response(out);
  });
  add("POST", "/api/backup/restore", [](const Params&, const HttpRequest& req) {
    json j = body_json(req);
    auto store = restore_backup(req_string(j, "archive"), req_string(j, "target"),
                                opt_bool(j, "overwrite").value_or(false));
    auto state = store->snapshot();
    return json_response({{"target", store->root().string()},
                          {"generation", store->generation()},
                          {"content_digest", state_digest(*state)},
                          {"counts", counts_json(*state)}});
  });
}

}  // namespace survstore
