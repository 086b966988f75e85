#include "survstore/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "survstore/api.hpp"
#include "survstore/error.hpp"
#include "survstore/http.hpp"
#include "survstore/store.hpp"
#include "survstore/text.hpp"

namespace survstore {

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

// ---------------------------------------------------------------- request helpers

struct Call {
  std::string method;
  std::string target;
  std::string body;
};

enum class View { Auto, Raw, Curve, Levels, Note };

std::string url_encode(std::string_view text) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

std::string with_query(std::string path,
                       const std::vector<std::pair<std::string, std::optional<std::string>>>& params) {
  char sep = '?';
  for (const auto& [key, value] : params) {
    if (!value) continue;
    path += sep;
    path += key + "=" + url_encode(*value);
    sep = '&';
  }
  return path;
}

std::string read_bytes(const std::string& path) {
  if (path == "-") {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    return buffer.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Inaccessible, "cannot read " + path, {{"path", path}});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json read_input(const std::optional<std::string>& path) {
  if (!path) return json::object();
  json j = json::parse(read_bytes(*path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw UsageError("--input must name a file holding a JSON object");
  }
  return j;
}

/// "E,N" or "E,N,Z".
json point_arg(const std::string& text) {
  json out = json::array();
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t used = 0;
      std::string t = trim(part);
      double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("expected a point as E,N or E,N,Z but got '" + text + "'");
    }
  }
  if (out.size() < 2 || out.size() > 3) {
    throw UsageError("expected a point as E,N or E,N,Z but got '" + text + "'");
  }
  return out;
}

/// "Name:qty" or "Name:qty:serial1,serial2".
json item_arg(const std::string& text, bool with_serials) {
  std::size_t first = text.find(':');
  if (first == std::string::npos || first == 0) {
    throw UsageError("expected NAME:QUANTITY but got '" + text + "'");
  }
  std::size_t second = with_serials ? text.find(':', first + 1) : std::string::npos;
  std::string qty = text.substr(first + 1, second == std::string::npos ? std::string::npos
                                                                        : second - first - 1);
  std::int64_t quantity;
  try {
    std::size_t used = 0;
    quantity = std::stoll(qty, &used);
    if (used != qty.size()) throw std::invalid_argument(qty);
  } catch (const std::exception&) {
    throw UsageError("expected NAME:QUANTITY but got '" + text + "'");
  }
  json item = {{"instrument_name", text.substr(0, first)}, {"quantity", quantity}};
  if (second != std::string::npos) {
    json serials = json::array();
    std::stringstream in(text.substr(second + 1));
    std::string s;
    while (std::getline(in, s, ',')) serials.push_back(trim(s));
    item["serials"] = serials;
  }
  return item;
}

// ---------------------------------------------------------------- rendering

std::string number_text(const std::string& key, double v) {
  char buf[64];
  if (key == "radians") {
    std::snprintf(buf, sizeof buf, "%.10f", v);
  } else if (key == "degrees") {
    std::snprintf(buf, sizeof buf, "%.6f", v);
  } else if (key == "value" || key == "area") {
    std::snprintf(buf, sizeof buf, "%.12g", v);
  } else {
    return format_fixed(v, 3);
  }
  return buf;
}

/// Terminal columns of UTF-8 text (one per code point).
std::size_t display_width(std::string_view text) {
  return static_cast<std::size_t>(
      std::count_if(text.begin(), text.end(), [](char ch) { return (ch & 0xC0) != 0x80; }));
}

std::string cell_text(const std::string& key, const json& v) {
  switch (v.type()) {
    case json::value_t::null: return "";
    case json::value_t::boolean: return v.get<bool>() ? "yes" : "no";
    case json::value_t::string: return v.get<std::string>();
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return v.dump();
    case json::value_t::number_float: return number_text(key, v.get<double>());
    case json::value_t::array: {
      bool scalars = std::all_of(v.begin(), v.end(), [](const json& e) { return !e.is_structured(); });
      if (!scalars) return std::to_string(v.size()) + " item(s)";
      std::string out;
      for (const auto& e : v) out += (out.empty() ? "" : ", ") + cell_text(key, e);
      return out;
    }
    case json::value_t::object:
      if (v.contains("dms")) return v["dms"].get<std::string>();
      return v.dump();
    default: return v.dump();
  }
}

void render_rows(const json& rows, std::ostream& out, const std::string& indent,
                 std::vector<std::string> columns = {}) {
  if (rows.empty()) {
    out << indent << "(none)\n";
    return;
  }
  for (const auto& row : rows) {
    for (const auto& [key, value] : row.items()) {
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
    }
  }
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) width[c] = columns[c].size();
  for (const auto& row : rows) {
    std::vector<std::string> line;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      line.push_back(row.contains(columns[c]) ? cell_text(columns[c], row[columns[c]]) : "");
      width[c] = std::max(width[c], display_width(line.back()));
    }
    cells.push_back(std::move(line));
  }
  auto emit = [&](const std::vector<std::string>& line) {
    std::string text = indent;
    for (std::size_t c = 0; c < line.size(); ++c) {
      text += line[c];
      if (c + 1 < line.size()) text += std::string(width[c] - display_width(line[c]) + 2, ' ');
    }
    out << text << "\n";
  };
  emit(columns);
  for (const auto& line : cells) emit(line);
}

bool is_table(const json& v) {
  return v.is_array() && !v.empty() &&
         std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_object(); });
}

void render_generic(const json& v, std::ostream& out, const std::string& indent = "") {
  if (v.is_array()) {
    if (v.empty() || is_table(v)) {
      render_rows(v, out, indent);
    } else {
      for (const auto& e : v) out << indent << cell_text("", e) << "\n";
    }
    return;
  }
  if (!v.is_object()) {
    out << indent << cell_text("", v) << "\n";
    return;
  }
  std::size_t width = 0;
  for (const auto& [key, value] : v.items()) width = std::max(width, key.size());
  for (const auto& [key, value] : v.items()) {
    if (is_table(value) || (value.is_object() && !value.contains("dms"))) {
      out << indent << key << ":\n";
      render_generic(value, out, indent + "  ");
    } else {
      out << indent << key << std::string(width - key.size() + 2, ' ') << cell_text(key, value)
          << "\n";
    }
  }
}

void render_curve(const json& c, std::ostream& out) {
  auto m = [&](const char* key) { return format_fixed(c[key].get<double>(), 3); };
  out << "Circular curve report\n";
  out << "  Δ=" << c["deflection"]["dms"].get<std::string>() << "  deflection angle\n";
  out << "  R=" << m("radius") << " m  radius\n";
  out << "  L=" << m("curve_length") << " m  curve length\n";
  out << "  T=" << m("tangent_length") << " m  tangent length\n";
  out << "  E=" << m("external_distance") << " m  external distance\n";
  out << "  M=" << m("mid_ordinate") << " m  mid-ordinate\n";
  out << "  LC=" << m("long_chord") << " m  long chord\n";
  out << "  T1=" << m("chainage_t1") << "  chainage of first tangent point\n";
  out << "  T2=" << m("chainage_t2") << "  chainage of second tangent point\n";
  out << "  initial sub-chord=" << m("initial_subchord") << " m\n";
  out << "  full chords=" << c["full_chords"].get<int>() << " x " << m("standard_chord") << " m\n";
  out << "  final sub-chord=" << m("final_subchord") << " m\n";
  json rows = json::array();
  for (const auto& p : c["pegs"]) {
    rows.push_back({{"peg", p["name"]},
                    {"chainage", format_fixed(p["chainage"].get<double>(), 3)},
                    {"chord", format_fixed(p["chord"].get<double>(), 3)},
                    {"tangential", p["tangential"]["dms"]},
                    {"cumulative", p["cumulative"]["dms"]}});
  }
  out << "\n";
  render_rows(rows, out, "", {"peg", "chainage", "chord", "tangential", "cumulative"});
}

void render_levels(const json& b, std::ostream& out) {
  bool rise_fall = b["method"] == "rise_fall";
  auto col = [](const json& v) { return v.is_null() ? std::string() : format_fixed(v.get<double>(), 3); };
  json rows = json::array();
  for (const auto& r : b["rows"]) {
    json row = {{"point", r["point"]}, {"BS", col(r["bs"])}, {"IS", col(r["is"])}, {"FS", col(r["fs"])}};
    if (rise_fall) {
      row["rise"] = col(r["rise"]);
      row["fall"] = col(r["fall"]);
    } else {
      row["HPC"] = col(r["hpc"]);
    }
    row["RL"] = col(r["rl"]);
    row["remarks"] = r["remarks"];
    rows.push_back(row);
  }
  // Keep the classic column order rather than json's sorted keys.
  std::vector<std::string> order = {"point", "BS", "IS", "FS"};
  if (rise_fall) {
    order.insert(order.end(), {"rise", "fall"});
  } else {
    order.push_back("HPC");
  }
  order.insert(order.end(), {"RL", "remarks"});
  std::vector<std::size_t> width(order.size());
  for (std::size_t c = 0; c < order.size(); ++c) {
    width[c] = order[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], cell_text("", r[order[c]]).size());
  }
  auto emit = [&](auto get) {
    std::string line;
    for (std::size_t c = 0; c < order.size(); ++c) {
      std::string t = get(c);
      line += t;
      if (c + 1 < order.size()) line += std::string(width[c] - t.size() + 2, ' ');
    }
    out << line << "\n";
  };
  out << "Level book (" << b["method"].get<std::string>() << ")\n";
  emit([&](std::size_t c) { return order[c]; });
  for (const auto& r : rows) emit([&](std::size_t c) { return cell_text("", r[order[c]]); });
  const json& s = b["sums"];
  out << "ΣBS=" << format_fixed(s["bs"].get<double>(), 3)
      << "  ΣFS=" << format_fixed(s["fs"].get<double>(), 3);
  if (rise_fall) {
    out << "  Σrise=" << format_fixed(s["rise"].get<double>(), 3)
        << "  Σfall=" << format_fixed(s["fall"].get<double>(), 3);
  }
  out << "\n";
  if (!b["misclose"].is_null()) {
    out << "closing RL=" << format_fixed(b["closing_rl"].get<double>(), 3)
        << "  misclose=" << format_fixed(b["misclose"].get<double>(), 3) << "\n";
  }
  out << "arithmetic checks: " << (b["checks_pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
  for (const auto& f : b["check_failures"]) out << "  " << f.get<std::string>() << "\n";
}

// ---------------------------------------------------------------- execution context

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string data_dir;
  std::string format = "table";
  std::unique_ptr<Store> store;
  std::unique_ptr<ApiService> api;

  ApiService& service(bool persistent) {
    if (!api) {
      store = persistent ? Store::open(data_dir) : Store::in_memory();
      api = std::make_unique<ApiService>(*store, ApiConfig{env_or("SURVSTORE_BACKUP_URL", ""), {}});
    }
    return *api;
  }

  int invoke(bool persistent, const Call& call, View view, const std::optional<std::string>& out_file = {}) {
    HttpResponse r = service(persistent).handle(call.method, call.target, call.body);
    if (r.status >= 400) {
      json e = json::parse(r.body, nullptr, false);
      if (!e.is_discarded() && e.contains("error")) {
        err << e["error"]["code"].get<std::string>() << ": " << e["error"]["message"].get<std::string>()
            << "\n";
        if (!e["error"]["details"].is_null()) err << e["error"]["details"].dump() << "\n";
      } else {
        err << "HTTP " << r.status << "\n";
      }
      return 1;
    }
    bool is_json = r.content_type.rfind("application/json", 0) == 0;
    if (view == View::Raw || !is_json) {
      if (out_file) {
        std::ofstream f(*out_file, std::ios::binary);
        f << r.body;
        if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + *out_file, {{"path", *out_file}});
      } else {
        out << r.body;
        if (!r.body.empty() && r.body.back() != '\n' && is_json) out << "\n";
      }
      return 0;
    }
    json body = json::parse(r.body);
    if (format == "json") {
      out << body.dump(2) << "\n";
      return 0;
    }
    switch (view) {
      case View::Curve: render_curve(body, out); break;
      case View::Levels: render_levels(body, out); break;
      case View::Note: out << body["text"].get<std::string>(); break;
      default: render_generic(body, out); break;
    }
    return 0;
  }
};

// ---------------------------------------------------------------- command table

using Run = std::function<int()>;

/// Declares a leaf subcommand whose callback selects `run`.
CLI::App* leaf(CLI::App* parent, const std::string& name, const std::string& description,
               Run* selected, Run run) {
  CLI::App* sub = parent->add_subcommand(name, description);
  sub->callback([selected, run = std::move(run)] { *selected = run; });
  return sub;
}

template <typename T>
void set_if(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

int serve(Context& ctx, const std::string& host, int port, const std::string& console_dir) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto store = Store::open(ctx.data_dir);
  ApiService api(*store, ApiConfig{env_or("SURVSTORE_BACKUP_URL", ""), {}});
  HttpServer server(ServeOptions{host, port, console_dir},
                    [&api](const HttpRequest& request) { return api.handle(request); });
  int bound = server.bind();
  ctx.out << "survstore listening on http://" << host << ":" << bound << " (store "
          << store->root().string() << ")" << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.run();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

void define_commands(CLI::App& app, Context& ctx, Run* selected) {
  Context* c = &ctx;

  // serve
  {
    auto o = std::make_shared<std::tuple<std::string, int, std::string>>(
        "127.0.0.1", std::stoi(env_or("SURVSTORE_PORT", "8741")), env_or("SURVSTORE_CONSOLE_DIR", "console"));
    auto* s = leaf(&app, "serve", "Run the HTTP JSON API", selected,
                   [c, o] { return serve(*c, std::get<0>(*o), std::get<1>(*o), std::get<2>(*o)); });
    s->add_option("--host", std::get<0>(*o), "Bind address")->capture_default_str();
    s->add_option("--port", std::get<1>(*o), "Port (SURVSTORE_PORT)")->capture_default_str();
    s->add_option("--console-dir", std::get<2>(*o), "Static files served under /")->capture_default_str();
  }

  // units
  {
    CLI::App* units = app.add_subcommand("units", "Angle and unit conversions");
    units->require_subcommand(1);
    auto angle = std::make_shared<std::pair<std::string, int>>("", 0);
    auto* a = leaf(units, "angle", "Parse an angle; show degrees, DMS and bearing", selected, [c, angle] {
      return c->invoke(false, {"POST", "/api/units/angle",
                               json{{"angle", angle->first}, {"dms_decimals", angle->second}}.dump()},
                       View::Auto);
    });
    a->add_option("angle", angle->first, "Decimal degrees or DMS, e.g. 30d15m36s")->required();
    a->add_option("--decimals", angle->second, "Decimals of arc seconds")->check(CLI::Range(0, 9));

    struct Convert { double value = 0; std::string from, to, kind = "length"; };
    auto cv = std::make_shared<Convert>();
    auto* v = leaf(units, "convert", "Convert a length or area", selected, [c, cv] {
      json body = {{"kind", cv->kind}, {"value", cv->value}, {"from", cv->from}, {"to", cv->to}};
      return c->invoke(false, {"POST", "/api/units/convert", body.dump()}, View::Auto);
    });
    v->add_option("value", cv->value)->required();
    v->add_option("--from", cv->from, "m, ft, m2, ha, acre, ft2")->required();
    v->add_option("--to", cv->to)->required();
    v->add_option("--kind", cv->kind)->check(CLI::IsMember({"length", "area"}))->capture_default_str();
  }

  // compute
  {
    CLI::App* compute = app.add_subcommand("compute", "Surveying computations");
    compute->require_subcommand(1);

    struct Area { std::vector<std::string> vertices; std::optional<std::string> input, unit; };
    auto ar = std::make_shared<Area>();
    auto* area = leaf(compute, "area", "Area by coordinates", selected, [c, ar] {
      json body = read_input(ar->input);
      if (!ar->vertices.empty()) {
        body["vertices"] = json::array();
        for (const auto& v : ar->vertices) body["vertices"].push_back(point_arg(v));
      }
      set_if(body, "unit", ar->unit);
      return c->invoke(false, {"POST", "/api/compute/area", body.dump()}, View::Auto);
    });
    area->add_option("--vertex,-v", ar->vertices, "Vertex as E,N (repeat in order)");
    area->add_option("--input", ar->input, "JSON file {\"vertices\": [[E,N], ...]}");
    area->add_option("--unit", ar->unit, "Also report in m2, ha, acre or ft2");

    struct JoinArgs { std::string from, to; int decimals = 0; };
    auto jo = std::make_shared<JoinArgs>();
    auto* join = leaf(compute, "join", "Bearing and distance between two points", selected, [c, jo] {
      json body = {{"from", point_arg(jo->from)}, {"to", point_arg(jo->to)}, {"dms_decimals", jo->decimals}};
      return c->invoke(false, {"POST", "/api/compute/join", body.dump()}, View::Auto);
    });
    join->add_option("--from", jo->from, "E,N")->required();
    join->add_option("--to", jo->to, "E,N")->required();
    join->add_option("--decimals", jo->decimals)->check(CLI::Range(0, 9));

    auto det = std::make_shared<std::string>();
    auto* detailing = leaf(compute, "detailing", "Detailing by rays", selected, [c, det] {
      return c->invoke(false, {"POST", "/api/compute/detailing", read_input(*det).dump()}, View::Auto);
    });
    detailing->add_option("--input", *det,
                          "JSON file: station, instrument_height, reference_bearing, "
                          "hcr_to_reference, observations[]")
        ->required();

    struct Curve {
      std::string deflection;
      std::optional<double> radius, length;
      double ip = 0, chord = 20;
      int decimals = 0;
    };
    auto cu = std::make_shared<Curve>();
    auto* curve = leaf(compute, "curve", "Horizontal circular curve setting-out", selected, [c, cu] {
      json body = {{"deflection", cu->deflection},
                   {"ip_chainage", cu->ip},
                   {"chord", cu->chord},
                   {"dms_decimals", cu->decimals}};
      set_if(body, "radius", cu->radius);
      set_if(body, "curve_length", cu->length);
      return c->invoke(false, {"POST", "/api/compute/curve", body.dump()}, View::Curve);
    });
    curve->add_option("--deflection", cu->deflection, "Deflection angle (degrees or DMS)")->required();
    curve->add_option("--radius", cu->radius, "Radius R in metres");
    curve->add_option("--length", cu->length, "Curve length L in metres");
    curve->add_option("--ip-chainage", cu->ip, "Through chainage of the intersection point")->required();
    curve->add_option("--chord", cu->chord, "Standard chord")->capture_default_str();
    curve->add_option("--decimals", cu->decimals, "Decimals of arc seconds")->check(CLI::Range(0, 9));

    struct Levels { std::string input; std::optional<std::string> method; std::optional<double> start, closing; };
    auto lv = std::make_shared<Levels>();
    auto* levels = leaf(compute, "levels", "Reduce a level book", selected, [c, lv] {
      json body;
      if (fold_case(fs::path(lv->input).extension().string()) == ".csv") {
        // Point,BS,IS,FS,Remarks
        auto rows = csv::parse(read_bytes(lv->input));
        body = json::object();
        body["rows"] = json::array();
        for (std::size_t i = 1; i < rows.size(); ++i) {
          const auto& r = rows[i];
          json row = {{"point", r.size() > 0 ? r[0] : ""}, {"remarks", r.size() > 4 ? r[4] : ""}};
          const char* keys[] = {"bs", "is", "fs"};
          for (std::size_t k = 0; k < 3; ++k) {
            std::string cell = r.size() > k + 1 ? trim(r[k + 1]) : "";
            if (cell.empty()) continue;
            try {
              row[keys[k]] = std::stod(cell);
            } catch (const std::exception&) {
              throw UsageError("row " + std::to_string(i) + ": '" + cell + "' is not a number");
            }
          }
          body["rows"].push_back(row);
        }
      } else {
        body = read_input(lv->input);
      }
      set_if(body, "method", lv->method);
      set_if(body, "start_rl", lv->start);
      set_if(body, "closing_rl", lv->closing);
      return c->invoke(false, {"POST", "/api/compute/levels", body.dump()}, View::Levels);
    });
    levels->add_option("--input", lv->input, "JSON book, or CSV with header Point,BS,IS,FS,Remarks")
        ->required();
    levels->add_option("--method", lv->method, "rise_fall or height_of_collimation");
    levels->add_option("--start-rl", lv->start, "Reduced level of the first point");
    levels->add_option("--closing-rl", lv->closing, "Known reduced level of the last point");
  }

  // beacon
  {
    CLI::App* beacon = app.add_subcommand("beacon", "Beacon registry");
    beacon->require_subcommand(1);

    struct Fields {
      std::optional<std::string> name, description, photo, surveyor, date;
      std::optional<double> easting, northing, elevation;
      std::optional<bool> marked;
      bool clear_elevation = false, clear_photo = false;
      std::int64_t id = 0;
    };
    auto fields_body = [](const Fields& f) {
      json body = json::object();
      set_if(body, "beacon_name", f.name);
      set_if(body, "easting", f.easting);
      set_if(body, "northing", f.northing);
      set_if(body, "elevation", f.elevation);
      set_if(body, "description", f.description);
      set_if(body, "photo_ref", f.photo);
      set_if(body, "revision_surveyor", f.surveyor);
      set_if(body, "revision_date", f.date);
      set_if(body, "marked", f.marked);
      if (f.clear_elevation) body["elevation"] = nullptr;
      if (f.clear_photo) body["photo_ref"] = nullptr;
      return body;
    };
    auto add_fields = [](CLI::App* sub, Fields& f, bool required) {
      auto* n = sub->add_option("--name", f.name, "Beacon name");
      auto* e = sub->add_option("--easting,-E", f.easting, "Easting (m)");
      auto* no = sub->add_option("--northing,-N", f.northing, "Northing (m)");
      if (required) {
        n->required();
        e->required();
        no->required();
      }
      sub->add_option("--elevation,-Z", f.elevation, "Elevation (m)");
      sub->add_option("--description", f.description);
      sub->add_option("--photo", f.photo, "Photo path inside the store's media directory");
      sub->add_option("--surveyor", f.surveyor, "Revision surveyor");
      sub->add_option("--date", f.date, "Revision date YYYY-MM-DD");
      sub->add_option("--marked", f.marked, "true or false");
    };

    auto add = std::make_shared<Fields>();
    auto* a = leaf(beacon, "add", "Add a beacon", selected, [c, add, fields_body] {
      return c->invoke(true, {"POST", "/api/beacons", fields_body(*add).dump()}, View::Auto);
    });
    add_fields(a, *add, true);

    auto upd = std::make_shared<Fields>();
    auto* u = leaf(beacon, "update", "Edit a beacon", selected, [c, upd, fields_body] {
      return c->invoke(true, {"PUT", "/api/beacons/" + std::to_string(upd->id), fields_body(*upd).dump()},
                       View::Auto);
    });
    u->add_option("--id", upd->id)->required();
    add_fields(u, *upd, false);
    u->add_flag("--clear-elevation", upd->clear_elevation);
    u->add_flag("--clear-photo", upd->clear_photo);

    leaf(beacon, "list", "All beacons by name", selected,
         [c] { return c->invoke(true, {"GET", "/api/beacons", ""}, View::Auto); });

    auto q = std::make_shared<std::string>();
    leaf(beacon, "search", "Search names and descriptions", selected, [c, q] {
          return c->invoke(true, {"GET", with_query("/api/beacons", {{"q", *q}}), ""}, View::Auto);
        })->add_option("query", *q)->required();

    struct Show { std::int64_t id = 0; std::optional<std::string> unit; };
    auto sh = std::make_shared<Show>();
    auto* show = leaf(beacon, "show", "Show one beacon", selected, [c, sh] {
      return c->invoke(true, {"GET", with_query("/api/beacons/" + std::to_string(sh->id), {{"unit", sh->unit}}), ""},
                       View::Auto);
    });
    show->add_option("--id", sh->id)->required();
    show->add_option("--unit", sh->unit, "Also show coordinates in m or ft");

    auto del = std::make_shared<std::int64_t>(0);
    leaf(beacon, "delete", "Move a beacon to the recycle bin", selected, [c, del] {
          return c->invoke(true, {"DELETE", "/api/beacons/" + std::to_string(*del), ""}, View::Auto);
        })->add_option("--id", *del)->required();
    auto res = std::make_shared<std::int64_t>(0);
    leaf(beacon, "restore", "Restore a beacon from the recycle bin", selected, [c, res] {
          return c->invoke(true, {"POST", "/api/beacons/" + std::to_string(*res) + "/restore", ""}, View::Auto);
        })->add_option("--id", *res)->required();

    struct Photo { std::int64_t id = 0; std::string file; };
    auto ph = std::make_shared<Photo>();
    auto* photo = leaf(beacon, "photo", "Attach a photo file to a beacon", selected, [c, ph] {
      std::string name = fs::path(ph->file).filename().string();
      return c->invoke(true,
                       {"PUT", with_query("/api/beacons/" + std::to_string(ph->id) + "/photo", {{"file", name}}),
                        read_bytes(ph->file)},
                       View::Auto);
    });
    photo->add_option("--id", ph->id)->required();
    photo->add_option("--file", ph->file, "Image file to copy into the store")->required();

    struct PhotoGet { std::int64_t id = 0; std::optional<std::string> out; };
    auto pg = std::make_shared<PhotoGet>();
    auto* photo_get = leaf(beacon, "photo-get", "Write a beacon's photo bytes", selected, [c, pg] {
      return c->invoke(true, {"GET", "/api/beacons/" + std::to_string(pg->id) + "/photo", ""}, View::Raw,
                       pg->out);
    });
    photo_get->add_option("--id", pg->id)->required();
    photo_get->add_option("--out", pg->out, "Output file (default stdout)");

    struct Export { std::string unit = "m"; std::optional<std::string> ids, out; };
    auto ex = std::make_shared<Export>();
    auto* exp = leaf(beacon, "export", "Export beacons as CSV", selected, [c, ex] {
      return c->invoke(true, {"GET", with_query("/api/beacons/export.csv", {{"unit", ex->unit}, {"ids", ex->ids}}), ""},
                       View::Raw, ex->out);
    });
    exp->add_option("--unit", ex->unit, "m or ft")->capture_default_str();
    exp->add_option("--ids", ex->ids, "Comma-separated ids (default all)");
    exp->add_option("--out", ex->out, "Output file (default stdout)");

    struct JoinNames { std::string a, b; };
    auto jn = std::make_shared<JoinNames>();
    auto* bj = leaf(beacon, "join", "Bearing and distance between two beacons", selected, [c, jn] {
      return c->invoke(true, {"GET", with_query("/api/beacons/join", {{"a", jn->a}, {"b", jn->b}}), ""}, View::Auto);
    });
    bj->add_option("from", jn->a, "Beacon name")->required();
    bj->add_option("to", jn->b, "Beacon name")->required();

    struct Geo { std::optional<std::string> ids, out; };
    auto geo = std::make_shared<Geo>();
    auto* gj = leaf(beacon, "geojson", "Export beacons as a GeoJSON FeatureCollection", selected, [c, geo] {
      return c->invoke(true, {"GET", with_query("/api/beacons/geojson", {{"ids", geo->ids}}), ""}, View::Raw,
                       geo->out);
    });
    gj->add_option("--ids", geo->ids, "Comma-separated ids (default all)");
    gj->add_option("--out", geo->out, "Output file (default stdout)");
  }

  // lend
  {
    CLI::App* lend = app.add_subcommand("lend", "Lending ledger");
    lend->require_subcommand(1);

    struct New {
      std::optional<std::string> input, name, department, phone, remarks, date;
      std::vector<std::string> items;
    };
    auto nw = std::make_shared<New>();
    auto* n = leaf(lend, "new", "Record a lending", selected, [c, nw] {
      json body = read_input(nw->input);
      set_if(body, "person_name", nw->name);
      set_if(body, "person_department", nw->department);
      set_if(body, "person_phone", nw->phone);
      set_if(body, "remarks", nw->remarks);
      set_if(body, "date", nw->date);
      if (!nw->items.empty()) {
        body["details"] = json::array();
        for (const auto& item : nw->items) body["details"].push_back(item_arg(item, true));
      }
      return c->invoke(true, {"POST", "/api/lendings", body.dump()}, View::Auto);
    });
    n->add_option("--input", nw->input, "JSON file with the lending");
    n->add_option("--name", nw->name, "Borrower name");
    n->add_option("--department", nw->department);
    n->add_option("--phone", nw->phone);
    n->add_option("--remarks", nw->remarks);
    n->add_option("--date", nw->date, "Lending time (default now)");
    n->add_option("--item", nw->items, "NAME:QTY or NAME:QTY:SERIAL1,SERIAL2 (repeat)");

    struct Return { std::int64_t id = 0; std::string remarks; };
    auto rt = std::make_shared<Return>();
    auto* r = leaf(lend, "return", "Return a lending and issue the return note", selected, [c, rt] {
      return c->invoke(true,
                       {"POST", "/api/lendings/" + std::to_string(rt->id) + "/return",
                        json{{"remarks", rt->remarks}}.dump()},
                       View::Note);
    });
    r->add_option("--id", rt->id)->required();
    r->add_option("--remarks", rt->remarks);

    auto note = std::make_shared<std::int64_t>(0);
    leaf(lend, "note", "Reprint the return note of a returned lending", selected, [c, note] {
          return c->invoke(true, {"GET", "/api/lendings/" + std::to_string(*note) + "/return-note", ""},
                           View::Note);
        })->add_option("--id", *note)->required();

    auto incl = std::make_shared<bool>(false);
    leaf(lend, "list", "Lendings, newest first", selected, [c, incl] {
          return c->invoke(true,
                           {"GET", with_query("/api/lendings", {{"include_deleted", *incl ? "true" : "false"}}), ""},
                           View::Auto);
        })->add_flag("--include-deleted", *incl);

    struct Search { std::string q; bool deleted = false; };
    auto se = std::make_shared<Search>();
    auto* s = leaf(lend, "search", "Search borrowers, departments, instruments and serials", selected, [c, se] {
      return c->invoke(
          true,
          {"GET", with_query("/api/lendings", {{"q", se->q}, {"include_deleted", se->deleted ? "true" : "false"}}), ""},
          View::Auto);
    });
    s->add_option("query", se->q)->required();
    s->add_flag("--include-deleted", se->deleted);

    auto show = std::make_shared<std::int64_t>(0);
    leaf(lend, "show", "Show one lending", selected, [c, show] {
          return c->invoke(true, {"GET", "/api/lendings/" + std::to_string(*show), ""}, View::Auto);
        })->add_option("--id", *show)->required();
    auto del = std::make_shared<std::int64_t>(0);
    leaf(lend, "delete", "Move a lending to the recycle bin", selected, [c, del] {
          return c->invoke(true, {"DELETE", "/api/lendings/" + std::to_string(*del), ""}, View::Auto);
        })->add_option("--id", *del)->required();
    auto res = std::make_shared<std::int64_t>(0);
    leaf(lend, "restore", "Restore a lending from the recycle bin", selected, [c, res] {
          return c->invoke(true, {"POST", "/api/lendings/" + std::to_string(*res) + "/restore", ""}, View::Auto);
        })->add_option("--id", *res)->required();
    leaf(lend, "bin", "Recycle bin contents", selected,
         [c] { return c->invoke(true, {"GET", "/api/recycle-bin", ""}, View::Auto); });

    struct Purge { std::int64_t id = 0; bool force = false; };
    auto pu = std::make_shared<Purge>();
    auto* p = leaf(lend, "purge", "Permanently remove a returned lending from the bin", selected, [c, pu] {
      return c->invoke(true,
                       {"DELETE", with_query("/api/recycle-bin/lendings/" + std::to_string(pu->id),
                                             {{"force", pu->force ? "true" : "false"}}),
                        ""},
                       View::Auto);
    });
    p->add_option("--id", pu->id)->required();
    p->add_flag("--force", pu->force, "Confirm permanent removal");
  }

  // stock
  {
    CLI::App* stock = app.add_subcommand("stock", "Instrument stock and statistics");
    stock->require_subcommand(1);
    leaf(stock, "list", "Instrument counts", selected,
         [c] { return c->invoke(true, {"GET", "/api/instruments", ""}, View::Auto); });

    struct Upsert { std::string name; std::int64_t total = 0; std::optional<std::int64_t> faulty; std::optional<std::string> description; };
    auto up = std::make_shared<Upsert>();
    auto* u = leaf(stock, "upsert", "Create or edit an instrument's counts", selected, [c, up] {
      json body = {{"instrument_name", up->name}, {"total", up->total}};
      set_if(body, "faulty", up->faulty);
      set_if(body, "description", up->description);
      return c->invoke(true, {"PUT", "/api/instruments", body.dump()}, View::Auto);
    });
    u->add_option("--name", up->name)->required();
    u->add_option("--total", up->total)->required();
    u->add_option("--faulty", up->faulty);
    u->add_option("--description", up->description);

    leaf(stock, "availability", "Available, lent and faulty counts", selected,
         [c] { return c->invoke(true, {"GET", "/api/stats/availability", ""}, View::Auto); });

    struct Daily { std::string from, to; };
    auto dl = std::make_shared<Daily>();
    auto* d = leaf(stock, "daily", "Instruments lent per day", selected, [c, dl] {
      return c->invoke(true, {"GET", with_query("/api/stats/daily", {{"from", dl->from}, {"to", dl->to}}), ""},
                       View::Auto);
    });
    d->add_option("--from", dl->from, "YYYY-MM-DD")->required();
    d->add_option("--to", dl->to, "YYYY-MM-DD")->required();
  }

  // catalog
  {
    CLI::App* catalog = app.add_subcommand("catalog", "Instrument catalog and job types");
    catalog->require_subcommand(1);

    auto q = std::make_shared<std::string>();
    leaf(catalog, "search", "Search names and descriptions", selected, [c, q] {
          return c->invoke(true, {"GET", with_query("/api/catalog", {{"q", *q}}), ""}, View::Auto);
        })->add_option("query", *q, "Text to match (default all)");

    auto loc = std::make_shared<std::string>();
    leaf(catalog, "locate", "Room and shelf of an instrument", selected, [c, loc] {
          return c->invoke(true, {"GET", "/api/catalog/locate/" + *loc, ""}, View::Auto);
        })->add_option("name", *loc)->required();

    struct Entry { std::string name, room; std::optional<std::string> shelf, description; std::vector<std::string> media; };
    auto en = std::make_shared<Entry>();
    auto* up = leaf(catalog, "upsert", "Create or edit a catalog entry", selected, [c, en] {
      json body = {{"instrument_name", en->name}, {"room", en->room}, {"media_refs", en->media}};
      set_if(body, "shelf", en->shelf);
      set_if(body, "description", en->description);
      return c->invoke(true, {"PUT", "/api/catalog", body.dump()}, View::Auto);
    });
    up->add_option("--name", en->name)->required();
    up->add_option("--room", en->room)->required();
    up->add_option("--shelf", en->shelf);
    up->add_option("--description", en->description);
    up->add_option("--media", en->media, "Media path inside the store (repeat)");

    auto file = std::make_shared<std::string>();
    leaf(catalog, "import", "Import InstrumentName,Description,Room,Shelf CSV", selected, [c, file] {
          return c->invoke(true, {"POST", "/api/catalog/import", read_bytes(*file)}, View::Auto);
        })->add_option("--file", *file)->required();

    auto job = std::make_shared<std::string>();
    leaf(catalog, "job", "Instruments needed for a job type, with availability", selected, [c, job] {
          return c->invoke(true, {"GET", "/api/catalog/jobs/" + *job, ""}, View::Auto);
        })->add_option("type", *job)->required();
    leaf(catalog, "jobs", "All job types", selected,
         [c] { return c->invoke(true, {"GET", "/api/catalog/jobs", ""}, View::Auto); });

    struct JobSet { std::string type; std::vector<std::string> require; };
    auto js = std::make_shared<JobSet>();
    auto* set = leaf(catalog, "job-set", "Create or replace a job type", selected, [c, js] {
      json reqs = json::array();
      for (const auto& r : js->require) reqs.push_back(item_arg(r, false));
      return c->invoke(true, {"PUT", "/api/catalog/jobs/" + js->type, json{{"required_instruments", reqs}}.dump()},
                       View::Auto);
    });
    set->add_option("type", js->type)->required();
    set->add_option("--require", js->require, "NAME:QTY (repeat)")->required();

    leaf(catalog, "check", "Job requirements without a catalog entry", selected,
         [c] { return c->invoke(true, {"GET", "/api/catalog/integrity", ""}, View::Auto); });
  }

  // store
  {
    CLI::App* store = app.add_subcommand("store", "Store information");
    store->require_subcommand(1);
    leaf(store, "status", "Generation, counts and content digest", selected,
         [c] { return c->invoke(true, {"GET", "/api/store", ""}, View::Auto); });
  }

  // backup
  {
    CLI::App* backup = app.add_subcommand("backup", "Backup archives");
    backup->require_subcommand(1);

    auto dest = std::make_shared<std::optional<std::string>>();
    leaf(backup, "create", "Write a verified archive of the store", selected, [c, dest] {
          json body = json::object();
          set_if(body, "dest", *dest);
          return c->invoke(true, {"POST", "/api/backup", body.dump()}, View::Auto);
        })->add_option("--dest", *dest, "Archive path (default <store>-backups/)");

    struct Restore { std::string archive; std::optional<std::string> target; bool overwrite = false; };
    auto rs = std::make_shared<Restore>();
    auto* r = leaf(backup, "restore", "Restore an archive into a store directory", selected, [c, rs] {
      json body = {{"archive", fs::absolute(rs->archive).string()},
                   {"target", fs::absolute(rs->target.value_or(c->data_dir)).string()},
                   {"overwrite", rs->overwrite}};
      return c->invoke(false, {"POST", "/api/backup/restore", body.dump()}, View::Auto);
    });
    r->add_option("--archive", rs->archive)->required();
    r->add_option("--target", rs->target, "Store directory (default --data-dir)");
    r->add_flag("--overwrite", rs->overwrite, "Replace a non-empty target");

    struct Upload { std::optional<std::string> archive, url; };
    auto ul = std::make_shared<Upload>();
    auto* u = leaf(backup, "upload", "PUT an archive to the backup server", selected, [c, ul] {
      json body = json::object();
      set_if(body, "archive", ul->archive);
      set_if(body, "url", ul->url);
      return c->invoke(true, {"POST", "/api/backup/upload", body.dump()}, View::Auto);
    });
    u->add_option("--archive", ul->archive, "Archive to send (default: create one now)");
    u->add_option("--url", ul->url, "Server URL (default SURVSTORE_BACKUP_URL)");
  }
}

void collect_leaves(const CLI::App* app, const std::string& prefix, std::vector<std::string>& out) {
  auto subs = app->get_subcommands([](const CLI::App*) { return true; });
  if (subs.empty()) {
    out.push_back(prefix);
    return;
  }
  for (const CLI::App* sub : subs) {
    collect_leaves(sub, prefix.empty() ? sub->get_name() : prefix + " " + sub->get_name(), out);
  }
}

}  // namespace

std::vector<std::string> cli_command_paths() {
  std::ostringstream sink;
  Context ctx{sink, sink, {}, {}, nullptr, nullptr};
  CLI::App app("survstore");
  Run selected;
  define_commands(app, ctx, &selected);
  std::vector<std::string> out;
  for (const CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    collect_leaves(sub, sub->get_name(), out);
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err, env_or("SURVSTORE_DATA_DIR", "survstore-data"), "table", nullptr, nullptr};
  CLI::App app("Survey equipment store: beacons, lendings, catalog, computations, backups",
               "survstore");
  app.require_subcommand(1);
  app.add_option("--data-dir", ctx.data_dir, "Store directory (SURVSTORE_DATA_DIR)")
      ->capture_default_str();
  app.add_option("--format", ctx.format, "Output format")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();
  app.fallthrough();

  Run selected;
  try {
    define_commands(app, ctx, &selected);
  } catch (const std::exception& e) {
    err << "invalid environment: " << e.what() << "\n";
    return 2;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n";
    const CLI::App* context = &app;
    for (const CLI::App* sub = &app;;) {
      auto parsed = sub->get_subcommands();
      if (parsed.empty()) break;
      sub = context = parsed.front();
    }
    err << context->help();
    return 2;
  }

  if (!selected) {
    err << app.help();
    return 2;
  }
  try {
    return selected();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "INTERNAL: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace survstore
