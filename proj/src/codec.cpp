#include "survstore/codec.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "survstore/digest.hpp"
#include "survstore/error.hpp"
#include "survstore/text.hpp"

namespace survstore {

using nlohmann::json;

std::string_view table_name(Table table) {
  switch (table) {
    case Table::Beacons: return "beacons";
    case Table::Lendings: return "lendings";
    case Table::LendingDetails: return "lending_details";
    case Table::Instruments: return "instruments";
    case Table::Catalog: return "catalog";
    case Table::JobTemplates: return "job_templates";
    case Table::Recycle: return "recycle";
  }
  return "unknown";
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string_view kind_name(RecycleKind kind) {
  return kind == RecycleKind::Lending ? "lending" : "beacon";
}

// Strict field readers. Each throws std::invalid_argument with the field
// name; the table decoder turns that into CorruptTable with location.
const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw std::invalid_argument("record is not an object");
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return *it;
}

std::string get_string(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw std::invalid_argument(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::int64_t get_int(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) {
    throw std::invalid_argument(std::string("field '") + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

double get_number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw std::invalid_argument(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::optional<double> get_optional_number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (v.is_null()) return std::nullopt;
  return get_number(j, key);
}

std::optional<std::string> get_optional_string(const json& j, const char* key) {
  const json& v = field(j, key);
  if (v.is_null()) return std::nullopt;
  return get_string(j, key);
}

bool get_bool(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_boolean()) throw std::invalid_argument(std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

std::vector<std::string> get_strings(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_array()) throw std::invalid_argument(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) {
      throw std::invalid_argument(std::string("field '") + key + "' must hold strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

Timestamp get_timestamp(const json& j, const char* key) {
  try {
    return parse_timestamp(get_string(j, key));
  } catch (const Error&) {
    throw std::invalid_argument(std::string("field '") + key + "' is not a timestamp");
  }
}

Date get_date(const json& j, const char* key) {
  try {
    return parse_date(get_string(j, key));
  } catch (const Error&) {
    throw std::invalid_argument(std::string("field '") + key + "' is not a date");
  }
}

BeaconRecord beacon_from_json(const json& j) {
  BeaconRecord b;
  b.beacon_id = get_int(j, "beacon_id");
  b.beacon_name = get_string(j, "beacon_name");
  b.position.easting = get_number(j, "easting");
  b.position.northing = get_number(j, "northing");
  b.position.elevation = get_optional_number(j, "elevation");
  b.description = get_string(j, "description");
  b.photo_ref = get_optional_string(j, "photo_ref");
  b.revision_surveyor = get_string(j, "revision_surveyor");
  b.revision_date = get_date(j, "revision_date");
  b.marked = get_bool(j, "marked");
  b.deleted = get_bool(j, "deleted");
  return b;
}

InstrumentStock instrument_from_json(const json& j) {
  InstrumentStock s;
  s.instrument_id = get_int(j, "instrument_id");
  s.instrument_name = get_string(j, "instrument_name");
  s.total = get_int(j, "total");
  s.lent = get_int(j, "lent");
  s.faulty = get_int(j, "faulty");
  s.description = get_string(j, "description");
  return s;
}

json lending_row(const LendingRecord& l) {
  return {{"lending_id", l.lending_id},
          {"date", format_timestamp(l.date)},
          {"person_name", l.person_name},
          {"person_department", l.person_department},
          {"person_phone", l.person_phone},
          {"is_returned", l.is_returned},
          {"return_date", l.return_date ? json(format_timestamp(*l.return_date)) : json(nullptr)},
          {"remarks", l.remarks},
          {"total_instru", l.total_instru},
          {"deleted", l.deleted}};
}

LendingRecord lending_from_json(const json& j) {
  LendingRecord l;
  l.lending_id = get_int(j, "lending_id");
  l.date = get_timestamp(j, "date");
  l.person_name = get_string(j, "person_name");
  l.person_department = get_string(j, "person_department");
  l.person_phone = get_string(j, "person_phone");
  l.is_returned = get_bool(j, "is_returned");
  if (!field(j, "return_date").is_null()) l.return_date = get_timestamp(j, "return_date");
  l.remarks = get_string(j, "remarks");
  l.total_instru = get_int(j, "total_instru");
  l.deleted = get_bool(j, "deleted");
  return l;
}

LendingDetail detail_from_json(const json& j) {
  LendingDetail d;
  d.detail_id = get_int(j, "detail_id");
  d.instrument_name = get_string(j, "instrument_name");
  d.quantity = get_int(j, "quantity");
  d.serials = get_strings(j, "serials");
  return d;
}

CatalogEntry catalog_from_json(const json& j) {
  CatalogEntry c;
  c.instrument_name = get_string(j, "instrument_name");
  c.description = get_string(j, "description");
  c.room = get_string(j, "room");
  c.shelf = get_string(j, "shelf");
  c.media_refs = get_strings(j, "media_refs");
  return c;
}

JobTemplate job_from_json(const json& j) {
  JobTemplate t;
  t.job_type = get_string(j, "job_type");
  const json& reqs = field(j, "required_instruments");
  if (!reqs.is_array()) throw std::invalid_argument("field 'required_instruments' must be an array");
  for (const auto& r : reqs) {
    t.required_instruments.push_back({get_string(r, "instrument_name"), get_int(r, "quantity")});
  }
  return t;
}

RecycleEntry recycle_from_json(const json& j) {
  RecycleEntry r;
  std::string kind = get_string(j, "kind");
  if (kind == "lending") {
    r.kind = RecycleKind::Lending;
  } else if (kind == "beacon") {
    r.kind = RecycleKind::Beacon;
  } else {
    throw std::invalid_argument("field 'kind' must be 'lending' or 'beacon'");
  }
  r.id = get_int(j, "id");
  r.deleted_at = get_timestamp(j, "deleted_at");
  return r;
}

[[noreturn]] void corrupt(Table table, std::optional<std::size_t> record, const std::string& why,
                          json extra = json::object()) {
  json details = {{"table", table_name(table)}};
  if (record) details["record"] = *record;
  details.update(extra);
  std::string where = std::string(table_name(table));
  if (record) where += " record " + std::to_string(*record);
  throw Error(ErrorCode::CorruptTable, "corrupt table " + where + ": " + why, details);
}

}  // namespace

json to_json(const GridPoint& p) {
  return {{"easting", p.easting}, {"northing", p.northing}, {"elevation", optional_number(p.elevation)}};
}

json to_json(const BeaconRecord& b) {
  return {{"beacon_id", b.beacon_id},
          {"beacon_name", b.beacon_name},
          {"easting", b.position.easting},
          {"northing", b.position.northing},
          {"elevation", optional_number(b.position.elevation)},
          {"description", b.description},
          {"photo_ref", b.photo_ref ? json(*b.photo_ref) : json(nullptr)},
          {"revision_surveyor", b.revision_surveyor},
          {"revision_date", format_date(b.revision_date)},
          {"marked", b.marked},
          {"deleted", b.deleted}};
}

json to_json(const InstrumentStock& s) {
  return {{"instrument_id", s.instrument_id}, {"instrument_name", s.instrument_name},
          {"total", s.total},                 {"lent", s.lent},
          {"faulty", s.faulty},               {"description", s.description}};
}

json to_json(const LendingDetail& d) {
  return {{"detail_id", d.detail_id},
          {"instrument_name", d.instrument_name},
          {"quantity", d.quantity},
          {"serials", d.serials}};
}

json to_json(const LendingRecord& l) {
  json j = lending_row(l);
  json details = json::array();
  for (const auto& d : l.details) details.push_back(to_json(d));
  j["details"] = std::move(details);
  return j;
}

json to_json(const CatalogEntry& c) {
  return {{"instrument_name", c.instrument_name},
          {"description", c.description},
          {"room", c.room},
          {"shelf", c.shelf},
          {"media_refs", c.media_refs}};
}

json to_json(const JobTemplate& t) {
  json reqs = json::array();
  for (const auto& r : t.required_instruments) {
    reqs.push_back({{"instrument_name", r.instrument_name}, {"quantity", r.quantity}});
  }
  return {{"job_type", t.job_type}, {"required_instruments", std::move(reqs)}};
}

json to_json(const RecycleEntry& r) {
  return {{"kind", kind_name(r.kind)}, {"id", r.id}, {"deleted_at", format_timestamp(r.deleted_at)}};
}

json to_json(const Sequences& s) {
  return {{"beacon", s.beacon},
          {"lending", s.lending},
          {"lending_detail", s.lending_detail},
          {"instrument", s.instrument}};
}

Sequences sequences_from_json(const json& j) {
  try {
    Sequences s;
    s.beacon = get_int(j, "beacon");
    s.lending = get_int(j, "lending");
    s.lending_detail = get_int(j, "lending_detail");
    s.instrument = get_int(j, "instrument");
    return s;
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::CorruptTable, std::string("corrupt key sequences: ") + e.what(),
                {{"table", "CURRENT"}});
  }
}

std::string table_document(const StoreState& state, Table table, int schema_version) {
  json records = json::array();
  switch (table) {
    case Table::Beacons:
      for (const auto& b : state.beacons) records.push_back(to_json(b));
      break;
    case Table::Lendings:
      for (const auto& l : state.lendings) records.push_back(lending_row(l));
      break;
    case Table::LendingDetails:
      for (const auto& l : state.lendings) {
        for (const auto& d : l.details) {
          json row = to_json(d);
          row["lending_id"] = l.lending_id;
          records.push_back(std::move(row));
        }
      }
      break;
    case Table::Instruments:
      for (const auto& s : state.instruments) records.push_back(to_json(s));
      break;
    case Table::Catalog:
      for (const auto& c : state.catalog) records.push_back(to_json(c));
      break;
    case Table::JobTemplates:
      for (const auto& t : state.job_templates) records.push_back(to_json(t));
      break;
    case Table::Recycle:
      for (const auto& r : state.recycle) records.push_back(to_json(r));
      break;
  }
  json doc = {{"table", table_name(table)},
              {"schema_version", schema_version},
              {"records", std::move(records)}};
  return doc.dump(2) + "\n";
}

void decode_table_document(Table table, std::string_view text, int schema_version,
                           StoreState& state) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) corrupt(table, std::nullopt, "document is not valid JSON");
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array()) {
    corrupt(table, std::nullopt, "document lacks a records array");
  }
  if (!doc.contains("table") || doc["table"] != table_name(table)) {
    corrupt(table, std::nullopt, "document names the wrong table");
  }
  if (!doc.contains("schema_version") || doc["schema_version"] != schema_version) {
    throw Error(ErrorCode::SchemaMismatch,
                "table " + std::string(table_name(table)) + " has an unsupported schema_version",
                {{"table", table_name(table)}, {"expected", schema_version}});
  }

  std::unordered_map<std::int64_t, std::size_t> lending_index;
  if (table == Table::LendingDetails) {
    for (std::size_t i = 0; i < state.lendings.size(); ++i) {
      lending_index[state.lendings[i].lending_id] = i;
    }
  }

  const json& records = doc["records"];
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& r = records[i];
    try {
      switch (table) {
        case Table::Beacons: state.beacons.push_back(beacon_from_json(r)); break;
        case Table::Lendings: state.lendings.push_back(lending_from_json(r)); break;
        case Table::LendingDetails: {
          std::int64_t owner = get_int(r, "lending_id");
          auto it = lending_index.find(owner);
          if (it == lending_index.end()) {
            throw std::invalid_argument("detail references unknown lending " + std::to_string(owner));
          }
          state.lendings[it->second].details.push_back(detail_from_json(r));
          break;
        }
        case Table::Instruments: state.instruments.push_back(instrument_from_json(r)); break;
        case Table::Catalog: state.catalog.push_back(catalog_from_json(r)); break;
        case Table::JobTemplates: state.job_templates.push_back(job_from_json(r)); break;
        case Table::Recycle: state.recycle.push_back(recycle_from_json(r)); break;
      }
    } catch (const std::invalid_argument& e) {
      corrupt(table, i, e.what());
    } catch (const json::exception& e) {
      corrupt(table, i, e.what());
    }
  }
}

bool is_safe_media_path(std::string_view path) {
  if (path.empty() || path.front() == '/') return false;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    std::string_view segment = path.substr(start, end - start);
    if (segment.empty() || segment == "." || segment == "..") return false;
    for (char c : segment) {
      if (static_cast<unsigned char>(c) < 0x20 || c == '\\' || c == ':' || c == 0x7f) return false;
    }
    start = end + 1;
  }
  return true;
}

void validate_state(const StoreState& state) {
  // Beacons
  {
    std::set<std::int64_t> ids;
    std::set<std::string> names;
    for (std::size_t i = 0; i < state.beacons.size(); ++i) {
      const BeaconRecord& b = state.beacons[i];
      json at = {{"id", b.beacon_id}};
      if (b.beacon_id <= 0 || b.beacon_id >= state.sequences.beacon || !ids.insert(b.beacon_id).second) {
        corrupt(Table::Beacons, i, "invalid or duplicate beacon_id", at);
      }
      if (trim(b.beacon_name).empty()) corrupt(Table::Beacons, i, "empty beacon_name", at);
      if (!names.insert(fold_case(b.beacon_name)).second) {
        corrupt(Table::Beacons, i, "duplicate beacon_name", at);
      }
      const GridPoint& p = b.position;
      if (!std::isfinite(p.easting) || !std::isfinite(p.northing) ||
          (p.elevation && !std::isfinite(*p.elevation))) {
        corrupt(Table::Beacons, i, "non-finite coordinate", at);
      }
      if (b.photo_ref && !is_safe_media_path(*b.photo_ref)) {
        corrupt(Table::Beacons, i, "unsafe photo_ref", at);
      }
      if (!b.revision_date.ok()) corrupt(Table::Beacons, i, "invalid revision_date", at);
    }
  }

  // Instruments
  std::map<std::string, std::int64_t> outstanding;  // by exact instrument name
  {
    std::set<std::int64_t> ids;
    std::set<std::string> names;
    for (std::size_t i = 0; i < state.instruments.size(); ++i) {
      const InstrumentStock& s = state.instruments[i];
      json at = {{"id", s.instrument_id}};
      if (s.instrument_id <= 0 || s.instrument_id >= state.sequences.instrument ||
          !ids.insert(s.instrument_id).second) {
        corrupt(Table::Instruments, i, "invalid or duplicate instrument_id", at);
      }
      if (trim(s.instrument_name).empty()) corrupt(Table::Instruments, i, "empty instrument_name", at);
      if (!names.insert(fold_case(s.instrument_name)).second) {
        corrupt(Table::Instruments, i, "duplicate instrument_name", at);
      }
      if (s.total < 0 || s.lent < 0 || s.faulty < 0) corrupt(Table::Instruments, i, "negative count", at);
      if (s.lent + s.faulty > s.total) {
        corrupt(Table::Instruments, i, "lent + faulty exceeds total", at);
      }
      outstanding[s.instrument_name] = 0;
    }
  }

  // Lendings and details
  {
    std::set<std::int64_t> ids;
    std::set<std::int64_t> detail_ids;
    for (std::size_t i = 0; i < state.lendings.size(); ++i) {
      const LendingRecord& l = state.lendings[i];
      json at = {{"id", l.lending_id}};
      if (l.lending_id <= 0 || l.lending_id >= state.sequences.lending ||
          !ids.insert(l.lending_id).second) {
        corrupt(Table::Lendings, i, "invalid or duplicate lending_id", at);
      }
      if (l.details.empty()) corrupt(Table::Lendings, i, "lending has no details", at);
      if (l.is_returned != l.return_date.has_value()) {
        corrupt(Table::Lendings, i, "is_returned and return_date disagree", at);
      }
      if (l.return_date && *l.return_date < l.date) {
        corrupt(Table::Lendings, i, "return_date precedes lending date", at);
      }
      std::int64_t sum = 0;
      for (const LendingDetail& d : l.details) {
        json dat = {{"id", d.detail_id}, {"lending_id", l.lending_id}};
        if (d.detail_id <= 0 || d.detail_id >= state.sequences.lending_detail ||
            !detail_ids.insert(d.detail_id).second) {
          corrupt(Table::LendingDetails, std::nullopt, "invalid or duplicate detail_id", dat);
        }
        if (d.quantity < 1) corrupt(Table::LendingDetails, std::nullopt, "quantity below 1", dat);
        if (static_cast<std::int64_t>(d.serials.size()) != d.quantity) {
          corrupt(Table::LendingDetails, std::nullopt, "serial count differs from quantity", dat);
        }
        auto it = outstanding.find(d.instrument_name);
        if (it == outstanding.end()) {
          corrupt(Table::LendingDetails, std::nullopt, "detail names an unknown instrument", dat);
        }
        if (!l.is_returned) it->second += d.quantity;
        sum += d.quantity;
      }
      if (sum != l.total_instru) corrupt(Table::Lendings, i, "total_instru differs from details", at);
    }
  }

  for (std::size_t i = 0; i < state.instruments.size(); ++i) {
    const InstrumentStock& s = state.instruments[i];
    if (outstanding[s.instrument_name] != s.lent) {
      corrupt(Table::Instruments, i, "lent count differs from open lendings",
              {{"id", s.instrument_id}, {"open", outstanding[s.instrument_name]}});
    }
  }

  // Recycle bin
  {
    std::unordered_set<std::int64_t> deleted_lendings;
    std::unordered_set<std::int64_t> deleted_beacons;
    for (const auto& l : state.lendings) {
      if (l.deleted) deleted_lendings.insert(l.lending_id);
    }
    for (const auto& b : state.beacons) {
      if (b.deleted) deleted_beacons.insert(b.beacon_id);
    }
    std::set<std::pair<int, std::int64_t>> seen;
    for (std::size_t i = 0; i < state.recycle.size(); ++i) {
      const RecycleEntry& r = state.recycle[i];
      if (!seen.insert({static_cast<int>(r.kind), r.id}).second) {
        corrupt(Table::Recycle, i, "duplicate recycle entry");
      }
      const auto& pool = r.kind == RecycleKind::Lending ? deleted_lendings : deleted_beacons;
      if (!pool.count(r.id)) corrupt(Table::Recycle, i, "entry does not match a deleted record", {{"id", r.id}});
    }
    for (std::size_t i = 0; i < state.lendings.size(); ++i) {
      if (state.lendings[i].deleted &&
          !seen.count({static_cast<int>(RecycleKind::Lending), state.lendings[i].lending_id})) {
        corrupt(Table::Lendings, i, "deleted lending missing from recycle bin");
      }
    }
    for (std::size_t i = 0; i < state.beacons.size(); ++i) {
      if (state.beacons[i].deleted &&
          !seen.count({static_cast<int>(RecycleKind::Beacon), state.beacons[i].beacon_id})) {
        corrupt(Table::Beacons, i, "deleted beacon missing from recycle bin");
      }
    }
  }

  // Catalog
  {
    std::set<std::string> names;
    for (std::size_t i = 0; i < state.catalog.size(); ++i) {
      const CatalogEntry& c = state.catalog[i];
      if (trim(c.instrument_name).empty()) corrupt(Table::Catalog, i, "empty instrument_name");
      if (!names.insert(fold_case(c.instrument_name)).second) {
        corrupt(Table::Catalog, i, "duplicate instrument_name");
      }
      if (trim(c.room).empty()) corrupt(Table::Catalog, i, "empty room");
      for (const auto& ref : c.media_refs) {
        if (!is_safe_media_path(ref)) corrupt(Table::Catalog, i, "unsafe media reference");
      }
    }
  }
  {
    std::set<std::string> types;
    for (std::size_t i = 0; i < state.job_templates.size(); ++i) {
      const JobTemplate& t = state.job_templates[i];
      if (trim(t.job_type).empty()) corrupt(Table::JobTemplates, i, "empty job_type");
      if (!types.insert(fold_case(t.job_type)).second) {
        corrupt(Table::JobTemplates, i, "duplicate job_type");
      }
      if (t.required_instruments.empty()) corrupt(Table::JobTemplates, i, "empty requirement list");
      for (const auto& r : t.required_instruments) {
        if (trim(r.instrument_name).empty() || r.quantity < 1) {
          corrupt(Table::JobTemplates, i, "invalid requirement");
        }
      }
    }
  }
}

namespace {

// Feeds a canonical binary encoding of the state to SHA-256: integers and
// doubles as 8 little-endian bytes, strings length-prefixed, optionals behind
// a presence byte.
class DigestWriter {
 public:
  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    sha_.update(std::string_view(b, 8));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void flag(bool v) { sha_.update(v ? std::string_view("\1", 1) : std::string_view("\0", 1)); }
  void str(std::string_view v) {
    u64(v.size());
    sha_.update(v);
  }
  void time(Timestamp t) { i64(t.time_since_epoch().count()); }
  void date(Date d) { i64(std::chrono::sys_days(d).time_since_epoch().count()); }
  template <typename T, typename Fn>
  void opt(const std::optional<T>& v, Fn&& write) {
    flag(v.has_value());
    if (v) write(*v);
  }
  std::string hex() { return sha_.hex(); }

 private:
  Sha256 sha_;
};

}  // namespace

std::string state_digest(const StoreState& state) {
  DigestWriter w;
  auto text = [&](const std::string& s) { w.str(s); };
  auto real = [&](double v) { w.f64(v); };
  auto when = [&](Timestamp t) { w.time(t); };

  w.str("beacons");
  w.u64(state.beacons.size());
  for (const auto& b : state.beacons) {
    w.i64(b.beacon_id);
    w.str(b.beacon_name);
    w.f64(b.position.easting);
    w.f64(b.position.northing);
    w.opt(b.position.elevation, real);
    w.str(b.description);
    w.opt(b.photo_ref, text);
    w.str(b.revision_surveyor);
    w.date(b.revision_date);
    w.flag(b.marked);
    w.flag(b.deleted);
  }
  w.str("lendings");
  w.u64(state.lendings.size());
  for (const auto& l : state.lendings) {
    w.i64(l.lending_id);
    w.time(l.date);
    w.str(l.person_name);
    w.str(l.person_department);
    w.str(l.person_phone);
    w.flag(l.is_returned);
    w.opt(l.return_date, when);
    w.str(l.remarks);
    w.i64(l.total_instru);
    w.flag(l.deleted);
    w.u64(l.details.size());
    for (const auto& d : l.details) {
      w.i64(d.detail_id);
      w.str(d.instrument_name);
      w.i64(d.quantity);
      w.u64(d.serials.size());
      for (const auto& serial : d.serials) w.str(serial);
    }
  }
  w.str("instruments");
  w.u64(state.instruments.size());
  for (const auto& s : state.instruments) {
    w.i64(s.instrument_id);
    w.str(s.instrument_name);
    w.i64(s.total);
    w.i64(s.lent);
    w.i64(s.faulty);
    w.str(s.description);
  }
  w.str("catalog");
  w.u64(state.catalog.size());
  for (const auto& c : state.catalog) {
    w.str(c.instrument_name);
    w.str(c.description);
    w.str(c.room);
    w.str(c.shelf);
    w.u64(c.media_refs.size());
    for (const auto& m : c.media_refs) w.str(m);
  }
  w.str("job_templates");
  w.u64(state.job_templates.size());
  for (const auto& t : state.job_templates) {
    w.str(t.job_type);
    w.u64(t.required_instruments.size());
    for (const auto& r : t.required_instruments) {
      w.str(r.instrument_name);
      w.i64(r.quantity);
    }
  }
  w.str("recycle");
  w.u64(state.recycle.size());
  for (const auto& r : state.recycle) {
    w.str(kind_name(r.kind));
    w.i64(r.id);
    w.time(r.deleted_at);
  }
  w.str("sequences");
  w.i64(state.sequences.beacon);
  w.i64(state.sequences.lending);
  w.i64(state.sequences.lending_detail);
  w.i64(state.sequences.instrument);
  return w.hex();
}

}  // namespace survstore
