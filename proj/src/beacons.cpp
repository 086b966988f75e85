#include "survstore/beacons.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "survstore/codec.hpp"
#include "survstore/error.hpp"
#include "survstore/text.hpp"

namespace survstore {

using nlohmann::json;

namespace {

[[noreturn]] void not_found(std::int64_t id) {
  throw Error(ErrorCode::NotFound, "no beacon with id " + std::to_string(id), {{"id", id}});
}

BeaconRecord* find_by_id(StoreState& state, std::int64_t id) {
  for (auto& b : state.beacons) {
    if (b.beacon_id == id) return &b;
  }
  return nullptr;
}

const BeaconRecord* find_by_id(const StoreState& state, std::int64_t id) {
  return find_by_id(const_cast<StoreState&>(state), id);
}

const BeaconRecord* find_live_by_name(const StoreState& state, std::string_view name) {
  for (const auto& b : state.beacons) {
    if (!b.deleted && iequals(b.beacon_name, name)) return &b;
  }
  return nullptr;
}

bool by_name(const BeaconRecord& a, const BeaconRecord& b) {
  return std::forward_as_tuple(fold_case(a.beacon_name), a.beacon_id) <
         std::forward_as_tuple(fold_case(b.beacon_name), b.beacon_id);
}

void check_name(const StoreState& state, const std::string& name, std::int64_t self_id) {
  if (trim(name).empty()) throw Error(ErrorCode::InvalidArgument, "beacon name must not be empty");
  for (const auto& b : state.beacons) {
    if (b.beacon_id != self_id && iequals(b.beacon_name, name)) {
      throw Error(ErrorCode::DuplicateName, "a beacon named '" + b.beacon_name + "' already exists",
                  {{"name", b.beacon_name}, {"existing_id", b.beacon_id}});
    }
  }
}

void check_position(const GridPoint& p) {
  make_point(p.easting, p.northing, p.elevation);
}

void check_photo(const Store& store, const std::optional<std::string>& ref) {
  if (!ref) return;
  if (!is_safe_media_path(*ref)) {
    throw Error(ErrorCode::BadPhotoPath, "photo path must be relative to the media directory",
                {{"photo_ref", *ref}});
  }
  if (!store.has_media(*ref)) {
    throw Error(ErrorCode::BadPhotoPath, "no media file '" + *ref + "' in the store",
                {{"photo_ref", *ref}});
  }
}

}  // namespace

std::vector<BeaconRecord> search_beacons(std::span<const BeaconRecord> beacons,
                                         std::string_view query) {
  std::vector<std::pair<int, const BeaconRecord*>> hits;
  for (const auto& b : beacons) {
    if (b.deleted) continue;
    int tier = -1;
    if (istarts_with(b.beacon_name, query)) {
      tier = 0;
    } else if (icontains(b.beacon_name, query)) {
      tier = 1;
    } else if (icontains(b.description, query)) {
      tier = 2;
    }
    if (tier >= 0) hits.emplace_back(tier, &b);
  }
  std::sort(hits.begin(), hits.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return by_name(*x.second, *y.second);
  });
  std::vector<BeaconRecord> out;
  out.reserve(hits.size());
  for (const auto& [tier, b] : hits) out.push_back(*b);
  return out;
}

BeaconRecord BeaconRegistry::add(const BeaconDraft& draft) {
  check_position(draft.position);
  check_photo(store_, draft.photo_ref);
  Date revision = draft.revision_date.value_or(date_of(store_.now()));
  if (!revision.ok()) throw Error(ErrorCode::InvalidArgument, "invalid revision date");

  return store_.mutate([&](StoreState& state) {
    check_name(state, draft.beacon_name, 0);
    BeaconRecord record;
    record.beacon_id = state.sequences.beacon++;
    record.beacon_name = draft.beacon_name;
    record.position = draft.position;
    record.description = draft.description;
    record.photo_ref = draft.photo_ref;
    record.revision_surveyor = draft.revision_surveyor;
    record.revision_date = revision;
    record.marked = draft.marked;
    state.beacons.push_back(record);
    return record;
  });
}

BeaconRecord BeaconRegistry::update(std::int64_t id, const BeaconChanges& changes) {
  if (changes.photo_ref) check_photo(store_, *changes.photo_ref);
  if (changes.revision_date && !changes.revision_date->ok()) {
    throw Error(ErrorCode::InvalidArgument, "invalid revision date");
  }
  return store_.mutate([&](StoreState& state) {
    BeaconRecord* record = find_by_id(state, id);
    if (!record) not_found(id);
    BeaconRecord next = *record;
    if (changes.beacon_name) {
      check_name(state, *changes.beacon_name, id);
      next.beacon_name = *changes.beacon_name;
    }
    if (changes.easting) next.position.easting = *changes.easting;
    if (changes.northing) next.position.northing = *changes.northing;
    if (changes.elevation) next.position.elevation = *changes.elevation;
    check_position(next.position);
    if (changes.description) next.description = *changes.description;
    if (changes.photo_ref) next.photo_ref = *changes.photo_ref;
    if (changes.revision_surveyor) next.revision_surveyor = *changes.revision_surveyor;
    if (changes.revision_date) next.revision_date = *changes.revision_date;
    if (changes.marked) next.marked = *changes.marked;
    *record = next;
    return next;
  });
}

BeaconRecord BeaconRegistry::set_photo(std::int64_t id, std::string_view file_name,
                                       std::string_view bytes) {
  std::string base = fs::path(std::string(file_name)).filename().string();
  std::string relative = "beacons/" + std::to_string(id) + "/" + base;
  if (base.empty() || !is_safe_media_path(relative)) {
    throw Error(ErrorCode::BadPhotoPath, "unusable photo file name '" + std::string(file_name) + "'");
  }
  get(id);
  store_.put_media(relative, bytes);
  BeaconChanges changes;
  changes.photo_ref = std::optional<std::string>(relative);
  return update(id, changes);
}

std::string BeaconRegistry::photo_bytes(std::int64_t id) const {
  BeaconRecord b = get(id);
  if (!b.photo_ref) {
    throw Error(ErrorCode::NotFound, "beacon " + std::to_string(id) + " has no photo", {{"id", id}});
  }
  auto bytes = store_.read_media(*b.photo_ref);
  if (!bytes) throw Error(ErrorCode::NotFound, "photo file missing", {{"photo_ref", *b.photo_ref}});
  return *bytes;
}

BeaconRecord BeaconRegistry::get(std::int64_t id) const {
  auto state = store_.snapshot();
  const BeaconRecord* b = find_by_id(*state, id);
  if (!b) not_found(id);
  return *b;
}

BeaconRecord BeaconRegistry::find(std::string_view name) const {
  auto state = store_.snapshot();
  const BeaconRecord* b = find_live_by_name(*state, name);
  if (!b) {
    throw Error(ErrorCode::NotFound, "no beacon named '" + std::string(name) + "'",
                {{"name", std::string(name)}});
  }
  return *b;
}

std::vector<BeaconRecord> BeaconRegistry::list() const { return search(""); }

std::vector<BeaconRecord> BeaconRegistry::search(std::string_view query) const {
  auto state = store_.snapshot();
  return search_beacons(state->beacons, query);
}

void BeaconRegistry::remove(std::int64_t id) {
  store_.mutate([&](StoreState& state) {
    BeaconRecord* b = find_by_id(state, id);
    if (!b) not_found(id);
    if (b->deleted) {
      throw Error(ErrorCode::AlreadyDeleted, "beacon is already in the recycle bin", {{"id", id}});
    }
    b->deleted = true;
    state.recycle.push_back({RecycleKind::Beacon, id, store_.now()});
  });
}

BeaconRecord BeaconRegistry::restore(std::int64_t id) {
  return store_.mutate([&](StoreState& state) {
    BeaconRecord* b = find_by_id(state, id);
    if (!b) not_found(id);
    if (!b->deleted) {
      throw Error(ErrorCode::NotDeleted, "beacon is not in the recycle bin", {{"id", id}});
    }
    b->deleted = false;
    std::erase_if(state.recycle, [&](const RecycleEntry& r) {
      return r.kind == RecycleKind::Beacon && r.id == id;
    });
    return *b;
  });
}

std::vector<BeaconRecord> BeaconRegistry::select(const StoreState& state,
                                                 const BeaconSelection& selection) const {
  if (!selection) return search_beacons(state.beacons, "");
  std::vector<BeaconRecord> out;
  out.reserve(selection->size());
  for (std::int64_t id : *selection) {
    const BeaconRecord* b = find_by_id(state, id);
    if (!b || b->deleted) not_found(id);
    out.push_back(*b);
  }
  return out;
}

std::string BeaconRegistry::export_csv(const BeaconSelection& selection, LengthUnit unit) const {
  auto state = store_.snapshot();
  std::string out(kBeaconCsvHeader);
  out += '\n';
  auto length = [&](double metres) {
    return format_fixed(convert_length(metres, LengthUnit::Metre, unit), 3);
  };
  for (const BeaconRecord& b : select(*state, selection)) {
    out += csv::format_row({b.beacon_name, length(b.position.easting), length(b.position.northing),
                            b.position.elevation ? length(*b.position.elevation) : std::string(),
                            std::string(unit_symbol(unit)), b.description, b.revision_surveyor,
                            format_date(b.revision_date)});
  }
  return out;
}

Join BeaconRegistry::join(std::string_view name_a, std::string_view name_b) const {
  BeaconRecord a = find(name_a);
  BeaconRecord b = find(name_b);
  return survstore::join(a.position, b.position);
}

json BeaconRegistry::to_geojson(const BeaconSelection& selection) const {
  auto state = store_.snapshot();
  json features = json::array();
  for (const BeaconRecord& b : select(*state, selection)) {
    features.push_back(
        {{"type", "Feature"},
         {"id", b.beacon_id},
         {"geometry", {{"type", "Point"}, {"coordinates", {b.position.easting, b.position.northing}}}},
         {"properties",
          {{"beacon_id", b.beacon_id},
           {"name", b.beacon_name},
           {"elevation", b.position.elevation ? json(*b.position.elevation) : json(nullptr)},
           {"description", b.description},
           {"revision_surveyor", b.revision_surveyor},
           {"revision_date", format_date(b.revision_date)},
           {"photo_ref", b.photo_ref ? json(*b.photo_ref) : json(nullptr)},
           {"marked", b.marked}}}});
  }
  return {{"type", "FeatureCollection"},
          {"properties", {{"crs_note", kGridCrsNote}, {"units", "m"}}},
          {"features", std::move(features)}};
}

}  // namespace survstore
