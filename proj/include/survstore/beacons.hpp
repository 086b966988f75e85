#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "survstore/records.hpp"
#include "survstore/store.hpp"
#include "survstore/survcom.hpp"
#include "survstore/units.hpp"

namespace survstore {

inline constexpr std::string_view kBeaconCsvHeader =
    "BeaconName,Easting,Northing,Elevation,Unit,Description,RevisionSurveyor,RevisionDate";

inline constexpr std::string_view kGridCrsNote =
    "Coordinates are projected Ghana National Grid eastings and northings in metres, "
    "not longitude/latitude.";

struct BeaconDraft {
  std::string beacon_name;
  GridPoint position;
  std::string description;
  std::optional<std::string> photo_ref;
  std::string revision_surveyor;
  std::optional<Date> revision_date;  // defaults to today
  bool marked = false;
};

/// Field-wise update. Absent members are left untouched; the nested optionals
/// distinguish "leave" from "clear".
struct BeaconChanges {
  std::optional<std::string> beacon_name;
  std::optional<double> easting;
  std::optional<double> northing;
  std::optional<std::optional<double>> elevation;
  std::optional<std::string> description;
  std::optional<std::optional<std::string>> photo_ref;
  std::optional<std::string> revision_surveyor;
  std::optional<Date> revision_date;
  std::optional<bool> marked;
};

/// nullopt selects every live beacon ordered by name.
using BeaconSelection = std::optional<std::vector<std::int64_t>>;

/// Ranked case-insensitive search: name-prefix matches, then other name
/// matches, then description matches; by name within each tier. Deleted
/// beacons are skipped.
std::vector<BeaconRecord> search_beacons(std::span<const BeaconRecord> beacons,
                                         std::string_view query);

class BeaconRegistry {
 public:
  explicit BeaconRegistry(Store& store) : store_(store) {}

  BeaconRecord add(const BeaconDraft& draft);
  BeaconRecord update(std::int64_t id, const BeaconChanges& changes);
  /// Copies `bytes` into media/beacons/<id>/<file name> and points the
  /// beacon's photo_ref at it.
  BeaconRecord set_photo(std::int64_t id, std::string_view file_name, std::string_view bytes);
  std::string photo_bytes(std::int64_t id) const;

  BeaconRecord get(std::int64_t id) const;
  BeaconRecord find(std::string_view name) const;
  std::vector<BeaconRecord> list() const;
  std::vector<BeaconRecord> search(std::string_view query) const;

  /// Moves the beacon to the recycle bin; it keeps its name reserved.
  void remove(std::int64_t id);
  BeaconRecord restore(std::int64_t id);

  std::string export_csv(const BeaconSelection& selection, LengthUnit unit) const;
  Join join(std::string_view name_a, std::string_view name_b) const;
  nlohmann::json to_geojson(const BeaconSelection& selection) const;

 private:
  std::vector<BeaconRecord> select(const StoreState& state, const BeaconSelection& selection) const;

  Store& store_;
};

}  // namespace survstore
