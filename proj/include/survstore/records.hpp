#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "survstore/survcom.hpp"
#include "survstore/timeutil.hpp"

namespace survstore {

struct BeaconRecord {
  std::int64_t beacon_id = 0;
  std::string beacon_name;
  GridPoint position;
  std::string description;
  std::optional<std::string> photo_ref;  // relative to the store's media directory
  std::string revision_surveyor;
  Date revision_date{};
  bool marked = false;
  bool deleted = false;

  friend bool operator==(const BeaconRecord&, const BeaconRecord&) = default;
};

struct InstrumentStock {
  std::int64_t instrument_id = 0;
  std::string instrument_name;
  std::int64_t total = 0;
  std::int64_t lent = 0;
  std::int64_t faulty = 0;
  std::string description;

  std::int64_t remaining() const noexcept { return total - lent - faulty; }

  friend bool operator==(const InstrumentStock&, const InstrumentStock&) = default;
};

struct LendingDetail {
  std::int64_t detail_id = 0;
  std::string instrument_name;
  std::int64_t quantity = 0;
  std::vector<std::string> serials;  // one per unit; entries may be empty

  friend bool operator==(const LendingDetail&, const LendingDetail&) = default;
};

struct LendingRecord {
  std::int64_t lending_id = 0;
  Timestamp date{};
  std::string person_name;
  std::string person_department;
  std::string person_phone;
  bool is_returned = false;
  std::optional<Timestamp> return_date;
  std::string remarks;
  std::int64_t total_instru = 0;
  bool deleted = false;
  std::vector<LendingDetail> details;

  friend bool operator==(const LendingRecord&, const LendingRecord&) = default;
};

struct CatalogEntry {
  std::string instrument_name;
  std::string description;
  std::string room;
  std::string shelf;
  std::vector<std::string> media_refs;

  friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

struct JobRequirement {
  std::string instrument_name;
  std::int64_t quantity = 0;

  friend bool operator==(const JobRequirement&, const JobRequirement&) = default;
};

struct JobTemplate {
  std::string job_type;
  std::vector<JobRequirement> required_instruments;

  friend bool operator==(const JobTemplate&, const JobTemplate&) = default;
};

enum class RecycleKind { Lending, Beacon };

struct RecycleEntry {
  RecycleKind kind = RecycleKind::Lending;
  std::int64_t id = 0;
  Timestamp deleted_at{};

  friend bool operator==(const RecycleEntry&, const RecycleEntry&) = default;
};

/// Next surrogate key per table. Keys are never reused, even after a purge.
struct Sequences {
  std::int64_t beacon = 1;
  std::int64_t lending = 1;
  std::int64_t lending_detail = 1;
  std::int64_t instrument = 1;

  friend bool operator==(const Sequences&, const Sequences&) = default;
};

/// Complete in-memory content of a store. Lending details live inside their
/// lending here and are split into their own table on disk.
struct StoreState {
  std::vector<BeaconRecord> beacons;
  std::vector<LendingRecord> lendings;
  std::vector<InstrumentStock> instruments;
  std::vector<CatalogEntry> catalog;
  std::vector<JobTemplate> job_templates;
  std::vector<RecycleEntry> recycle;
  Sequences sequences;

  friend bool operator==(const StoreState&, const StoreState&) = default;
};

enum class Table { Beacons, Lendings, LendingDetails, Instruments, Catalog, JobTemplates, Recycle };

inline constexpr std::array<Table, 7> kAllTables = {
    Table::Beacons, Table::Lendings,     Table::LendingDetails, Table::Instruments,
    Table::Catalog, Table::JobTemplates, Table::Recycle};

std::string_view table_name(Table table);

}  // namespace survstore
