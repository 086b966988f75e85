#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "survstore/records.hpp"
#include "survstore/store.hpp"

namespace survstore {

inline constexpr std::string_view kCatalogCsvHeader = "InstrumentName,Description,Room,Shelf";

struct InstrumentLocation {
  std::string instrument_name;
  std::string room;
  std::string shelf;
  std::string description;
};

struct RequirementRow {
  std::string instrument_name;
  std::int64_t quantity = 0;
  std::optional<std::int64_t> available;  // nullopt: not held in stock
};

struct DanglingReference {
  std::string job_type;
  std::string instrument_name;
};

/// Name matches first, then description-only matches; by name within each.
std::vector<CatalogEntry> search_catalog_entries(std::span<const CatalogEntry> entries,
                                                 std::string_view query);

/// Every job requirement whose instrument has no catalog entry.
std::vector<DanglingReference> check_catalog_integrity(const StoreState& state);

class InstrumentCatalog {
 public:
  explicit InstrumentCatalog(Store& store) : store_(store) {}

  CatalogEntry upsert(const CatalogEntry& entry);
  /// Upserts every row of a CSV with header kCatalogCsvHeader in one commit.
  /// Existing media references are kept. Returns the number of rows applied.
  std::size_t import_csv(std::string_view text);

  InstrumentLocation locate(std::string_view name) const;
  std::vector<CatalogEntry> search(std::string_view query) const;

  JobTemplate set_job(const JobTemplate& job);
  std::vector<JobTemplate> jobs() const;
  std::vector<RequirementRow> job_requirements(std::string_view job_type) const;

  std::vector<DanglingReference> check_integrity() const;

 private:
  Store& store_;
};

}  // namespace survstore
