#include "survstore/catalog.hpp"

#include <algorithm>

#include "survstore/codec.hpp"
#include "survstore/error.hpp"
#include "survstore/text.hpp"

namespace survstore {

namespace {

void validate_entry(const CatalogEntry& entry) {
  if (trim(entry.instrument_name).empty()) {
    throw Error(ErrorCode::InvalidArgument, "instrument name is required");
  }
  if (trim(entry.room).empty()) {
    throw Error(ErrorCode::InvalidArgument, "room is required",
                {{"instrument", entry.instrument_name}});
  }
  for (const auto& ref : entry.media_refs) {
    if (!is_safe_media_path(ref)) {
      throw Error(ErrorCode::BadPhotoPath, "media reference must be relative to the media directory",
                  {{"media_ref", ref}});
    }
  }
}

void upsert_into(StoreState& state, const CatalogEntry& entry, bool keep_media) {
  for (auto& existing : state.catalog) {
    if (iequals(existing.instrument_name, entry.instrument_name)) {
      std::vector<std::string> media = existing.media_refs;
      existing = entry;
      if (keep_media) existing.media_refs = std::move(media);
      return;
    }
  }
  state.catalog.push_back(entry);
}

bool by_name(const CatalogEntry& a, const CatalogEntry& b) {
  return fold_case(a.instrument_name) < fold_case(b.instrument_name);
}

}  // namespace

std::vector<CatalogEntry> search_catalog_entries(std::span<const CatalogEntry> entries,
                                                 std::string_view query) {
  std::vector<CatalogEntry> names;
  std::vector<CatalogEntry> descriptions;
  for (const auto& e : entries) {
    if (icontains(e.instrument_name, query)) {
      names.push_back(e);
    } else if (icontains(e.description, query)) {
      descriptions.push_back(e);
    }
  }
  std::sort(names.begin(), names.end(), by_name);
  std::sort(descriptions.begin(), descriptions.end(), by_name);
  names.insert(names.end(), descriptions.begin(), descriptions.end());
  return names;
}

std::vector<DanglingReference> check_catalog_integrity(const StoreState& state) {
  std::vector<DanglingReference> dangling;
  for (const auto& job : state.job_templates) {
    for (const auto& req : job.required_instruments) {
      bool known = std::any_of(state.catalog.begin(), state.catalog.end(), [&](const auto& e) {
        return iequals(e.instrument_name, req.instrument_name);
      });
      if (!known) dangling.push_back({job.job_type, req.instrument_name});
    }
  }
  return dangling;
}

CatalogEntry InstrumentCatalog::upsert(const CatalogEntry& entry) {
  validate_entry(entry);
  return store_.mutate([&](StoreState& state) {
    upsert_into(state, entry, false);
    return entry;
  });
}

std::size_t InstrumentCatalog::import_csv(std::string_view text) {
  std::vector<csv::Row> rows = csv::parse(text);
  if (rows.empty() || csv::format_row(rows.front()) != std::string(kCatalogCsvHeader) + "\n") {
    throw Error(ErrorCode::MalformedCsv,
                "catalog CSV must start with the header " + std::string(kCatalogCsvHeader));
  }
  std::vector<CatalogEntry> entries;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const csv::Row& row = rows[i];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 4) {
      throw Error(ErrorCode::MalformedCsv, "catalog row must have 4 fields",
                  {{"row", i}, {"fields", row.size()}});
    }
    CatalogEntry entry{row[0], row[1], row[2], row[3], {}};
    try {
      validate_entry(entry);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (CSV row " + std::to_string(i) + ")",
                  {{"row", i}});
    }
    entries.push_back(std::move(entry));
  }
  store_.mutate([&](StoreState& state) {
    for (const auto& entry : entries) upsert_into(state, entry, true);
  });
  return entries.size();
}

InstrumentLocation InstrumentCatalog::locate(std::string_view name) const {
  auto state = store_.snapshot();
  for (const auto& e : state->catalog) {
    if (iequals(e.instrument_name, name)) {
      return {e.instrument_name, e.room, e.shelf, e.description};
    }
  }
  throw Error(ErrorCode::NotFound, "no catalog entry for '" + std::string(name) + "'",
              {{"name", std::string(name)}});
}

std::vector<CatalogEntry> InstrumentCatalog::search(std::string_view query) const {
  return search_catalog_entries(store_.snapshot()->catalog, query);
}

JobTemplate InstrumentCatalog::set_job(const JobTemplate& job) {
  if (trim(job.job_type).empty()) throw Error(ErrorCode::InvalidArgument, "job type is required");
  if (job.required_instruments.empty()) {
    throw Error(ErrorCode::InvalidArgument, "a job needs at least one required instrument");
  }
  for (const auto& req : job.required_instruments) {
    if (trim(req.instrument_name).empty() || req.quantity < 1) {
      throw Error(ErrorCode::InvalidArgument, "requirements need a name and a quantity of at least 1",
                  {{"instrument", req.instrument_name}, {"quantity", req.quantity}});
    }
  }
  return store_.mutate([&](StoreState& state) {
    for (auto& existing : state.job_templates) {
      if (iequals(existing.job_type, job.job_type)) {
        existing = job;
        return job;
      }
    }
    state.job_templates.push_back(job);
    return job;
  });
}

std::vector<JobTemplate> InstrumentCatalog::jobs() const {
  std::vector<JobTemplate> out = store_.snapshot()->job_templates;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return fold_case(a.job_type) < fold_case(b.job_type);
  });
  return out;
}

std::vector<RequirementRow> InstrumentCatalog::job_requirements(std::string_view job_type) const {
  auto state = store_.snapshot();
  for (const auto& job : state->job_templates) {
    if (!iequals(job.job_type, job_type)) continue;
    std::vector<RequirementRow> rows;
    for (const auto& req : job.required_instruments) {
      RequirementRow row{req.instrument_name, req.quantity, std::nullopt};
      for (const auto& s : state->instruments) {
        if (iequals(s.instrument_name, req.instrument_name)) row.available = s.remaining();
      }
      rows.push_back(std::move(row));
    }
    return rows;
  }
  throw Error(ErrorCode::NotFound, "no job type '" + std::string(job_type) + "'",
              {{"job_type", std::string(job_type)}});
}

std::vector<DanglingReference> InstrumentCatalog::check_integrity() const {
  return check_catalog_integrity(*store_.snapshot());
}

}  // namespace survstore
