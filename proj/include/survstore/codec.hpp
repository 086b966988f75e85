#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "survstore/records.hpp"

namespace survstore {

// Record <-> JSON. These shapes are shared by the table documents and the
// HTTP API; lendings carry their details inline here.
nlohmann::json to_json(const GridPoint& p);
nlohmann::json to_json(const BeaconRecord& b);
nlohmann::json to_json(const InstrumentStock& s);
nlohmann::json to_json(const LendingDetail& d);
nlohmann::json to_json(const LendingRecord& l);
nlohmann::json to_json(const CatalogEntry& c);
nlohmann::json to_json(const JobTemplate& t);
nlohmann::json to_json(const RecycleEntry& r);
nlohmann::json to_json(const Sequences& s);

Sequences sequences_from_json(const nlohmann::json& j);

/// Table document: {"table": <name>, "schema_version": N, "records": [...]},
/// serialized with two-space indentation and a trailing newline.
std::string table_document(const StoreState& state, Table table, int schema_version);

/// Parses one table document into `state`. Lending details must be decoded
/// after lendings. Throws CorruptTable naming the table and record index.
void decode_table_document(Table table, std::string_view text, int schema_version,
                           StoreState& state);

/// Checks every record invariant and the cross-table rules (unique names,
/// stock conservation against open lendings, recycle-bin consistency).
/// Throws CorruptTable on the first violation.
void validate_state(const StoreState& state);

/// A path relative to the media directory: non-empty, '/'-separated, no
/// absolute root, no "." or ".." segments, no backslashes or control bytes.
bool is_safe_media_path(std::string_view path);

/// SHA-256 (hex) over every table document plus the key sequences.
std::string state_digest(const StoreState& state);

}  // namespace survstore
