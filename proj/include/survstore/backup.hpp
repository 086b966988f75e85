#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "survstore/records.hpp"
#include "survstore/store.hpp"

namespace survstore {

inline constexpr std::string_view kArchiveMagic = "SURVSTORE-ARCHIVE 1\n";
inline constexpr int kManifestVersion = 1;

/// Decoded, fully verified archive content.
struct ArchiveContents {
  nlohmann::json manifest;
  StoreState state;
  std::map<std::string, std::string> media;  // relative to the media directory
};

/// Serializes a store's committed tables and media into archive bytes.
std::string build_archive(const Store& store);

/// Parses and verifies archive bytes: trailer digest, per-file digests,
/// manifest counts, schema_version, and every store invariant. Throws
/// DigestMismatch, SchemaMismatch or CorruptTable.
ArchiveContents read_archive(std::string_view bytes);

struct BackupReceipt {
  std::filesystem::path path;
  std::uint64_t size = 0;
  std::string sha256;  // of the whole archive file
  nlohmann::json manifest;
};

/// Writes the archive to `dest` (via a temporary sibling and rename), then
/// reads it back and verifies it before returning. Throws IoFailure.
BackupReceipt create_backup(const Store& store, const std::filesystem::path& dest);

/// Verifies the archive completely before touching `root`. Without
/// `overwrite`, `root` must be absent or an empty directory (TargetNotEmpty).
std::unique_ptr<Store> restore_backup(const std::filesystem::path& archive,
                                      const std::filesystem::path& root, bool overwrite,
                                      StoreOptions options = {});

struct UploadReceipt {
  int status = 0;
  std::string local_digest;
  std::string remote_digest;
  std::uint64_t size = 0;
};

/// One HTTP PUT of the archive bytes with header X-Content-SHA256. Succeeds
/// only on a 2xx status whose response echoes the same digest, either in the
/// X-Content-SHA256 response header or as "sha256" in a JSON body.
UploadReceipt upload_backup(const std::filesystem::path& archive, const std::string& url);

}  // namespace survstore
