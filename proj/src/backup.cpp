#include "survstore/backup.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <set>
#include <sstream>

#include "survstore/codec.hpp"
#include "survstore/digest.hpp"
#include "survstore/error.hpp"
#include "survstore/http.hpp"
#include "survstore/text.hpp"

namespace survstore {

using nlohmann::json;

namespace {

constexpr std::string_view kTrailer = "SHA256 ";
constexpr const char* kManifestPath = "manifest.json";

[[noreturn]] void damaged(const std::string& why) {
  throw Error(ErrorCode::DigestMismatch, "archive failed verification: " + why);
}

std::string read_whole_file(const fs::path& path, ErrorCode on_failure) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(on_failure, "cannot read " + path.string(), {{"path", path.string()}});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(on_failure, "cannot read " + path.string(), {{"path", path.string()}});
  return buffer.str();
}

void append_entry(std::string& out, const std::string& path, std::string_view bytes) {
  out += path;
  out += '\t';
  out += std::to_string(bytes.size());
  out += '\n';
  out += bytes;
  out += '\n';
}

json table_counts(const StoreState& state) {
  std::size_t details = 0;
  for (const auto& l : state.lendings) details += l.details.size();
  return {{"beacons", state.beacons.size()},
          {"lendings", state.lendings.size()},
          {"lending_details", details},
          {"instruments", state.instruments.size()},
          {"catalog", state.catalog.size()},
          {"job_templates", state.job_templates.size()},
          {"recycle", state.recycle.size()}};
}

std::string table_path(Table table) { return "tables/" + std::string(table_name(table)) + ".json"; }

bool is_empty_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::exists(dir, ec)) return true;
  if (!fs::is_directory(dir, ec)) return false;
  return fs::directory_iterator(dir, ec) == fs::directory_iterator();
}

}  // namespace

std::string build_archive(const Store& store) {
  return store.exclusive([&](const StoreState& state) {
    std::map<std::string, std::string> media = store.media_files();

    std::vector<std::pair<std::string, std::string>> files;
    for (Table table : kAllTables) {
      files.emplace_back(table_path(table), table_document(state, table, Store::kSchemaVersion));
    }
    for (auto& [relative, bytes] : media) files.emplace_back("media/" + relative, std::move(bytes));

    json digests = json::object();
    for (const auto& [path, bytes] : files) digests[path] = sha256_hex(bytes);
    json manifest = {{"manifest_version", kManifestVersion},
                     {"schema_version", Store::kSchemaVersion},
                     {"created_at", format_timestamp(store.now())},
                     {"sequences", to_json(state.sequences)},
                     {"counts", table_counts(state)},
                     {"files", std::move(digests)}};

    std::string out(kArchiveMagic);
    append_entry(out, kManifestPath, manifest.dump(2) + "\n");
    for (const auto& [path, bytes] : files) append_entry(out, path, bytes);
    std::string digest = sha256_hex(out);
    out += kTrailer;
    out += digest;
    out += '\n';
    return out;
  });
}

ArchiveContents read_archive(std::string_view bytes) {
  if (bytes.substr(0, kArchiveMagic.size()) != kArchiveMagic) damaged("not a store archive");

  // Trailer: "SHA256 <64 hex>\n" covering every byte before it.
  constexpr std::size_t kTrailerSize = 7 + 64 + 1;
  if (bytes.size() < kArchiveMagic.size() + kTrailerSize) damaged("truncated");
  std::size_t body_end = bytes.size() - kTrailerSize;
  std::string_view trailer = bytes.substr(body_end);
  if (trailer.substr(0, kTrailer.size()) != kTrailer || trailer.back() != '\n') {
    damaged("missing trailer");
  }
  if (sha256_hex(bytes.substr(0, body_end)) != trailer.substr(kTrailer.size(), 64)) {
    damaged("archive digest does not match");
  }

  std::map<std::string, std::string_view> entries;
  std::vector<std::string> order;
  std::size_t pos = kArchiveMagic.size();
  while (pos < body_end) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos || eol >= body_end) damaged("bad entry header");
    std::string_view header = bytes.substr(pos, eol - pos);
    std::size_t tab = header.find('\t');
    if (tab == std::string_view::npos || tab == 0) damaged("bad entry header");
    std::string path(header.substr(0, tab));
    std::string size_text(header.substr(tab + 1));
    if (size_text.empty() || size_text.find_first_not_of("0123456789") != std::string::npos ||
        size_text.size() > 15) {
      damaged("bad entry size");
    }
    std::size_t size = std::stoull(size_text);
    std::size_t start = eol + 1;
    if (size > body_end - start || start + size >= body_end || bytes[start + size] != '\n') {
      damaged("entry overruns archive");
    }
    if (!entries.emplace(path, bytes.substr(start, size)).second) damaged("duplicate entry " + path);
    order.push_back(path);
    pos = start + size + 1;
  }
  if (order.empty() || order.front() != kManifestPath) damaged("manifest is not the first entry");

  json manifest = json::parse(entries.at(kManifestPath), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object() || !manifest.contains("files") ||
      !manifest["files"].is_object() || !manifest.contains("counts") ||
      !manifest.contains("sequences")) {
    throw Error(ErrorCode::CorruptTable, "archive manifest is malformed", {{"table", "manifest"}});
  }
  if (manifest.value("manifest_version", -1) != kManifestVersion ||
      manifest.value("schema_version", -1) != Store::kSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch, "unsupported archive manifest or schema_version",
                {{"expected_schema_version", Store::kSchemaVersion},
                 {"found", manifest.value("schema_version", json(nullptr))}});
  }

  const json& listed = manifest["files"];
  std::set<std::string> expected;
  for (const auto& [path, digest] : listed.items()) {
    expected.insert(path);
    auto it = entries.find(path);
    if (it == entries.end()) damaged("missing file " + path);
    if (!digest.is_string() || sha256_hex(it->second) != digest.get<std::string>()) {
      throw Error(ErrorCode::DigestMismatch, "digest mismatch for " + path, {{"file", path}});
    }
  }
  for (const auto& path : order) {
    if (path != kManifestPath && !expected.count(path)) damaged("unlisted file " + path);
  }

  ArchiveContents out;
  out.manifest = manifest;
  out.state.sequences = sequences_from_json(manifest["sequences"]);
  for (Table table : kAllTables) {
    auto it = entries.find(table_path(table));
    if (it == entries.end()) damaged("missing table " + std::string(table_name(table)));
    decode_table_document(table, it->second, Store::kSchemaVersion, out.state);
  }
  validate_state(out.state);
  if (table_counts(out.state) != manifest["counts"]) {
    throw Error(ErrorCode::CorruptTable, "manifest counts do not match the table contents",
                {{"table", "manifest"}});
  }
  const std::string media_prefix = "media/";
  for (const auto& [path, data] : entries) {
    if (path.rfind(media_prefix, 0) != 0) continue;
    std::string relative = path.substr(media_prefix.size());
    if (!is_safe_media_path(relative)) damaged("unsafe media path " + path);
    out.media.emplace(relative, std::string(data));
  }
  return out;
}

BackupReceipt create_backup(const Store& store, const fs::path& dest) {
  std::string archive = build_archive(store);
  fs::path target = fs::absolute(dest);
  fs::path temp = target;
  temp += ".tmp";

  FileOps ops;
  try {
    ops.write_file(temp, archive);
    ops.sync_file(temp);
    ops.rename(temp, target);
    ops.sync_dir(target.parent_path());
  } catch (...) {
    std::error_code ec;
    fs::remove(temp, ec);
    throw;
  }

  std::string written = read_whole_file(target, ErrorCode::IoFailure);
  std::string digest = sha256_hex(written);
  if (written != archive) {
    throw Error(ErrorCode::IoFailure, "archive read back differently from what was written",
                {{"path", target.string()}});
  }
  ArchiveContents verified = read_archive(written);
  return {target, written.size(), digest, verified.manifest};
}

std::unique_ptr<Store> restore_backup(const fs::path& archive, const fs::path& root, bool overwrite,
                                      StoreOptions options) {
  ArchiveContents contents = read_archive(read_whole_file(archive, ErrorCode::Inaccessible));

  fs::path target = fs::absolute(root);
  if (is_empty_dir(target)) return Store::create(target, contents.state, contents.media, options);
  if (!overwrite) {
    throw Error(ErrorCode::TargetNotEmpty,
                "restore target " + target.string() + " is not empty; pass overwrite to replace it",
                {{"path", target.string()}});
  }
  if (!fs::is_directory(target)) {
    throw Error(ErrorCode::Inaccessible, target.string() + " is not a directory");
  }

  // Build the restored store beside the target, then swap directories so a
  // failure part-way never leaves a half-written store in place.
  fs::path staging = target;
  staging += ".restore-tmp";
  fs::path retired = target;
  retired += ".restore-old";
  std::error_code ec;
  fs::remove_all(staging, ec);
  fs::remove_all(retired, ec);
  Store::create(staging, contents.state, contents.media, options).reset();

  int fd = ::open((target / ".lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0 || ::flock(fd, LOCK_EX | LOCK_NB) != 0) {
    if (fd >= 0) ::close(fd);
    fs::remove_all(staging, ec);
    throw Error(ErrorCode::StoreLocked, "store " + target.string() + " is open elsewhere");
  }
  try {
    fs::rename(target, retired);
    fs::rename(staging, target);
  } catch (const fs::filesystem_error& e) {
    ::close(fd);
    if (!fs::exists(target) && fs::exists(retired)) fs::rename(retired, target, ec);
    throw Error(ErrorCode::IoFailure, std::string("cannot swap in the restored store: ") + e.what());
  }
  ::close(fd);
  fs::remove_all(retired, ec);
  return Store::open(target, std::move(options));
}

UploadReceipt upload_backup(const fs::path& archive, const std::string& url) {
  if (url.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no upload URL configured (set SURVSTORE_BACKUP_URL)");
  }
  std::string bytes = read_whole_file(archive, ErrorCode::Inaccessible);
  UploadReceipt receipt;
  receipt.local_digest = sha256_hex(bytes);
  receipt.size = bytes.size();

  HttpResponse response = http_put(url, {{"X-Content-SHA256", receipt.local_digest}}, bytes,
                                   "application/octet-stream");
  receipt.status = response.status;
  if (response.status < 200 || response.status > 299) {
    throw Error(ErrorCode::RemoteRejected,
                "backup server answered HTTP " + std::to_string(response.status),
                {{"status", response.status}, {"body", response.body.substr(0, 512)}});
  }

  receipt.remote_digest = response.header("X-Content-SHA256");
  if (receipt.remote_digest.empty()) {
    json body = json::parse(response.body, nullptr, false);
    if (body.is_object() && body.contains("sha256") && body["sha256"].is_string()) {
      receipt.remote_digest = body["sha256"].get<std::string>();
    }
  }
  if (fold_case(trim(receipt.remote_digest)) != receipt.local_digest) {
    throw Error(ErrorCode::DigestMismatch, "backup server did not echo the archive digest",
                {{"local", receipt.local_digest}, {"remote", receipt.remote_digest}});
  }
  return receipt;
}

}  // namespace survstore
