#include "survstore/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "survstore/codec.hpp"
#include "survstore/error.hpp"

namespace survstore {

using nlohmann::json;

namespace {

constexpr const char* kCurrent = "CURRENT";
constexpr const char* kCurrentTmp = "CURRENT.tmp";
constexpr const char* kTablesDir = "tables";
constexpr const char* kMediaDir = "media";
constexpr const char* kLockFile = ".lock";
constexpr const char* kUploadSuffix = ".upload-tmp";

[[noreturn]] void io_failure(const std::string& what, const fs::path& path, int err = errno) {
  throw Error(ErrorCode::IoFailure, what + " " + path.string() + ": " + std::strerror(err),
              {{"path", path.string()}});
}

class FdGuard {
 public:
  explicit FdGuard(int fd) : fd_(fd) {}
  ~FdGuard() {
    if (fd_ >= 0) ::close(fd_);
  }
  FdGuard(const FdGuard&) = delete;
  FdGuard& operator=(const FdGuard&) = delete;
  int get() const { return fd_; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }

 private:
  int fd_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw std::runtime_error("read failed");
  return buffer.str();
}

std::string generation_file(Table table, std::uint64_t generation) {
  return std::string(kTablesDir) + "/" + std::string(table_name(table)) + "." +
         std::to_string(generation) + ".json";
}

}  // namespace

// ---------------------------------------------------------------------------
// FileOps

void FileOps::write_file(const fs::path& path, std::string_view data) {
  FdGuard fd(::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
  if (fd.get() < 0) io_failure("cannot create", path);
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    ssize_t n = ::write(fd.get(), p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("write failed on", path);
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  if (::close(fd.release()) != 0) io_failure("close failed on", path);
}

void FileOps::sync_file(const fs::path& path) {
  FdGuard fd(::open(path.c_str(), O_RDONLY | O_CLOEXEC));
  if (fd.get() < 0) io_failure("cannot open", path);
  if (::fsync(fd.get()) != 0) io_failure("fsync failed on", path);
}

void FileOps::rename(const fs::path& from, const fs::path& to) {
  if (::rename(from.c_str(), to.c_str()) != 0) io_failure("rename failed for", from);
}

void FileOps::sync_dir(const fs::path& dir) {
  FdGuard fd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC));
  if (fd.get() < 0) io_failure("cannot open directory", dir);
  if (::fsync(fd.get()) != 0) io_failure("fsync failed on", dir);
}

void FileOps::remove(const fs::path& path) {
  if (::unlink(path.c_str()) != 0 && errno != ENOENT) io_failure("cannot remove", path);
}

// ---------------------------------------------------------------------------
// Store

Store::Store(fs::path root, StoreOptions options) : root_(std::move(root)), options_(std::move(options)) {
  if (!options_.file_ops) options_.file_ops = std::make_shared<FileOps>();
  if (!options_.clock) options_.clock = system_now;
}

Store::~Store() {
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

std::unique_ptr<Store> Store::in_memory(StoreOptions options) {
  std::unique_ptr<Store> store(new Store({}, std::move(options)));
  store->state_ = std::make_shared<const StoreState>();
  return store;
}

std::unique_ptr<Store> Store::open(const fs::path& root, StoreOptions options) {
  if (root.empty()) throw Error(ErrorCode::Inaccessible, "store directory not given");
  std::unique_ptr<Store> store(new Store(fs::absolute(root), std::move(options)));
  store->acquire_lock();
  if (fs::exists(store->root_ / kCurrent)) {
    store->load();
  } else {
    store->initialise(StoreState{});
  }
  store->collect_garbage();
  return store;
}

std::unique_ptr<Store> Store::create(const fs::path& root, const StoreState& state,
                                     const std::map<std::string, std::string>& media,
                                     StoreOptions options) {
  std::unique_ptr<Store> store(new Store(fs::absolute(root), std::move(options)));
  store->acquire_lock();
  if (fs::exists(store->root_ / kCurrent)) {
    throw Error(ErrorCode::TargetNotEmpty, "a store already exists at " + store->root_.string());
  }
  validate_state(state);
  for (const auto& [path, bytes] : media) store->put_media_locked(path, bytes);
  store->initialise(state);
  return store;
}

void Store::acquire_lock() {
  std::error_code ec;
  fs::create_directories(root_ / kTablesDir, ec);
  if (!ec) fs::create_directories(root_ / kMediaDir, ec);
  if (ec) {
    throw Error(ErrorCode::Inaccessible, "cannot create store directory " + root_.string() + ": " +
                                             ec.message());
  }
  fs::path lock_path = root_ / kLockFile;
  int fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(ErrorCode::Inaccessible,
                "cannot open lock file " + lock_path.string() + ": " + std::strerror(errno));
  }
  if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
    int err = errno;
    ::close(fd);
    if (err == EWOULDBLOCK) {
      throw Error(ErrorCode::StoreLocked, "store " + root_.string() + " is open elsewhere");
    }
    throw Error(ErrorCode::Inaccessible, "cannot lock store: " + std::string(std::strerror(err)));
  }
  lock_fd_ = fd;
}

void Store::load() {
  std::string current_text;
  try {
    current_text = read_file(root_ / kCurrent);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Inaccessible, "cannot read " + (root_ / kCurrent).string());
  }
  json current = json::parse(current_text, nullptr, false);
  if (current.is_discarded() || !current.is_object()) {
    throw Error(ErrorCode::CorruptTable, "CURRENT is not valid JSON", {{"table", "CURRENT"}});
  }
  if (current.value("format", -1) != kCurrentFormat ||
      current.value("schema_version", -1) != kSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch, "unsupported store format or schema_version",
                {{"expected_schema_version", kSchemaVersion},
                 {"found", current.value("schema_version", json(nullptr))}});
  }
  if (!current.contains("generation") || !current["generation"].is_number_unsigned() ||
      !current.contains("tables") || !current["tables"].is_object() ||
      !current.contains("sequences")) {
    throw Error(ErrorCode::CorruptTable, "CURRENT is missing fields", {{"table", "CURRENT"}});
  }

  StoreState state;
  state.sequences = sequences_from_json(current["sequences"]);
  std::map<Table, std::string> files;
  for (Table table : kAllTables) {
    std::string name(table_name(table));
    const json& tables = current["tables"];
    if (!tables.contains(name) || !tables[name].is_string()) {
      throw Error(ErrorCode::CorruptTable, "CURRENT does not reference table " + name,
                  {{"table", name}});
    }
    std::string relative = tables[name].get<std::string>();
    if (relative.rfind(std::string(kTablesDir) + "/", 0) != 0 ||
        relative.find("..") != std::string::npos) {
      throw Error(ErrorCode::CorruptTable, "CURRENT references an unsafe path for " + name,
                  {{"table", name}});
    }
    std::string text;
    try {
      text = read_file(root_ / relative);
    } catch (const std::exception&) {
      throw Error(ErrorCode::CorruptTable, "table file missing or unreadable: " + relative,
                  {{"table", name}, {"file", relative}});
    }
    decode_table_document(table, text, kSchemaVersion, state);
    files[table] = relative;
  }
  validate_state(state);

  state_ = std::make_shared<const StoreState>(std::move(state));
  generation_ = current["generation"].get<std::uint64_t>();
  last_attempt_ = generation_;
  table_files_ = std::move(files);
}

void Store::initialise(const StoreState& state) {
  std::vector<Table> all(kAllTables.begin(), kAllTables.end());
  last_attempt_ = 1;
  write_generation(state, all, 1);
  state_ = std::make_shared<const StoreState>(state);
}

std::shared_ptr<const StoreState> Store::snapshot() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

std::uint64_t Store::generation() const {
  std::lock_guard lock(state_mutex_);
  return generation_;
}

void Store::commit(std::shared_ptr<StoreState> next) {
  auto current = snapshot();
  if (*next == *current) return;

  try {
    validate_state(*next);
  } catch (const Error& e) {
    // Module validation should have rejected this before it got here.
    throw Error(ErrorCode::Internal, std::string("mutation broke a store invariant: ") + e.what(),
                e.details());
  }

  if (persistent()) {
    std::vector<Table> dirty;
    if (next->beacons != current->beacons) dirty.push_back(Table::Beacons);
    if (next->lendings != current->lendings) {
      dirty.push_back(Table::Lendings);
      dirty.push_back(Table::LendingDetails);
    }
    if (next->instruments != current->instruments) dirty.push_back(Table::Instruments);
    if (next->catalog != current->catalog) dirty.push_back(Table::Catalog);
    if (next->job_templates != current->job_templates) dirty.push_back(Table::JobTemplates);
    if (next->recycle != current->recycle) dirty.push_back(Table::Recycle);
    write_generation(*next, dirty, ++last_attempt_);
  }

  std::lock_guard lock(state_mutex_);
  state_ = std::move(next);
}

void Store::write_generation(const StoreState& next, const std::vector<Table>& dirty,
                             std::uint64_t generation) {
  FileOps& ops = *options_.file_ops;
  std::map<Table, std::string> files = table_files_;

  for (Table table : dirty) {
    std::string relative = generation_file(table, generation);
    ops.write_file(root_ / relative, table_document(next, table, kSchemaVersion));
    if (options_.durable) ops.sync_file(root_ / relative);
    files[table] = relative;
  }

  json tables = json::object();
  for (const auto& [table, relative] : files) tables[std::string(table_name(table))] = relative;
  json current = {{"format", kCurrentFormat},
                  {"schema_version", kSchemaVersion},
                  {"generation", generation},
                  {"sequences", to_json(next.sequences)},
                  {"tables", std::move(tables)}};

  ops.write_file(root_ / kCurrentTmp, current.dump(2) + "\n");
  if (options_.durable) {
    ops.sync_file(root_ / kCurrentTmp);
    ops.sync_dir(root_ / kTablesDir);
  }
  ops.rename(root_ / kCurrentTmp, root_ / kCurrent);

  // Committed. What follows only affects durability timing and disk usage.
  std::map<Table, std::string> superseded;
  for (const auto& [table, relative] : table_files_) {
    if (files[table] != relative) superseded[table] = relative;
  }
  {
    std::lock_guard lock(state_mutex_);
    table_files_ = std::move(files);
    generation_ = generation;
  }
  try {
    if (options_.durable) ops.sync_dir(root_);
    for (const auto& [table, relative] : superseded) ops.remove(root_ / relative);
  } catch (const Error&) {
    // Left for collect_garbage() on the next open.
  }
}

void Store::collect_garbage() {
  std::set<fs::path> live;
  for (const auto& [table, relative] : table_files_) live.insert(root_ / relative);
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_ / kTablesDir, ec)) {
    if (!live.count(entry.path())) fs::remove(entry.path(), ec);
  }
  fs::remove(root_ / kCurrentTmp, ec);
  for (auto it = fs::recursive_directory_iterator(root_ / kMediaDir, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    const std::string name = it->path().filename().string();
    if (it->is_regular_file() && name.ends_with(kUploadSuffix)) fs::remove(it->path(), ec);
  }
}

void Store::put_media(const std::string& relative, std::string_view bytes) {
  std::lock_guard lock(writer_);
  put_media_locked(relative, bytes);
}

void Store::put_media_locked(const std::string& relative, std::string_view bytes) {
  if (!is_safe_media_path(relative)) {
    throw Error(ErrorCode::BadPhotoPath, "unsafe media path '" + relative + "'",
                {{"path", relative}});
  }
  if (!persistent()) {
    std::lock_guard lock(media_mutex_);
    memory_media_[relative] = std::string(bytes);
    return;
  }
  FileOps& ops = *options_.file_ops;
  fs::path target = root_ / kMediaDir / relative;
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + target.parent_path().string());
  fs::path staging = target;
  staging += kUploadSuffix;
  ops.write_file(staging, bytes);
  if (options_.durable) ops.sync_file(staging);
  ops.rename(staging, target);
  if (options_.durable) ops.sync_dir(target.parent_path());
}

bool Store::has_media(const std::string& relative) const {
  if (!is_safe_media_path(relative)) return false;
  if (!persistent()) {
    std::lock_guard lock(media_mutex_);
    return memory_media_.count(relative) > 0;
  }
  std::error_code ec;
  return fs::is_regular_file(root_ / kMediaDir / relative, ec);
}

std::optional<std::string> Store::read_media(const std::string& relative) const {
  if (!has_media(relative)) return std::nullopt;
  if (!persistent()) {
    std::lock_guard lock(media_mutex_);
    return memory_media_.at(relative);
  }
  try {
    return read_file(root_ / kMediaDir / relative);
  } catch (const std::exception&) {
    throw Error(ErrorCode::IoFailure, "cannot read media file " + relative);
  }
}

std::map<std::string, std::string> Store::media_files() const {
  if (!persistent()) {
    std::lock_guard lock(media_mutex_);
    return memory_media_;
  }
  std::map<std::string, std::string> out;
  const fs::path base = root_ / kMediaDir;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(base, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    std::string relative = fs::relative(it->path(), base).generic_string();
    if (relative.ends_with(kUploadSuffix)) continue;
    try {
      out[relative] = read_file(it->path());
    } catch (const std::exception&) {
      throw Error(ErrorCode::IoFailure, "cannot read media file " + relative);
    }
  }
  if (ec) throw Error(ErrorCode::IoFailure, "cannot list media directory: " + ec.message());
  return out;
}

std::string Store::content_digest() const { return state_digest(*snapshot()); }

}  // namespace survstore
