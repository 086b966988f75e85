#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "survstore/records.hpp"
#include "survstore/timeutil.hpp"

namespace survstore {

namespace fs = std::filesystem;

/// The filesystem primitives a commit is built from. Each call either fully
/// succeeds or throws IoFailure. Tests subclass this to inject failures at
/// any step.
class FileOps {
 public:
  virtual ~FileOps() = default;
  /// Creates or truncates `path` and writes `data`.
  virtual void write_file(const fs::path& path, std::string_view data);
  virtual void sync_file(const fs::path& path);
  virtual void rename(const fs::path& from, const fs::path& to);
  virtual void sync_dir(const fs::path& dir);
  virtual void remove(const fs::path& path);
};

struct StoreOptions {
  /// fsync data files and directories around the commit point.
  bool durable = true;
  std::function<Timestamp()> clock = system_now;
  std::shared_ptr<FileOps> file_ops;  // defaults to the plain POSIX implementation
};

/// Owner of one store directory. Holds the directory lock for its lifetime.
///
/// Readers take immutable snapshots; writers go through mutate(), which runs
/// serially, works on a private copy, and installs the copy only after it has
/// been validated and committed to disk. A mutation that throws leaves both
/// memory and disk untouched.
///
/// On-disk commit: changed tables are written as new generation files, then
/// CURRENT.tmp is written and renamed over CURRENT. The rename is the commit
/// point; a crash before it leaves the previous generation in force.
class Store {
 public:
  static constexpr int kSchemaVersion = 1;
  static constexpr int kCurrentFormat = 1;

  static std::unique_ptr<Store> open(const fs::path& root, StoreOptions options = {});
  /// Store without a directory; media lives in memory. Used by tests and
  /// stateless computation serving.
  static std::unique_ptr<Store> in_memory(StoreOptions options = {});
  /// Initialises `root` (which must hold no committed store) with the given
  /// content and opens it.
  static std::unique_ptr<Store> create(const fs::path& root, const StoreState& state,
                                       const std::map<std::string, std::string>& media,
                                       StoreOptions options = {});

  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  std::shared_ptr<const StoreState> snapshot() const;

  template <typename Fn>
  auto mutate(Fn&& fn) -> std::invoke_result_t<Fn, StoreState&> {
    std::lock_guard lock(writer_);
    auto next = std::make_shared<StoreState>(*snapshot());
    if constexpr (std::is_void_v<std::invoke_result_t<Fn, StoreState&>>) {
      fn(*next);
      commit(std::move(next));
    } else {
      auto result = fn(*next);
      commit(std::move(next));
      return result;
    }
  }

  /// Runs `fn(snapshot)` while holding the writer lock, so media files and
  /// tables are observed at the same commit.
  template <typename Fn>
  auto exclusive(Fn&& fn) const {
    std::lock_guard lock(writer_);
    return fn(*snapshot());
  }

  Timestamp now() const { return options_.clock(); }
  bool persistent() const noexcept { return !root_.empty(); }
  const fs::path& root() const noexcept { return root_; }
  std::uint64_t generation() const;

  /// Stores bytes under media/<relative>. Throws BadPhotoPath for unsafe
  /// paths.
  void put_media(const std::string& relative, std::string_view bytes);
  bool has_media(const std::string& relative) const;
  std::optional<std::string> read_media(const std::string& relative) const;
  /// Every media file, keyed by relative path. Call inside exclusive() for a
  /// snapshot consistent with the tables.
  std::map<std::string, std::string> media_files() const;

  std::string content_digest() const;

 private:
  Store(fs::path root, StoreOptions options);

  void acquire_lock();
  void load();
  void initialise(const StoreState& state);
  void commit(std::shared_ptr<StoreState> next);
  void write_generation(const StoreState& next, const std::vector<Table>& dirty,
                        std::uint64_t generation);
  void collect_garbage();
  void put_media_locked(const std::string& relative, std::string_view bytes);

  fs::path root_;
  StoreOptions options_;
  int lock_fd_ = -1;

  mutable std::mutex writer_;
  mutable std::mutex state_mutex_;
  std::shared_ptr<const StoreState> state_;
  std::uint64_t generation_ = 0;
  // Highest generation number ever attempted. A failed commit may still have
  // renamed CURRENT, so numbers are never handed out twice.
  std::uint64_t last_attempt_ = 0;
  std::map<Table, std::string> table_files_;  // relative to root_

  mutable std::mutex media_mutex_;
  std::map<std::string, std::string> memory_media_;
};

}  // namespace survstore
