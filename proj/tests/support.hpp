#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include <doctest.h>

#include "survstore/error.hpp"

namespace survstore::testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed recursively on scope
/// exit.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "survstore-test-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::permissions(path_, fs::perms::owner_all, fs::perm_options::add, ec);
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& child) const { return path_ / child; }

 private:
  fs::path path_;
};

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline long long uniform_int(Rng& rng, long long lo, long long hi) {
  return std::uniform_int_distribution<long long>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) { return uniform(rng, 0.0, 1.0) < p; }

inline std::string code_of(ErrorCode code) { return std::string(code_name(code)); }

}  // namespace survstore::testing

// Fails unless `expr` throws survstore::Error with the given code.
#define CHECK_CODE(expr, expected)                                                   \
  do {                                                                               \
    bool threw_ = false;                                                             \
    try {                                                                            \
      (void)(expr);                                                                  \
    } catch (const ::survstore::Error& e_) {                                         \
      threw_ = true;                                                                 \
      CHECK(::survstore::testing::code_of(e_.code()) ==                              \
            ::survstore::testing::code_of(expected));                                \
    }                                                                                \
    CHECK_MESSAGE(threw_, #expr " did not throw");                                   \
  } while (0)
