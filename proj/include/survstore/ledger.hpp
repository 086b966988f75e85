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

struct LendingLine {
  std::string instrument_name;
  std::int64_t quantity = 0;
  std::vector<std::string> serials;  // padded with "" up to quantity
};

struct NewLending {
  std::string person_name;
  std::string person_department;
  std::string person_phone;
  std::string remarks;
  std::vector<LendingLine> lines;
  std::optional<Timestamp> date;  // defaults to now
};

struct ReturnNoteLine {
  std::string instrument_name;
  std::int64_t quantity = 0;
  std::vector<std::string> serials;
};

struct ReturnNote {
  std::int64_t lending_id = 0;
  Timestamp issued_at{};
  Timestamp lent_at{};
  std::string person_name;
  std::string person_department;
  std::string person_phone;
  std::vector<ReturnNoteLine> lines;
  std::int64_t total_instru = 0;
  std::string remarks;
};

/// Fixed plain-text layout for printing: title, borrower block, timestamps,
/// a ruled item table, total, remarks.
std::string render_return_note(const ReturnNote& note);

struct AvailabilityRow {
  std::string instrument_name;
  std::int64_t available = 0;
  std::int64_t lent = 0;
  std::int64_t faulty = 0;
  std::int64_t total = 0;
};

struct AvailabilitySnapshot {
  std::vector<AvailabilityRow> instruments;  // by name
  std::int64_t available = 0;
  std::int64_t lent = 0;
  std::int64_t faulty = 0;
  std::int64_t total = 0;
};

struct DailyPoint {
  Date date{};
  std::int64_t instruments_lent = 0;
};

// Pure views over a state snapshot.
std::vector<LendingRecord> search_lendings(std::span<const LendingRecord> lendings,
                                           std::string_view query, bool include_deleted);
AvailabilitySnapshot availability_of(const StoreState& state);
std::vector<DailyPoint> daily_series_of(const StoreState& state, Date from, Date to);

class LendingLedger {
 public:
  explicit LendingLedger(Store& store) : store_(store) {}

  /// All stock moves of one lending commit together or not at all.
  LendingRecord create(const NewLending& lending);
  ReturnNote return_lending(std::int64_t lending_id, const std::string& remarks = {});
  /// Re-issues the note of an already returned lending.
  ReturnNote return_note(std::int64_t lending_id) const;

  /// Recycle bin. Stock counts are never touched: an open lending's
  /// instruments are still out.
  void soft_delete(std::int64_t lending_id);
  LendingRecord restore(std::int64_t lending_id);
  /// Permanently removes a returned lending from the recycle bin. Requires
  /// `force`.
  void purge(std::int64_t lending_id, bool force);

  LendingRecord get(std::int64_t lending_id) const;
  std::vector<LendingRecord> list() const;
  std::vector<LendingRecord> recycle_bin() const;
  std::vector<LendingRecord> search(std::string_view query, bool include_deleted = false) const;

  AvailabilitySnapshot availability() const;
  std::vector<DailyPoint> daily_series(Date from, Date to) const;

  /// Creates or edits an instrument's counts. `faulty` and `description`
  /// keep their stored values (0 / "" for new instruments) when absent.
  InstrumentStock upsert_instrument(const std::string& name, std::int64_t total,
                                    std::optional<std::int64_t> faulty = {},
                                    std::optional<std::string> description = {});
  std::vector<InstrumentStock> instruments() const;

 private:
  Store& store_;
};

}  // namespace survstore
