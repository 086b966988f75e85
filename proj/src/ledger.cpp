#include "survstore/ledger.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "survstore/error.hpp"
#include "survstore/text.hpp"

namespace survstore {

namespace {

constexpr long kMaxSeriesDays = 36600;

[[noreturn]] void not_found(std::int64_t id) {
  throw Error(ErrorCode::NotFound, "no lending with id " + std::to_string(id), {{"id", id}});
}

LendingRecord* find_lending(StoreState& state, std::int64_t id) {
  for (auto& l : state.lendings) {
    if (l.lending_id == id) return &l;
  }
  return nullptr;
}

InstrumentStock* find_instrument(StoreState& state, std::string_view name) {
  for (auto& s : state.instruments) {
    if (iequals(s.instrument_name, name)) return &s;
  }
  return nullptr;
}

bool newest_first(const LendingRecord& a, const LendingRecord& b) {
  if (a.date != b.date) return a.date > b.date;
  return a.lending_id > b.lending_id;
}

ReturnNote note_for(const LendingRecord& l) {
  ReturnNote note;
  note.lending_id = l.lending_id;
  note.issued_at = l.return_date.value_or(Timestamp{});
  note.lent_at = l.date;
  note.person_name = l.person_name;
  note.person_department = l.person_department;
  note.person_phone = l.person_phone;
  for (const auto& d : l.details) note.lines.push_back({d.instrument_name, d.quantity, d.serials});
  note.total_instru = l.total_instru;
  note.remarks = l.remarks;
  return note;
}

}  // namespace

std::string render_return_note(const ReturnNote& note) {
  const std::string rule(48, '-');
  char line[160];
  std::string out;
  out += "RETURN NOTE\n";
  out += "Lending No.: " + std::to_string(note.lending_id) + "\n";
  out += "Borrower:    " + note.person_name + "\n";
  out += "Department:  " + note.person_department + "\n";
  out += "Phone:       " + note.person_phone + "\n";
  out += "Lent at:     " + format_timestamp(note.lent_at) + "\n";
  out += "Returned at: " + format_timestamp(note.issued_at) + "\n";
  out += rule + "\n";
  std::snprintf(line, sizeof line, "%-40s %7s\n", "Instrument", "Qty");
  out += line;
  out += rule + "\n";
  for (const auto& item : note.lines) {
    std::snprintf(line, sizeof line, "%-40.40s %7lld\n", item.instrument_name.c_str(),
                  static_cast<long long>(item.quantity));
    out += line;
    std::vector<std::string> serials;
    for (const auto& s : item.serials) {
      if (!s.empty()) serials.push_back(s);
    }
    if (!serials.empty()) {
      std::string joined;
      for (std::size_t i = 0; i < serials.size(); ++i) joined += (i ? ", " : "") + serials[i];
      out += "  Serials: " + joined + "\n";
    }
  }
  out += rule + "\n";
  std::snprintf(line, sizeof line, "%-40s %7lld\n", "Total", static_cast<long long>(note.total_instru));
  out += line;
  if (!note.remarks.empty()) out += "Remarks: " + note.remarks + "\n";
  return out;
}

std::vector<LendingRecord> search_lendings(std::span<const LendingRecord> lendings,
                                           std::string_view query, bool include_deleted) {
  std::vector<LendingRecord> out;
  for (const auto& l : lendings) {
    if (l.deleted && !include_deleted) continue;
    bool hit = icontains(l.person_name, query) || icontains(l.person_department, query);
    for (const auto& d : l.details) {
      if (hit) break;
      hit = icontains(d.instrument_name, query);
      for (const auto& serial : d.serials) hit = hit || icontains(serial, query);
    }
    if (hit) out.push_back(l);
  }
  std::sort(out.begin(), out.end(), newest_first);
  return out;
}

AvailabilitySnapshot availability_of(const StoreState& state) {
  AvailabilitySnapshot snap;
  for (const auto& s : state.instruments) {
    snap.instruments.push_back({s.instrument_name, s.remaining(), s.lent, s.faulty, s.total});
    snap.available += s.remaining();
    snap.lent += s.lent;
    snap.faulty += s.faulty;
    snap.total += s.total;
  }
  std::sort(snap.instruments.begin(), snap.instruments.end(), [](const auto& a, const auto& b) {
    return fold_case(a.instrument_name) < fold_case(b.instrument_name);
  });
  return snap;
}

std::vector<DailyPoint> daily_series_of(const StoreState& state, Date from, Date to) {
  if (!from.ok() || !to.ok() || std::chrono::sys_days{from} > std::chrono::sys_days{to}) {
    throw Error(ErrorCode::InvalidRange, "range start must not be after its end",
                {{"from", format_date(from)}, {"to", format_date(to)}});
  }
  const auto first = std::chrono::sys_days{from};
  const auto last = std::chrono::sys_days{to};
  if ((last - first).count() > kMaxSeriesDays) {
    throw Error(ErrorCode::InvalidRange, "range too long", {{"max_days", kMaxSeriesDays}});
  }
  std::map<std::chrono::sys_days, std::int64_t> totals;
  for (const auto& l : state.lendings) {
    if (l.deleted) continue;
    auto day = std::chrono::floor<std::chrono::days>(l.date);
    if (day >= first && day <= last) totals[day] += l.total_instru;
  }
  std::vector<DailyPoint> series;
  for (auto day = first; day <= last; day += std::chrono::days{1}) {
    auto it = totals.find(day);
    series.push_back({Date{day}, it == totals.end() ? 0 : it->second});
  }
  return series;
}

LendingRecord LendingLedger::create(const NewLending& request) {
  if (trim(request.person_name).empty()) {
    throw Error(ErrorCode::InvalidArgument, "borrower name is required");
  }
  if (request.lines.empty()) {
    throw Error(ErrorCode::EmptyDetails, "a lending needs at least one instrument line");
  }
  for (std::size_t i = 0; i < request.lines.size(); ++i) {
    const LendingLine& line = request.lines[i];
    if (line.quantity < 1) {
      throw Error(ErrorCode::InvalidArgument, "quantity must be at least 1",
                  {{"line", i}, {"instrument", line.instrument_name}});
    }
    if (static_cast<std::int64_t>(line.serials.size()) > line.quantity) {
      throw Error(ErrorCode::InvalidArgument, "more serial numbers than units",
                  {{"line", i}, {"instrument", line.instrument_name}});
    }
  }

  return store_.mutate([&](StoreState& state) {
    // Resolve every name before checking any quantity so an unknown
    // instrument is reported even when another line is short.
    std::vector<InstrumentStock*> stock;
    for (const LendingLine& line : request.lines) {
      InstrumentStock* s = find_instrument(state, line.instrument_name);
      if (!s) {
        throw Error(ErrorCode::UnknownInstrument,
                    "unknown instrument '" + line.instrument_name + "'",
                    {{"instrument", line.instrument_name}});
      }
      stock.push_back(s);
    }
    std::map<InstrumentStock*, std::int64_t> requested;
    for (std::size_t i = 0; i < stock.size(); ++i) requested[stock[i]] += request.lines[i].quantity;
    for (const auto& [s, quantity] : requested) {
      if (quantity > s->remaining()) {
        throw Error(ErrorCode::InsufficientStock,
                    "only " + std::to_string(s->remaining()) + " " + s->instrument_name +
                        " available; " + std::to_string(quantity) + " requested",
                    {{"instrument", s->instrument_name},
                     {"requested", quantity},
                     {"available", s->remaining()},
                     {"shortfall", quantity - s->remaining()}});
      }
    }

    LendingRecord record;
    record.lending_id = state.sequences.lending++;
    record.date = request.date.value_or(store_.now());
    record.person_name = request.person_name;
    record.person_department = request.person_department;
    record.person_phone = request.person_phone;
    record.remarks = request.remarks;
    for (std::size_t i = 0; i < request.lines.size(); ++i) {
      const LendingLine& line = request.lines[i];
      LendingDetail detail;
      detail.detail_id = state.sequences.lending_detail++;
      detail.instrument_name = stock[i]->instrument_name;
      detail.quantity = line.quantity;
      detail.serials = line.serials;
      detail.serials.resize(static_cast<std::size_t>(line.quantity));
      record.total_instru += line.quantity;
      record.details.push_back(std::move(detail));
    }
    for (const auto& [s, quantity] : requested) s->lent += quantity;
    state.lendings.push_back(record);
    return record;
  });
}

ReturnNote LendingLedger::return_lending(std::int64_t lending_id, const std::string& remarks) {
  return store_.mutate([&](StoreState& state) {
    LendingRecord* l = find_lending(state, lending_id);
    if (!l) not_found(lending_id);
    if (l->deleted) {
      throw Error(ErrorCode::Deleted, "lending is in the recycle bin; restore it first",
                  {{"id", lending_id}});
    }
    if (l->is_returned) {
      throw Error(ErrorCode::AlreadyReturned, "lending was already returned",
                  {{"id", lending_id}, {"return_date", format_timestamp(*l->return_date)}});
    }
    l->is_returned = true;
    l->return_date = std::max(store_.now(), l->date);
    if (!remarks.empty()) l->remarks = l->remarks.empty() ? remarks : l->remarks + "; " + remarks;
    for (const auto& d : l->details) {
      InstrumentStock* s = find_instrument(state, d.instrument_name);
      if (!s || s->lent < d.quantity) {
        throw Error(ErrorCode::Internal, "stock record out of step with lending",
                    {{"instrument", d.instrument_name}});
      }
      s->lent -= d.quantity;
    }
    return note_for(*l);
  });
}

ReturnNote LendingLedger::return_note(std::int64_t lending_id) const {
  LendingRecord l = get(lending_id);
  if (!l.is_returned) {
    throw Error(ErrorCode::InvalidArgument, "lending has not been returned", {{"id", lending_id}});
  }
  return note_for(l);
}

void LendingLedger::soft_delete(std::int64_t lending_id) {
  store_.mutate([&](StoreState& state) {
    LendingRecord* l = find_lending(state, lending_id);
    if (!l) not_found(lending_id);
    if (l->deleted) {
      throw Error(ErrorCode::AlreadyDeleted, "lending is already in the recycle bin",
                  {{"id", lending_id}});
    }
    l->deleted = true;
    state.recycle.push_back({RecycleKind::Lending, lending_id, store_.now()});
  });
}

LendingRecord LendingLedger::restore(std::int64_t lending_id) {
  return store_.mutate([&](StoreState& state) {
    LendingRecord* l = find_lending(state, lending_id);
    if (!l) not_found(lending_id);
    if (!l->deleted) {
      throw Error(ErrorCode::NotDeleted, "lending is not in the recycle bin", {{"id", lending_id}});
    }
    l->deleted = false;
    std::erase_if(state.recycle, [&](const RecycleEntry& r) {
      return r.kind == RecycleKind::Lending && r.id == lending_id;
    });
    return *l;
  });
}

void LendingLedger::purge(std::int64_t lending_id, bool force) {
  if (!force) {
    throw Error(ErrorCode::ConfirmationRequired,
                "permanent deletion needs explicit confirmation (force)", {{"id", lending_id}});
  }
  store_.mutate([&](StoreState& state) {
    LendingRecord* l = find_lending(state, lending_id);
    if (!l) not_found(lending_id);
    if (!l->deleted) {
      throw Error(ErrorCode::NotDeleted, "only recycle-bin records can be purged",
                  {{"id", lending_id}});
    }
    if (!l->is_returned) {
      throw Error(ErrorCode::OpenLending, "instruments of this lending are still out",
                  {{"id", lending_id}});
    }
    std::erase_if(state.lendings, [&](const LendingRecord& r) { return r.lending_id == lending_id; });
    std::erase_if(state.recycle, [&](const RecycleEntry& r) {
      return r.kind == RecycleKind::Lending && r.id == lending_id;
    });
  });
}

LendingRecord LendingLedger::get(std::int64_t lending_id) const {
  auto state = store_.snapshot();
  for (const auto& l : state->lendings) {
    if (l.lending_id == lending_id) return l;
  }
  not_found(lending_id);
}

std::vector<LendingRecord> LendingLedger::list() const { return search("", false); }

std::vector<LendingRecord> LendingLedger::recycle_bin() const {
  auto state = store_.snapshot();
  std::vector<LendingRecord> out;
  for (const auto& l : state->lendings) {
    if (l.deleted) out.push_back(l);
  }
  std::sort(out.begin(), out.end(), newest_first);
  return out;
}

std::vector<LendingRecord> LendingLedger::search(std::string_view query,
                                                 bool include_deleted) const {
  auto state = store_.snapshot();
  return search_lendings(state->lendings, query, include_deleted);
}

AvailabilitySnapshot LendingLedger::availability() const {
  return availability_of(*store_.snapshot());
}

std::vector<DailyPoint> LendingLedger::daily_series(Date from, Date to) const {
  return daily_series_of(*store_.snapshot(), from, to);
}

InstrumentStock LendingLedger::upsert_instrument(const std::string& name, std::int64_t total,
                                                 std::optional<std::int64_t> faulty,
                                                 std::optional<std::string> description) {
  if (trim(name).empty()) throw Error(ErrorCode::InvalidArgument, "instrument name is required");
  if (total < 0 || (faulty && *faulty < 0)) {
    throw Error(ErrorCode::NegativeCount, "counts must not be negative",
                {{"total", total}, {"faulty", faulty ? nlohmann::json(*faulty) : nlohmann::json()}});
  }
  return store_.mutate([&](StoreState& state) {
    InstrumentStock* s = find_instrument(state, name);
    InstrumentStock next;
    if (s) {
      next = *s;
    } else {
      next.instrument_id = state.sequences.instrument;
      next.instrument_name = name;
    }
    next.total = total;
    if (faulty) next.faulty = *faulty;
    if (description) next.description = *description;
    if (next.lent + next.faulty > next.total) {
      throw Error(ErrorCode::WouldBreakConservation,
                  "total cannot be below lent + faulty for " + next.instrument_name,
                  {{"instrument", next.instrument_name},
                   {"total", next.total},
                   {"lent", next.lent},
                   {"faulty", next.faulty}});
    }
    if (s) {
      *s = next;
    } else {
      ++state.sequences.instrument;
      state.instruments.push_back(next);
    }
    return next;
  });
}

std::vector<InstrumentStock> LendingLedger::instruments() const {
  auto state = store_.snapshot();
  std::vector<InstrumentStock> out = state->instruments;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return fold_case(a.instrument_name) < fold_case(b.instrument_name);
  });
  return out;
}

}  // namespace survstore
