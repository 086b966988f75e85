#include <map>
#include <string>
#include <vector>

#include "ledger_model.hpp"
#include "support.hpp"
#include "survstore/codec.hpp"
#include "survstore/ledger.hpp"

using namespace survstore;
using namespace survstore::testing;
using namespace std::chrono;

namespace {

struct Clock {
  Timestamp now = sys_days{2024y / March / 5} + 9h;
};

struct Fixture {
  std::shared_ptr<Clock> clock = std::make_shared<Clock>();
  std::unique_ptr<Store> store;
  std::unique_ptr<LendingLedger> ledger;

  Fixture() {
    StoreOptions options;
    options.clock = [c = clock] { return c->now; };
    store = Store::in_memory(options);
    ledger = std::make_unique<LendingLedger>(*store);
  }

  NewLending lend(std::vector<LendingLine> lines, std::string who = "K. Mensah") {
    NewLending n;
    n.person_name = std::move(who);
    n.person_department = "Geomatic Engineering";
    n.person_phone = "0244000000";
    n.lines = std::move(lines);
    return n;
  }

  InstrumentStock stock(const std::string& name) {
    for (const auto& s : ledger->instruments()) {
      if (s.instrument_name == name) return s;
    }
    FAIL("no stock for " << name);
    return {};
  }

  std::string digest() { return state_digest(*store->snapshot()); }
};

std::map<std::string, std::tuple<std::int64_t, std::int64_t, std::int64_t>> stock_vector(LendingLedger& l) {
  std::map<std::string, std::tuple<std::int64_t, std::int64_t, std::int64_t>> v;
  for (const auto& s : l.instruments()) v[s.instrument_name] = {s.total, s.lent, s.faulty};
  return v;
}

}  // namespace

TEST_SUITE("ledger") {

TEST_CASE("create lending moves stock") {
  Fixture f;
  f.ledger->upsert_instrument("Level", 10);
  LendingRecord l = f.ledger->create(f.lend({{"Level", 3, {}}}));
  CHECK(l.lending_id == 1);
  CHECK(l.total_instru == 3);
  CHECK_FALSE(l.is_returned);
  REQUIRE(l.details.size() == 1);
  CHECK(l.details[0].serials == std::vector<std::string>{"", "", ""});
  CHECK(f.stock("Level").lent == 3);
  CHECK(f.stock("Level").remaining() == 7);
  CHECK(format_timestamp(l.date) == "2024-03-05T09:00:00Z");
}

TEST_CASE("over-stock and unknown instruments roll back") {
  Fixture f;
  f.ledger->upsert_instrument("Level", 10);
  const std::string before = f.digest();
  try {
    f.ledger->create(f.lend({{"Level", 11, {}}}));
    FAIL("expected InsufficientStock");
  } catch (const Error& e) {
    CHECK(code_of(e.code()) == "INSUFFICIENT_STOCK");
    CHECK(e.details()["instrument"] == "Level");
    CHECK(e.details()["shortfall"] == 1);
  }
  CHECK(f.stock("Level").lent == 0);
  CHECK(f.digest() == before);

  CHECK_CODE(f.ledger->create(f.lend({{"Level", 2, {}}, {"Tripod", 1, {}}})), ErrorCode::UnknownInstrument);
  CHECK(f.stock("Level").lent == 0);
  CHECK(f.digest() == before);

  // two lines of the same instrument are checked together
  CHECK_CODE(f.ledger->create(f.lend({{"Level", 6, {}}, {"level", 5, {}}})), ErrorCode::InsufficientStock);
  CHECK(f.digest() == before);

  CHECK_CODE(f.ledger->create(f.lend({})), ErrorCode::EmptyDetails);
  CHECK_CODE(f.ledger->create(f.lend({{"Level", 0, {}}})), ErrorCode::InvalidArgument);
  CHECK_CODE(f.ledger->create(f.lend({{"Level", 1, {"A", "B"}}})), ErrorCode::InvalidArgument);
  CHECK_CODE(f.ledger->create(f.lend({{"Level", 1, {}}}, " ")), ErrorCode::InvalidArgument);
  CHECK(f.digest() == before);
}

TEST_CASE("return lending issues a note and restores stock") {
  Fixture f;
  f.ledger->upsert_instrument("Level", 10);
  LendingRecord l = f.ledger->create(f.lend({{"Level", 3, {"L-1", "L-2"}}}));
  f.clock->now += 26h;
  ReturnNote note = f.ledger->return_lending(l.lending_id, "all in order");
  CHECK(f.stock("Level").lent == 0);
  REQUIRE(note.lines.size() == 1);
  CHECK(note.lines[0].instrument_name == "Level");
  CHECK(note.lines[0].quantity == 3);
  CHECK(note.lines[0].serials == std::vector<std::string>{"L-1", "L-2", ""});
  CHECK(note.total_instru == 3);
  CHECK(format_timestamp(note.issued_at) == "2024-03-06T11:00:00Z");

  LendingRecord stored = f.ledger->get(l.lending_id);
  CHECK(stored.is_returned);
  CHECK(format_timestamp(*stored.return_date) == "2024-03-06T11:00:00Z");
  CHECK(stored.remarks == "all in order");

  CHECK_CODE(f.ledger->return_lending(l.lending_id), ErrorCode::AlreadyReturned);
  CHECK_CODE(f.ledger->return_lending(9999), ErrorCode::NotFound);

  ReturnNote again = f.ledger->return_note(l.lending_id);
  CHECK(again.lines.size() == 1);
  CHECK(again.issued_at == note.issued_at);

  const std::string text = render_return_note(note);
  CHECK(text.find("RETURN NOTE") != std::string::npos);
  CHECK(text.find("K. Mensah") != std::string::npos);
  CHECK(text.find("Level") != std::string::npos);
  CHECK(text.find("L-1") != std::string::npos);
}

TEST_CASE("return of a deleted lending is refused") {
  Fixture f;
  f.ledger->upsert_instrument("Level", 10);
  LendingRecord l = f.ledger->create(f.lend({{"Level", 1, {}}}));
  f.ledger->soft_delete(l.lending_id);
  CHECK_CODE(f.ledger->return_lending(l.lending_id), ErrorCode::Deleted);
  CHECK_CODE(f.ledger->return_note(l.lending_id), ErrorCode::InvalidArgument);
}

TEST_CASE("soft delete keeps stock and hides the record") {
  Fixture f;
  f.ledger->upsert_instrument("Level", 10);
  LendingRecord open = f.ledger->create(f.lend({{"Level", 4, {}}}));
  LendingRecord done = f.ledger->create(f.lend({{"Level", 1, {}}}));
  f.ledger->return_lending(done.lending_id);

  f.ledger->soft_delete(done.lending_id);
  CHECK(f.ledger->list().size() == 1);
  CHECK(f.ledger->recycle_bin().size() == 1);
  CHECK(f.ledger->recycle_bin()[0].lending_id == done.lending_id);

  auto before = stock_vector(*f.ledger);
  f.ledger->soft_delete(open.lending_id);
  CHECK(stock_vector(*f.ledger) == before);
  CHECK(f.stock("Level").lent == 4);
  CHECK(f.ledger->availability().lent == 4);
  CHECK_CODE(f.ledger->soft_delete(open.lending_id), ErrorCode::AlreadyDeleted);
  CHECK_CODE(f.ledger->soft_delete(777), ErrorCode::NotFound);
  CHECK(f.ledger->list().empty());
}

TEST_CASE("restore round trip") {
  Fixture f;
  f.ledger->upsert_instrument("Level", 10);
  LendingRecord l = f.ledger->create(f.lend({{"Level", 2, {"S1"}}}));
  CHECK_CODE(f.ledger->restore(l.lending_id), ErrorCode::NotDeleted);
  auto stock_before = stock_vector(*f.ledger);
  for (int cycle = 0; cycle < 3; ++cycle) {
    f.ledger->soft_delete(l.lending_id);
    CHECK(stock_vector(*f.ledger) == stock_before);
    LendingRecord back = f.ledger->restore(l.lending_id);
    CHECK(back == l);
    CHECK(f.ledger->get(l.lending_id) == l);
    CHECK(stock_vector(*f.ledger) == stock_before);
    CHECK(f.store->snapshot()->recycle.empty());
  }
  CHECK_CODE(f.ledger->restore(4242), ErrorCode::NotFound);
}

TEST_CASE("purge needs force, a deleted record and a return") {
  Fixture f;
  f.ledger->upsert_instrument("Level", 10);
  LendingRecord l = f.ledger->create(f.lend({{"Level", 2, {}}}));
  CHECK_CODE(f.ledger->purge(l.lending_id, true), ErrorCode::NotDeleted);
  f.ledger->soft_delete(l.lending_id);
  CHECK_CODE(f.ledger->purge(l.lending_id, false), ErrorCode::ConfirmationRequired);
  CHECK_CODE(f.ledger->purge(l.lending_id, true), ErrorCode::OpenLending);
  f.ledger->restore(l.lending_id);
  f.ledger->return_lending(l.lending_id);
  f.ledger->soft_delete(l.lending_id);
  f.ledger->purge(l.lending_id, true);
  CHECK_CODE(f.ledger->get(l.lending_id), ErrorCode::NotFound);
  CHECK(f.store->snapshot()->recycle.empty());
  // ids are not reused after a purge
  CHECK(f.ledger->create(f.lend({{"Level", 1, {}}})).lending_id == l.lending_id + 1);
}

TEST_CASE("availability snapshot") {
  Fixture f;
  AvailabilitySnapshot empty = f.ledger->availability();
  CHECK(empty.available == 0);
  CHECK(empty.lent == 0);
  CHECK(empty.faulty == 0);

  f.ledger->upsert_instrument("Total Station", 20, 2);
  f.ledger->create(f.lend({{"Total Station", 5, {}}}));
  AvailabilitySnapshot s = f.ledger->availability();
  REQUIRE(s.instruments.size() == 1);
  CHECK(s.instruments[0].available == 13);
  CHECK(s.instruments[0].lent == 5);
  CHECK(s.instruments[0].faulty == 2);
  CHECK(s.available + s.lent + s.faulty == s.total);

  f.ledger->create(f.lend({{"Total Station", 3, {}}}));
  AvailabilitySnapshot after = f.ledger->availability();
  CHECK(after.lent == s.lent + 3);
  CHECK(after.available == s.available - 3);
  CHECK(after.faulty == s.faulty);
}

TEST_CASE("daily series") {
  Fixture f;
  f.ledger->upsert_instrument("Level", 50);
  const Date d{2024y / March / 5};
  f.ledger->create(f.lend({{"Level", 3, {}}}));
  f.clock->now += 2h;
  LendingRecord second = f.ledger->create(f.lend({{"Level", 2, {}}}));
  f.clock->now += 48h;
  f.ledger->create(f.lend({{"Level", 4, {}}}));

  auto series = f.ledger->daily_series(Date{2024y / March / 4}, Date{2024y / March / 8});
  REQUIRE(series.size() == 5);
  CHECK(series[0].instruments_lent == 0);
  CHECK(series[1].date == d);
  CHECK(series[1].instruments_lent == 5);
  CHECK(series[2].instruments_lent == 0);
  CHECK(series[3].instruments_lent == 4);

  f.ledger->soft_delete(second.lending_id);
  CHECK(f.ledger->daily_series(d, d)[0].instruments_lent == 3);
  CHECK_CODE(f.ledger->daily_series(Date{2024y / March / 8}, d), ErrorCode::InvalidRange);
}

TEST_CASE("search transactions") {
  Fixture f;
  f.ledger->upsert_instrument("Total Station", 5);
  f.ledger->upsert_instrument("Level", 5);
  LendingRecord a = f.ledger->create(f.lend({{"Level", 1, {}}}, "K. Mensah"));
  f.clock->now += 1h;
  LendingRecord b = f.ledger->create(f.lend({{"Total Station", 1, {"TS-0042"}}}, "A. Owusu"));
  f.clock->now += 1h;
  LendingRecord c = f.ledger->create(f.lend({{"Level", 1, {}}}, "E. Boateng"));

  auto ids = [](const std::vector<LendingRecord>& v) {
    std::vector<std::int64_t> out;
    for (const auto& l : v) out.push_back(l.lending_id);
    return out;
  };
  CHECK(ids(f.ledger->search("mensah")) == std::vector<std::int64_t>{a.lending_id});
  CHECK(ids(f.ledger->search("TS-0042")) == std::vector<std::int64_t>{b.lending_id});
  CHECK(ids(f.ledger->search("ts-0042")) == std::vector<std::int64_t>{b.lending_id});
  CHECK(ids(f.ledger->search("level")) == std::vector<std::int64_t>{c.lending_id, a.lending_id});
  CHECK(ids(f.ledger->search("")) == std::vector<std::int64_t>{c.lending_id, b.lending_id, a.lending_id});
  CHECK(ids(f.ledger->search("geomatic")).size() == 3);
  f.ledger->soft_delete(a.lending_id);
  CHECK(ids(f.ledger->search("mensah")).empty());
  CHECK(ids(f.ledger->search("mensah", true)) == std::vector<std::int64_t>{a.lending_id});
}

TEST_CASE("upsert instrument") {
  Fixture f;
  InstrumentStock t = f.ledger->upsert_instrument("Theodolite", 4);
  CHECK(t.remaining() == 4);
  f.ledger->create(f.lend({{"Theodolite", 3, {}}}));
  CHECK_CODE(f.ledger->upsert_instrument("Theodolite", 2), ErrorCode::WouldBreakConservation);
  CHECK_CODE(f.ledger->upsert_instrument("Theodolite", -1), ErrorCode::NegativeCount);
  CHECK_CODE(f.ledger->upsert_instrument("Theodolite", 4, -1), ErrorCode::NegativeCount);
  CHECK_CODE(f.ledger->upsert_instrument("", 4), ErrorCode::InvalidArgument);

  Fixture g;
  g.ledger->upsert_instrument("Theodolite", 4, std::nullopt, std::string("Wild T2"));
  g.ledger->create(g.lend({{"Theodolite", 1, {}}}));
  InstrumentStock marked = g.ledger->upsert_instrument("theodolite", 4, 1);
  CHECK(marked.remaining() == 2);
  CHECK(marked.instrument_name == "Theodolite");
  CHECK(marked.description == "Wild T2");
  CHECK(g.ledger->instruments().size() == 1);
}

TEST_CASE("property: create then return restores the stock vector") {
  Rng rng(0x5eed0301);
  Fixture f;
  const char* names[] = {"Level", "Staff", "Tripod"};
  for (const char* n : names) f.ledger->upsert_instrument(n, 20, 1);
  for (int i = 0; i < 200; ++i) {
    auto before = stock_vector(*f.ledger);
    std::vector<LendingLine> lines;
    for (const char* n : names) {
      if (coin(rng)) lines.push_back({n, uniform_int(rng, 1, 5), {}});
    }
    if (lines.empty()) lines.push_back({"Level", 1, {}});
    LendingRecord l = f.ledger->create(f.lend(lines));
    CHECK(stock_vector(*f.ledger) != before);
    f.ledger->return_lending(l.lending_id);
    CHECK(stock_vector(*f.ledger) == before);
  }
}

TEST_CASE("property: 10000 random operations keep the ledger conserved") {
  Rng rng(0x5eed0302);
  auto store = Store::in_memory();
  model::LedgerModel m(*store);
  model::RunReport report = m.run(rng, 10000);
  CHECK(report.operations == 10000);
  CHECK(report.violations == std::vector<std::string>{});
  CHECK(report.rejected > 500);
  CHECK(report.accepted > 3000);
  for (const char* kind : {"create", "return", "delete", "restore", "purge", "upsert"}) {
    CHECK_MESSAGE(report.by_kind[kind] > 300, kind);
  }
}

}  // TEST_SUITE
