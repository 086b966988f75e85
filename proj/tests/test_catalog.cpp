#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "support.hpp"
#include "survstore/catalog.hpp"
#include "survstore/codec.hpp"
#include "survstore/ledger.hpp"

using namespace survstore;
using namespace survstore::testing;

namespace {

CatalogEntry entry(std::string name, std::string description, std::string room, std::string shelf) {
  return CatalogEntry{std::move(name), std::move(description), std::move(room), std::move(shelf), {}};
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> names_of(const std::vector<CatalogEntry>& v) {
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(e.instrument_name);
  return out;
}

// Name hits by name, then description-only hits by name.
std::vector<std::string> search_oracle(const std::vector<CatalogEntry>& all, const std::string& q) {
  std::vector<std::pair<int, std::string>> hits;
  for (const auto& e : all) {
    if (lower(e.instrument_name).find(lower(q)) != std::string::npos) {
      hits.emplace_back(0, e.instrument_name);
    } else if (lower(e.description).find(lower(q)) != std::string::npos) {
      hits.emplace_back(1, e.instrument_name);
    }
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return std::make_pair(a.first, lower(a.second)) < std::make_pair(b.first, lower(b.second));
  });
  std::vector<std::string> out;
  for (const auto& h : hits) out.push_back(h.second);
  return out;
}

struct Fixture {
  std::unique_ptr<Store> store = Store::in_memory();
  InstrumentCatalog catalog{*store};
  LendingLedger ledger{*store};

  Fixture() {
    catalog.upsert(entry("Automatic Level", "Self-levelling optical level", "Room 2", "R2-S4"));
    catalog.upsert(entry("Levelling Staff", "5 m telescopic staff", "Room 2", "R2-S5"));
    catalog.upsert(entry("Tripod", "Wooden tripod for levels and total stations", "Room 1", "R1-S1"));
    catalog.upsert(entry("Total Station", "Leica TS06", "Room 1", "R1-S2"));
  }
};

}  // namespace

TEST_SUITE("catalog") {

TEST_CASE("locate") {
  Fixture f;
  InstrumentLocation loc = f.catalog.locate("Automatic Level");
  CHECK(loc.room == "Room 2");
  CHECK(loc.shelf == "R2-S4");
  CHECK(loc.description == "Self-levelling optical level");
  InstrumentLocation folded = f.catalog.locate("automatic level");
  CHECK(folded.room == loc.room);
  CHECK(folded.shelf == loc.shelf);
  CHECK(folded.instrument_name == "Automatic Level");
  CHECK_CODE(f.catalog.locate("Planimeter"), ErrorCode::NotFound);
}

TEST_CASE("search") {
  Fixture f;
  CHECK(names_of(f.catalog.search("lev")) ==
        std::vector<std::string>{"Automatic Level", "Levelling Staff", "Tripod"});
  CHECK(names_of(f.catalog.search("")) ==
        std::vector<std::string>{"Automatic Level", "Levelling Staff", "Total Station", "Tripod"});
  CHECK(f.catalog.search("gyroscope").empty());
}

TEST_CASE("property: search equals brute force on random corpora") {
  Rng rng(0x5eed0401);
  const std::string alphabet = "abcAB ";
  auto word = [&](int lo, int hi) {
    std::string s;
    const auto n = uniform_int(rng, lo, hi);
    for (long long i = 0; i < n; ++i) s += alphabet[uniform_int(rng, 0, alphabet.size() - 1)];
    return s;
  };
  for (int round = 0; round < 500; ++round) {
    std::vector<CatalogEntry> corpus;
    const auto n = uniform_int(rng, 0, 20);
    for (long long i = 0; i < n; ++i) {
      corpus.push_back(entry("I" + std::to_string(i) + word(0, 4), word(0, 10), "R", ""));
    }
    const std::string q = word(0, 3);
    CHECK(names_of(search_catalog_entries(corpus, q)) == search_oracle(corpus, q));
  }
}

TEST_CASE("upsert validation") {
  Fixture f;
  CHECK_CODE(f.catalog.upsert(entry("Prism", "", "", "")), ErrorCode::InvalidArgument);
  CHECK_CODE(f.catalog.upsert(entry("", "", "Room 1", "")), ErrorCode::InvalidArgument);
  CatalogEntry media = entry("Prism", "", "Room 1", "");
  media.media_refs = {"../x.mp4"};
  CHECK_CODE(f.catalog.upsert(media), ErrorCode::BadPhotoPath);
  media.media_refs = {"catalog/prism.jpg"};
  f.catalog.upsert(media);
  f.catalog.upsert(entry("prism", "moved", "Room 3", "R3-S1"));
  CHECK(f.store->snapshot()->catalog.size() == 5);
  CHECK(f.catalog.locate("Prism").room == "Room 3");
}

TEST_CASE("job requirements join live availability") {
  Fixture f;
  f.ledger.upsert_instrument("Automatic Level", 3);
  f.ledger.upsert_instrument("Levelling Staff", 6);
  f.ledger.upsert_instrument("Tripod", 0);
  f.catalog.set_job({"leveling run", {{"Automatic Level", 1}, {"Levelling Staff", 2}, {"Tripod", 1}}});
  NewLending n;
  n.person_name = "A. Owusu";
  n.lines = {{"Levelling Staff", 2, {}}};
  f.ledger.create(n);

  auto rows = f.catalog.job_requirements("Leveling Run");
  REQUIRE(rows.size() == 3);
  AvailabilitySnapshot snap = f.ledger.availability();
  for (const auto& row : rows) {
    auto it = std::find_if(snap.instruments.begin(), snap.instruments.end(),
                           [&](const AvailabilityRow& a) { return a.instrument_name == row.instrument_name; });
    REQUIRE(it != snap.instruments.end());
    REQUIRE(row.available.has_value());
    CHECK(*row.available == it->available);
  }
  CHECK(rows[0].quantity == 1);
  CHECK(*rows[1].available == 4);
  CHECK(*rows[2].available == 0);
  CHECK_CODE(f.catalog.job_requirements("astronomy"), ErrorCode::NotFound);

  f.catalog.set_job({"detailing", {{"Total Station", 1}}});
  CHECK_FALSE(f.catalog.job_requirements("detailing")[0].available.has_value());
  CHECK(f.catalog.jobs().size() == 2);
  CHECK(f.catalog.jobs()[0].job_type == "detailing");
}

TEST_CASE("job validation") {
  Fixture f;
  CHECK_CODE(f.catalog.set_job({"", {{"Tripod", 1}}}), ErrorCode::InvalidArgument);
  CHECK_CODE(f.catalog.set_job({"survey", {}}), ErrorCode::InvalidArgument);
  CHECK_CODE(f.catalog.set_job({"survey", {{"Tripod", 0}}}), ErrorCode::InvalidArgument);
}

TEST_CASE("integrity check lists every dangling name") {
  Fixture f;
  CHECK(f.catalog.check_integrity().empty());
  f.catalog.set_job({"cadastral", {{"Total Station", 1}, {"Prism", 2}, {"GNSS Rover", 1}}});
  f.catalog.set_job({"leveling run", {{"automatic level", 1}}});
  auto dangling = f.catalog.check_integrity();
  REQUIRE(dangling.size() == 2);
  CHECK(dangling[0].job_type == "cadastral");
  CHECK(dangling[0].instrument_name == "Prism");
  CHECK(dangling[1].instrument_name == "GNSS Rover");
  f.catalog.upsert(entry("Prism", "", "Room 1", ""));
  CHECK(f.catalog.check_integrity().size() == 1);
}

TEST_CASE("csv import") {
  Fixture f;
  f.catalog.upsert(CatalogEntry{"Tripod", "", "Room 1", "", {"catalog/tripod.jpg"}});
  const std::string csv =
      "InstrumentName,Description,Room,Shelf\n"
      "Prism,\"Single prism, with pole\",Room 1,R1-S3\n"
      "Tripod,Aluminium,Room 4,R4-S1\n";
  CHECK(f.catalog.import_csv(csv) == 2);
  CHECK(f.catalog.locate("Prism").description == "Single prism, with pole");
  CHECK(f.catalog.locate("Tripod").room == "Room 4");
  auto state = f.store->snapshot();
  auto tripod = std::find_if(state->catalog.begin(), state->catalog.end(),
                             [](const CatalogEntry& e) { return e.instrument_name == "Tripod"; });
  CHECK(tripod->media_refs == std::vector<std::string>{"catalog/tripod.jpg"});

  const std::string before = state_digest(*f.store->snapshot());
  CHECK_CODE(f.catalog.import_csv("Name,Room\nX,Y\n"), ErrorCode::MalformedCsv);
  CHECK_CODE(f.catalog.import_csv("InstrumentName,Description,Room,Shelf\nA,b,Room 1,S\nB,c\n"),
             ErrorCode::MalformedCsv);
  CHECK_CODE(f.catalog.import_csv("InstrumentName,Description,Room,Shelf\nA,b,,S\n"),
             ErrorCode::InvalidArgument);
  CHECK(state_digest(*f.store->snapshot()) == before);
}

}  // TEST_SUITE
