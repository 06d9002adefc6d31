#include "doctest.h"

#include "geoprior/domain.hpp"

using namespace geoprior;

namespace {

RawRow make_row(const std::string& id, const std::string& lat, const std::string& lon,
                const std::string& date, const std::string& l1, const std::string& l2,
                const std::string& l3) {
    RawRow row;
    row.obs_id = id;
    row.latitude = lat;
    row.longitude = lon;
    row.date = date;
    row.label_l1 = l1;
    row.label_l2 = l2;
    row.label_l3 = l3;
    return row;
}

RawDataset three_row_fixture() {
    RawDataset raw;
    raw.rows.push_back(make_row("a1", "45.0", "-73.5", "2021-07-14", "famA", "genA", "spA"));
    raw.rows.push_back(make_row("a2", "45.1", "-73.4", "2021-07-15", "famA", "genA", "spB"));
    raw.rows.push_back(make_row("a3", "-12.0", "130.0", "2021-01-02", "famB", "genB", "spC"));
    return raw;
}

bool has_violation(const ValidationResult& result, ErrorKind kind) {
    for (const Violation& v : result.violations) {
        if (v.kind == kind) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("dates parse and index correctly") {
    auto d = Date::parse_iso("2021-03-05");
    REQUIRE(d.has_value());
    CHECK(d->year == 2021);
    CHECK(d->month == 3);
    CHECK(d->day == 5);

    CHECK(Date::parse_iso("2021-02-29") == std::nullopt);  // not a leap year
    CHECK(Date::parse_iso("2020-02-29").has_value());
    CHECK(Date::parse_iso("2021-13-01") == std::nullopt);
    CHECK(Date::parse_iso("2021-04-31") == std::nullopt);
    CHECK(Date::parse_iso("garbage") == std::nullopt);
    CHECK(Date::parse_iso("2021-1-05") == std::nullopt);

    CHECK(Date{2021, 1, 1}.day_index() == 0);
    CHECK(Date{2021, 12, 31}.day_index() == 364);
    CHECK(Date{2020, 12, 31}.day_index() == 365);
    CHECK(Date{2021, 1, 1}.year_length() == 365);
    CHECK(Date{2020, 1, 1}.year_length() == 366);
    CHECK(Date{2000, 1, 1}.year_length() == 366);  // divisible by 400
    CHECK(Date{1900, 1, 1}.year_length() == 365);  // century rule

    for (int idx : {0, 31, 59, 180, 364}) {
        CHECK(Date::from_day_index(2021, idx).day_index() == idx);
    }
    CHECK(Date{2021, 7, 14}.to_iso() == "2021-07-14");
}

TEST_CASE("well-formed three-row file validates") {
    const ValidationResult result = validate_dataset(three_row_fixture());
    REQUIRE(result.ok());
    const Dataset& ds = *result.dataset;
    CHECK(ds.size() == 3);
    CHECK(ds.vocabulary.size() == 3);  // C = number of distinct species
    CHECK(ds.vocabulary.classes == std::vector<std::string>{"spA", "spB", "spC"});
    CHECK(ds.hierarchy.level2_of("spA") == "genA");
    CHECK(ds.hierarchy.level1_of("genA") == "famA");
}

TEST_CASE("latitude 91 is CoordinateOutOfRange naming the obs_id") {
    RawDataset raw = three_row_fixture();
    raw.rows[1].latitude = "91.0";
    const ValidationResult result = validate_dataset(raw);
    REQUIRE_FALSE(result.ok());
    REQUIRE(result.violations.size() == 1);
    CHECK(result.violations[0].kind == ErrorKind::CoordinateOutOfRange);
    CHECK(result.violations[0].obs_id == "a2");
    CHECK(result.violations[0].message.find("a2") != std::string::npos);
}

TEST_CASE("longitude 180 is normalized to -180 on ingest") {
    RawDataset raw = three_row_fixture();
    raw.rows[0].longitude = "180.0";
    const ValidationResult result = validate_dataset(raw);
    REQUIRE(result.ok());
    CHECK(result.dataset->observations[0].longitude == -180.0);

    raw.rows[0].longitude = "180.5";
    CHECK(has_violation(validate_dataset(raw), ErrorKind::CoordinateOutOfRange));
}

TEST_CASE("level-3 label under two level-2 parents is BrokenHierarchy") {
    RawDataset raw = three_row_fixture();
    raw.rows.push_back(make_row("a4", "1.0", "1.0", "2021-05-05", "famA", "genB", "spA"));
    CHECK(has_violation(validate_dataset(raw), ErrorKind::BrokenHierarchy));
}

TEST_CASE("level-2 label under two level-1 parents is BrokenHierarchy") {
    RawDataset raw = three_row_fixture();
    raw.rows.push_back(make_row("a4", "1.0", "1.0", "2021-05-05", "famB", "genA", "spD"));
    CHECK(has_violation(validate_dataset(raw), ErrorKind::BrokenHierarchy));
}

TEST_CASE("label string reused across levels is BrokenHierarchy") {
    RawDataset raw = three_row_fixture();
    raw.rows.push_back(make_row("a4", "1.0", "1.0", "2021-05-05", "famA", "spA", "spD"));
    CHECK(has_violation(validate_dataset(raw), ErrorKind::BrokenHierarchy));
}

TEST_CASE("duplicate obs_id is reported and nothing is silently dropped") {
    RawDataset raw = three_row_fixture();
    raw.rows.push_back(make_row("a1", "2.0", "3.0", "2021-06-06", "famA", "genA", "spA"));
    const ValidationResult result = validate_dataset(raw);
    CHECK(has_violation(result, ErrorKind::DuplicateId));
    CHECK_FALSE(result.dataset.has_value());
}

TEST_CASE("invalid dates and empty labels are row violations") {
    RawDataset raw = three_row_fixture();
    raw.rows[0].date = "2021-02-30";
    raw.rows[1].label_l3 = "";
    const ValidationResult result = validate_dataset(raw);
    CHECK(has_violation(result, ErrorKind::CorruptFile));
    CHECK(has_violation(result, ErrorKind::UnknownLabel));
    CHECK(result.violations.size() == 2);
}

TEST_CASE("validation against an expected vocabulary flags unknown species") {
    const Dataset base = validate_dataset(three_row_fixture()).value();
    RawDataset raw = three_row_fixture();
    raw.rows.push_back(make_row("a4", "0.0", "0.0", "2021-08-01", "famB", "genB", "spNew"));
    const ValidationResult result = validate_dataset(raw, &base.vocabulary);
    REQUIRE_FALSE(result.ok());
    CHECK(result.violations[0].kind == ErrorKind::UnknownLabel);
    CHECK(result.violations[0].obs_id == "a4");
}

TEST_CASE("validate_dataset is idempotent") {
    const Dataset first = validate_dataset(three_row_fixture()).value();
    const Dataset second = validate_dataset(to_raw(first)).value();
    CHECK(second.size() == first.size());
    CHECK(second.vocabulary.classes == first.vocabulary.classes);
    CHECK(second.hierarchy.level3_to_level2 == first.hierarchy.level3_to_level2);
    CHECK(second.hierarchy.level2_to_level1 == first.hierarchy.level2_to_level1);
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(second.observations[i].obs_id == first.observations[i].obs_id);
        CHECK(second.observations[i].latitude == first.observations[i].latitude);
        CHECK(second.observations[i].longitude == first.observations[i].longitude);
        CHECK(second.observations[i].date == first.observations[i].date);
        CHECK(second.observations[i].species == first.observations[i].species);
    }
}

TEST_CASE("every accepted observation resolves through the hierarchy uniquely") {
    const Dataset ds = validate_dataset(three_row_fixture()).value();
    for (const Observation& obs : ds.observations) {
        const std::string& l2 = ds.hierarchy.level2_of(obs.species);
        CHECK_FALSE(ds.hierarchy.level1_of(l2).empty());
    }
}

TEST_CASE("vocabulary order is the sorted order of species strings") {
    RawDataset raw;
    raw.rows.push_back(make_row("x1", "0", "0", "2021-01-01", "f", "g", "zebra"));
    raw.rows.push_back(make_row("x2", "0", "0", "2021-01-01", "f", "g", "aardvark"));
    const Dataset ds = validate_dataset(raw).value();
    CHECK(ds.vocabulary.classes == std::vector<std::string>{"aardvark", "zebra"});
    CHECK(ds.vocabulary.index_of.at("aardvark") == 0);
    CHECK(ds.vocabulary.require_index("zebra") == 1);
    CHECK_THROWS_AS(ds.vocabulary.require_index("missing"), Error);
}
