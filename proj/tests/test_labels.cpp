#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ecglab/errors.hpp"
#include "ecglab/labels.hpp"
#include "test_support.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

using namespace ecglab;

namespace {

std::filesystem::path write_file(const testsup::TempDir& dir,
                                 const std::string& name,
                                 const std::string& content) {
    auto p = dir / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
}

const char* kSmallThresholds =
    "class_id,lab_name,direction,threshold,unit\n"
    "0,POTASSIUM,below,3.5,mmol/L\n"
    "1,POTASSIUM,above,5.0,mmol/L\n"
    "2,SODIUM,below,135.0,mmol/L\n"
    "3,SODIUM,above,145.0,mmol/L\n";

ThresholdTable small_table(const testsup::TempDir& dir) {
    return ThresholdTable::load(write_file(dir, "thr.csv", kSmallThresholds));
}

} // namespace

TEST_CASE("threshold table loads, indexes, and round trips") {
    testsup::TempDir dir;
    auto table = small_table(dir);
    REQUIRE(table.n_classes() == 4);
    CHECK(table.entries[0].lab_name == "POTASSIUM");
    CHECK(table.entries[0].direction == Direction::below);
    CHECK(table.entries[0].threshold == 3.5);
    CHECK(table.entries[0].unit == "mmol/L");
    CHECK(table.entries[0].range_string() == "<3.5 (mmol/L)");
    CHECK(table.entries[1].range_string() == ">5 (mmol/L)");

    auto* pot = table.entries_for("POTASSIUM");
    REQUIRE(pot != nullptr);
    CHECK(pot->size() == 2);
    CHECK(table.entries_for("MAGNESIUM") == nullptr);

    auto rt = dir / "thr_rt.csv";
    table.save(rt);
    auto again = ThresholdTable::load(rt);
    REQUIRE(again.n_classes() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(again.entries[i].lab_name == table.entries[i].lab_name);
        CHECK(again.entries[i].threshold == table.entries[i].threshold);
        CHECK(again.entries[i].direction == table.entries[i].direction);
    }
}

TEST_CASE("the full 108-class survey threshold fixture loads") {
    auto table = ThresholdTable::load(testsup::data_dir() / "thresholds_108.csv");
    REQUIRE(table.n_classes() == 108);
    CHECK(table.entries[0].lab_name == "LDH, TOTAL");
    CHECK(table.entries[0].range_string() == "<140 (U/L)");
    auto* pot = table.entries_for("POTASSIUM");
    REQUIRE(pot != nullptr);
    CHECK(pot->size() == 2);
}

TEST_CASE("threshold table rejects bad input") {
    testsup::TempDir dir;
    SUBCASE("duplicate (lab, direction)") {
        auto p = write_file(dir, "dup.csv",
                            "class_id,lab_name,direction,threshold,unit\n"
                            "0,POTASSIUM,below,3.5,mmol/L\n"
                            "1,POTASSIUM,below,3.2,mmol/L\n");
        CHECK_THROWS_AS(ThresholdTable::load(p), ConfigError);
    }
    SUBCASE("empty table") {
        auto p = write_file(dir, "empty.csv",
                            "class_id,lab_name,direction,threshold,unit\n");
        CHECK_THROWS_AS(ThresholdTable::load(p), ConfigError);
    }
    SUBCASE("non-numeric threshold") {
        auto p = write_file(dir, "nan.csv",
                            "class_id,lab_name,direction,threshold,unit\n"
                            "0,POTASSIUM,below,low,mmol/L\n");
        CHECK_THROWS_AS(ThresholdTable::load(p), Error);
    }
    SUBCASE("class ids must cover 0..C-1") {
        auto p = write_file(dir, "gap.csv",
                            "class_id,lab_name,direction,threshold,unit\n"
                            "0,POTASSIUM,below,3.5,mmol/L\n"
                            "2,SODIUM,below,135,mmol/L\n");
        CHECK_THROWS_AS(ThresholdTable::load(p), ConfigError);
    }
    SUBCASE("unknown direction word") {
        auto p = write_file(dir, "dir.csv",
                            "class_id,lab_name,direction,threshold,unit\n"
                            "0,POTASSIUM,sideways,3.5,mmol/L\n");
        CHECK_THROWS_AS(ThresholdTable::load(p), Error);
    }
}

TEST_CASE("classification is strict on both sides of the threshold") {
    ThresholdEntry below{0, "POTASSIUM", Direction::below, 3.5, "mmol/L"};
    ThresholdEntry above{1, "POTASSIUM", Direction::above, 5.0, "mmol/L"};
    CHECK(classify_value(3.2, below) == 1);
    CHECK(classify_value(3.5, below) == 0); // boundary is normal
    CHECK(classify_value(3.8, below) == 0);
    CHECK(classify_value(5.1, above) == 1);
    CHECK(classify_value(5.0, above) == 0); // boundary is normal
    CHECK(classify_value(4.2, above) == 0);
    CHECK_THROWS_AS(classify_value(std::numeric_limits<double>::quiet_NaN(), below),
                    DataError);
    CHECK_THROWS_AS(classify_value(std::numeric_limits<double>::infinity(), above),
                    DataError);
}

TEST_CASE("classification is monotone in the measured value") {
    Direction dirs[] = {Direction::below, Direction::above};
    for (auto d : dirs) {
        for (double thr : {-2.0, 0.0, 3.5, 100.0}) {
            ThresholdEntry e{0, "X", d, thr, "u"};
            int prev = classify_value(thr - 10.0, e);
            for (double v = thr - 10.0; v <= thr + 10.0; v += 0.25) {
                int cur = classify_value(v, e);
                if (d == Direction::below) CHECK(cur <= prev); // never rises
                else CHECK(cur >= prev);                       // never falls
                prev = cur;
            }
        }
    }
}

TEST_CASE("rows group into one event per (visit, timestamp)") {
    std::vector<LabRow> rows = {
        {"csnA", 1000, "POTASSIUM", 3.2, "mmol/L"},
        {"csnA", 1000, "SODIUM", 140.0, "mmol/L"},
        {"csnA", 1000, "CALCIUM", 9.0, "mg/dL"},
        {"csnA", 2000, "POTASSIUM", 4.0, "mmol/L"},
        {"csnA", 2000, "SODIUM", 133.0, "mmol/L"},
    };
    auto events = group_blood_tests(rows);
    REQUIRE(events.size() == 2);
    CHECK(events[0].timestamp_micros == 1000);
    CHECK(events[0].results.size() == 3);
    CHECK(events[1].results.size() == 2);

    CHECK(group_blood_tests({}).empty());
}

TEST_CASE("grouping partitions every row into exactly one event") {
    std::vector<LabRow> rows;
    for (int v = 0; v < 5; ++v)
        for (int t = 0; t < 4; ++t)
            for (int l = 0; l < 3; ++l)
                rows.push_back({"V" + std::to_string(v), t * 500,
                                "LAB" + std::to_string(l), 1.0 * l, "u"});
    auto events = group_blood_tests(rows);
    CHECK(events.size() == 20);
    std::size_t total = 0;
    for (const auto& e : events) total += e.results.size();
    CHECK(total == rows.size());
}

TEST_CASE("duplicate analyte in one event resolves last-row-wins") {
    std::vector<LabRow> rows = {
        {"csnA", 1000, "POTASSIUM", 3.0, "mmol/L"},
        {"csnA", 1000, "POTASSIUM", 4.0, "mmol/L"},
    };
    auto events = group_blood_tests(rows);
    REQUIRE(events.size() == 1);
    CHECK(events[0].results.at("POTASSIUM") == 4.0);
}

TEST_CASE("a measured analyte labels both of its direction classes") {
    testsup::TempDir dir;
    auto table = small_table(dir);

    BloodTestEvent ev;
    ev.visit_id = "csnA";
    ev.results["POTASSIUM"] = 3.2;
    auto labels = encode_labels(ev, table);
    REQUIRE(labels.size() == 4);
    CHECK(labels[0] == 1);  // below 3.5: abnormal
    CHECK(labels[1] == 0);  // above 5.0: normal
    CHECK(labels[2] == -1); // sodium untested
    CHECK(labels[3] == -1);

    ev.results["POTASSIUM"] = 4.2;
    labels = encode_labels(ev, table);
    CHECK(labels[0] == 0);
    CHECK(labels[1] == 0);

    BloodTestEvent none;
    none.visit_id = "csnB";
    labels = encode_labels(none, table);
    for (auto l : labels) CHECK(l == -1);
}

TEST_CASE("labels always have length C with entries in {-1,0,1}") {
    testsup::TempDir dir;
    auto table = small_table(dir);
    for (double v : {0.0, 3.4999, 3.5, 5.0, 5.0001, 200.0}) {
        BloodTestEvent ev;
        ev.results["POTASSIUM"] = v;
        ev.results["SODIUM"] = 300.0 - v;
        auto labels = encode_labels(ev, table);
        REQUIRE(labels.size() == 4);
        for (auto l : labels) CHECK((l == -1 || l == 0 || l == 1));
    }
}

TEST_CASE("analytes missing from the table are ignored when encoding") {
    testsup::TempDir dir;
    auto table = small_table(dir);
    BloodTestEvent ev;
    ev.results["UNOBTAINIUM"] = 1.0;
    auto labels = encode_labels(ev, table);
    for (auto l : labels) CHECK(l == -1);
}

TEST_CASE("lab rows load, parse timestamps, and reject unit mismatches") {
    testsup::TempDir dir;
    auto table = small_table(dir);
    auto good = write_file(dir, "labs.csv",
                           "visit_id,timestamp,lab_name,value,unit\n"
                           "csnA,2025-01-01T10:00:00.000000Z,POTASSIUM,3.2,mmol/L\n"
                           "csnA,2025-01-01T10:00:00.000000Z,SODIUM,140,mmol/L\n");
    auto rows = load_lab_rows(good, &table);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].visit_id == "csnA");
    CHECK(rows[0].value == 3.2);

    auto bad = write_file(dir, "labs_bad.csv",
                          "visit_id,timestamp,lab_name,value,unit\n"
                          "csnA,2025-01-01T10:00:00.000000Z,POTASSIUM,3.2,mEq/L\n");
    try {
        load_lab_rows(bad, &table);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("labs_bad.csv") != std::string::npos);
        CHECK(msg.find(":2:") != std::string::npos);
    }
}

TEST_CASE("build_events yields labeled events sorted by visit and time") {
    testsup::TempDir dir;
    auto table = small_table(dir);
    auto labs = write_file(dir, "labs.csv",
                           "visit_id,timestamp,lab_name,value,unit\n"
                           "csnB,2025-01-01T12:00:00.000000Z,SODIUM,130,mmol/L\n"
                           "csnA,2025-01-01T11:00:00.000000Z,POTASSIUM,5.5,mmol/L\n"
                           "csnA,2025-01-01T10:00:00.000000Z,POTASSIUM,4.0,mmol/L\n");
    auto events = build_events(load_lab_rows(labs, &table), table);
    REQUIRE(events.size() == 3);
    CHECK(events[0].visit_id == "csnA");
    CHECK(events[0].labels == LabelVector{0, 0, -1, -1});
    CHECK(events[1].visit_id == "csnA");
    CHECK(events[1].labels == LabelVector{0, 1, -1, -1});
    CHECK(events[2].visit_id == "csnB");
    CHECK(events[2].labels == LabelVector{-1, -1, 1, 0});
}
