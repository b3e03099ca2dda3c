#include <string>

#include "doctest.h"
#include "radiotwin/ingest.hpp"

using namespace rtwin;

namespace {
const std::string kCsvHeader =
    "antenna_id,timestamp,latitude,longitude,rsrp_dbm,sinr_db,indoor,accuracy_m\n";
}

TEST_CASE("well-formed three-row measurement file parses to three records") {
    const std::string text = kCsvHeader +
        "a1,1700000000,48.1,11.5,-80.5,12.0,0,3.5\n"
        "a1,1700000001,48.2,11.6,-95.0,4.0,1,9.9\n"
        "a2,1700000002,48.3,11.7,-140.0,0.0,0,0.0\n";
    const auto recs = parse_measurements_text(text, "mem");
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].antenna_id == "a1");
    CHECK(recs[1].indoor);
    CHECK(recs[2].rsrp_dbm == -140.0);
}

TEST_CASE("negative accuracy is rejected with field and line in the message") {
    const std::string text =
        kCsvHeader + "a1,1,48.1,11.5,-80.0,1.0,0,-1\n";
    try {
        (void)parse_measurements_text(text, "mem");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("accuracy") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);  // line number
    }
}

TEST_CASE("rsrp outside [-140, -40] is rejected") {
    CHECK_THROWS_AS((void)parse_measurements_text(
                        kCsvHeader + "a1,1,48.1,11.5,-30.0,1.0,0,1\n", "mem"),
                    ParseError);
    CHECK_THROWS_AS((void)parse_measurements_text(
                        kCsvHeader + "a1,1,48.1,11.5,-141.0,1.0,0,1\n", "mem"),
                    ParseError);
}

TEST_CASE("empty measurement file parses to an empty list") {
    CHECK(parse_measurements_text("", "mem").empty());
    CHECK(parse_measurements_text(kCsvHeader, "mem").empty());
}

TEST_CASE("filter keeps accuracy 10.0 and drops 10.01") {
    MeasurementRecord keep;
    keep.accuracy_m = 10.0;
    MeasurementRecord drop = keep;
    drop.accuracy_m = 10.01;
    const auto out = filter_measurements({keep, drop});
    REQUIRE(out.size() == 1);
    CHECK(out[0].accuracy_m == 10.0);
}

TEST_CASE("filter drops indoor records when outdoor_only") {
    MeasurementRecord indoor;
    indoor.indoor = true;
    indoor.accuracy_m = 1.0;
    CHECK(filter_measurements({indoor}).empty());
    CHECK(filter_measurements({indoor}, 10.0, false).size() == 1);
}

TEST_CASE("filter is idempotent and empty input gives empty output") {
    CHECK(filter_measurements({}).empty());
    std::vector<MeasurementRecord> recs(5);
    for (std::size_t i = 0; i < recs.size(); ++i)
        recs[i].accuracy_m = 2.0 * static_cast<double>(i + 1);  // 2..10
    const auto once = filter_measurements(recs);
    const auto twice = filter_measurements(once);
    CHECK(once.size() == twice.size());
}

TEST_CASE("measurement round trip is field-for-field") {
    const std::string text = kCsvHeader +
        "a1,1700000000,48.125,11.5625,-80.5,12.25,0,3.5\n"
        "a2,1700000099,-33.5,151.25,-139.0,-2.0,1,10.0\n";
    const auto recs = parse_measurements_text(text, "mem");
    const auto again =
        parse_measurements_text(serialize_measurements(recs), "mem2");
    REQUIRE(again.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(again[i].antenna_id == recs[i].antenna_id);
        CHECK(again[i].timestamp == recs[i].timestamp);
        CHECK(again[i].latitude == recs[i].latitude);
        CHECK(again[i].longitude == recs[i].longitude);
        CHECK(again[i].rsrp_dbm == recs[i].rsrp_dbm);
        CHECK(again[i].sinr_db == recs[i].sinr_db);
        CHECK(again[i].indoor == recs[i].indoor);
        CHECK(again[i].accuracy_m == recs[i].accuracy_m);
    }
}

TEST_CASE("single antenna JSON yields one config") {
    const std::string text = R"([{
        "antenna_id": "site-1", "latitude": 48.1, "longitude": 11.5,
        "height_m": 25.0, "frequency_hz": 2.3e9, "azimuth_rad": 1.0,
        "tilt_rad": 0.1, "tx_power_dbm": 43.0, "hardware_loss_db": 2.0,
        "bandwidth_hz": 2.0e7}])";
    const auto ants = parse_antennas_text(text, "mem");
    REQUIRE(ants.size() == 1);
    CHECK(ants[0].antenna_id == "site-1");
    CHECK(ants[0].frequency_hz == 2.3e9);
}

TEST_CASE("antenna with non-positive frequency or height is rejected") {
    const std::string bad = R"([{
        "antenna_id": "x", "latitude": 0, "longitude": 0, "height_m": 0,
        "frequency_hz": 2.3e9, "azimuth_rad": 0, "tilt_rad": 0,
        "tx_power_dbm": 43, "hardware_loss_db": 0, "bandwidth_hz": 2e7}])";
    CHECK_THROWS_AS((void)parse_antennas_text(bad, "mem"), ParseError);
}

TEST_CASE("antenna round trip") {
    AntennaConfig a;
    a.antenna_id = "rt";
    a.latitude = 10.5;
    a.longitude = -3.25;
    a.azimuth_rad = 0.75;
    const auto again = parse_antennas_text(serialize_antennas({a}), "mem");
    REQUIRE(again.size() == 1);
    CHECK(again[0].antenna_id == a.antenna_id);
    CHECK(again[0].azimuth_rad == a.azimuth_rad);
}

TEST_CASE("scene parsing enforces invariants") {
    const std::string ok = R"({
      "buildings": [{"footprint": [[11.5,48.1],[11.501,48.1],[11.501,48.101],[11.5,48.101]],
                     "height_m": 12.0, "material": "brick"}],
      "landuse": [{"polygon": [[11.5,48.1],[11.51,48.1],[11.51,48.11]], "class": 23}],
      "roads": [[[11.5,48.1],[11.51,48.11]]]})";
    const SceneData scene = parse_scene_text(ok, "mem");
    REQUIRE(scene.buildings.size() == 1);
    CHECK(scene.buildings[0].material == Material::Brick);
    CHECK(scene.landuse[0].land_class == 23);

    std::string zero_height = ok;
    zero_height.replace(zero_height.find("12.0"), 4, "0.00");
    CHECK_THROWS_AS((void)parse_scene_text(zero_height, "mem"), ParseError);

    std::string class24 = ok;
    class24.replace(class24.find("\"class\": 23"), 11, "\"class\": 24");
    CHECK_THROWS_AS((void)parse_scene_text(class24, "mem"), ParseError);
}

TEST_CASE("self-intersecting footprints are rejected") {
    const std::string bowtie = R"({
      "buildings": [{"footprint": [[0,0],[1,1],[1,0],[0,1]],
                     "height_m": 5.0, "material": "glass"}],
      "landuse": [], "roads": []})";
    CHECK_THROWS_AS((void)parse_scene_text(bowtie, "mem"), ParseError);
}

TEST_CASE("scene round trip") {
    const std::string ok = R"({
      "buildings": [{"footprint": [[11.5,48.1],[11.501,48.1],[11.5005,48.101]],
                     "height_m": 9.5, "material": "concrete"}],
      "landuse": [], "roads": [[[11.5,48.1],[11.51,48.11],[11.52,48.12]]]})";
    const SceneData scene = parse_scene_text(ok, "mem");
    const SceneData again = parse_scene_text(serialize_scene(scene), "mem2");
    REQUIRE(again.buildings.size() == 1);
    CHECK(again.buildings[0].height_m == scene.buildings[0].height_m);
    CHECK(again.buildings[0].footprint.size() == 3);
    CHECK(again.roads.size() == 1);
    CHECK(again.roads[0].size() == 3);
}
