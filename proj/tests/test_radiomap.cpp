#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "radiotwin/radiomap.hpp"
#include "radiotwin/rng.hpp"

using namespace rtwin;

namespace {

AntennaConfig test_antenna() {
    AntennaConfig a;
    a.antenna_id = "a1";
    a.latitude = 48.137;
    a.longitude = 11.575;
    return a;
}

MeasurementRecord record_at(const GeoTransform& t, double x_east, double y_north,
                            double rsrp) {
    MeasurementRecord r;
    r.antenna_id = "a1";
    const auto [lat, lon] = t.enu_to_latlon(x_east, y_north);
    r.latitude = lat;
    r.longitude = lon;
    r.rsrp_dbm = rsrp;
    return r;
}

}  // namespace

TEST_CASE("classify_extent pairs extents and resolutions per the table") {
    const AntennaConfig a = test_antenna();
    const GeoTransform ref(a.latitude, a.longitude, 1.0);

    SUBCASE("all measurements within 400 m -> (512, 2)") {
        std::vector<MeasurementRecord> recs;
        for (int i = 1; i <= 20; ++i)
            recs.push_back(record_at(ref, 20.0 * i, 0.0, -90.0));
        const ExtentChoice e = classify_extent(recs, a);
        CHECK(e.max_distance_m == 512.0);
        CHECK(e.resolution_m == 2.0);
    }
    SUBCASE("90th percentile at 1100 m -> (1280, 5)") {
        std::vector<MeasurementRecord> recs;
        for (int i = 0; i < 89; ++i)
            recs.push_back(record_at(ref, 100.0, 0.0, -90.0));
        for (int i = 0; i < 11; ++i)
            recs.push_back(record_at(ref, 1100.0, 0.0, -90.0));
        const ExtentChoice e = classify_extent(recs, a);
        CHECK(e.max_distance_m == 1280.0);
        CHECK(e.resolution_m == 5.0);
    }
    SUBCASE("single measurement at 10 m -> (512, 2)") {
        const ExtentChoice e =
            classify_extent({record_at(ref, 10.0, 0.0, -70.0)}, a);
        CHECK(e.max_distance_m == 512.0);
        CHECK(e.resolution_m == 2.0);
    }
    SUBCASE("empty record list is rejected") {
        CHECK_THROWS_AS((void)classify_extent({}, a), std::invalid_argument);
    }
    SUBCASE("adding a farther measurement never shrinks the extent") {
        std::vector<MeasurementRecord> recs;
        for (int i = 1; i <= 10; ++i)
            recs.push_back(record_at(ref, 50.0 * i, 0.0, -90.0));
        double prev = classify_extent(recs, a).max_distance_m;
        for (double d : {600.0, 800.0, 900.0, 1200.0, 2000.0}) {
            recs.push_back(record_at(ref, d, 0.0, -90.0));
            const double now = classify_extent(recs, a).max_distance_m;
            CHECK(now >= prev);
            prev = now;
        }
    }
}

TEST_CASE("rasterization median aggregation") {
    const AntennaConfig a = test_antenna();
    const GeoTransform t = transform_for(a, 5.0);

    SUBCASE("odd count takes the middle value") {
        const std::vector<MeasurementRecord> recs = {
            record_at(t, 100.0, 0.0, -80.0), record_at(t, 100.0, 0.0, -90.0),
            record_at(t, 100.0, 0.0, -100.0)};
        const RadioMap map = rasterize_measurements(recs, t);
        const auto cell = t.enu_to_cell(100.0, 0.0);
        REQUIRE(cell.has_value());
        CHECK(map.values.at(cell->row, cell->col) == doctest::Approx(-90.0));
        CHECK(map.valid.at(cell->row, cell->col) == 1);
    }
    SUBCASE("even count takes the midpoint of the central pair") {
        const std::vector<MeasurementRecord> recs = {
            record_at(t, 100.0, 0.0, -80.0), record_at(t, 100.0, 0.0, -90.0)};
        const RadioMap map = rasterize_measurements(recs, t);
        const auto cell = t.enu_to_cell(100.0, 0.0);
        CHECK(map.values.at(cell->row, cell->col) == doctest::Approx(-85.0));
    }
    SUBCASE("cells without records carry value 0 and valid = false") {
        const RadioMap map = rasterize_measurements({}, t);
        CHECK(map.values.at(10, 10) == 0.0f);
        CHECK(map.valid.at(10, 10) == 0);
        CHECK(map.coverage_fraction == 0.0);
    }
    SUBCASE("out-of-grid records are ignored") {
        const RadioMap map =
            rasterize_measurements({record_at(t, 50000.0, 0.0, -80.0)}, t);
        CHECK(map.coverage_fraction == 0.0);
    }
    SUBCASE("record order does not change the map") {
        Rng rng(3);
        std::vector<MeasurementRecord> recs;
        for (int i = 0; i < 200; ++i)
            recs.push_back(record_at(t, rng.uniform(-500, 500),
                                     rng.uniform(-500, 500),
                                     rng.uniform(-120.0, -60.0)));
        const RadioMap first = rasterize_measurements(recs, t);
        std::reverse(recs.begin(), recs.end());
        const RadioMap second = rasterize_measurements(recs, t);
        CHECK(first.values.data() == second.values.data());
        CHECK(first.valid.data() == second.valid.data());
    }
}

TEST_CASE("coverage fraction counts valid cells") {
    const AntennaConfig a = test_antenna();
    const GeoTransform t = transform_for(a, 5.0);
    const std::vector<MeasurementRecord> recs = {
        record_at(t, 0.0, 0.0, -80.0), record_at(t, 100.0, 0.0, -85.0)};
    const RadioMap map = rasterize_measurements(recs, t);
    CHECK(map.coverage_fraction == doctest::Approx(2.0 / (512.0 * 512.0)));
}

TEST_CASE("70/30 split") {
    const AntennaConfig a = test_antenna();
    const GeoTransform t = transform_for(a, 5.0);
    std::vector<MeasurementRecord> recs;
    for (int i = 0; i < 10; ++i)
        recs.push_back(record_at(t, 10.0 * i, 5.0 * i, -90.0 + i));

    SUBCASE("10 records split 7 / 3") {
        const auto [train, val] = split_records(recs, 0.7, 42);
        CHECK(train.size() == 7);
        CHECK(val.size() == 3);
    }
    SUBCASE("same seed gives the identical partition") {
        const auto [t1, v1] = split_records(recs, 0.7, 42);
        const auto [t2, v2] = split_records(recs, 0.7, 42);
        REQUIRE(t1.size() == t2.size());
        for (std::size_t i = 0; i < t1.size(); ++i)
            CHECK(t1[i].rsrp_dbm == t2[i].rsrp_dbm);
    }
    SUBCASE("union of the parts is the input") {
        const auto [train, val] = split_records(recs, 0.7, 7);
        std::vector<double> got;
        for (const auto& r : train)
            got.push_back(r.rsrp_dbm);
        for (const auto& r : val)
            got.push_back(r.rsrp_dbm);
        std::sort(got.begin(), got.end());
        std::vector<double> want;
        for (const auto& r : recs)
            want.push_back(r.rsrp_dbm);
        std::sort(want.begin(), want.end());
        CHECK(got == want);
    }
    SUBCASE("fewer than 2 records is rejected") {
        CHECK_THROWS_AS((void)split_records({recs[0]}, 0.7, 0),
                        std::invalid_argument);
    }
}
