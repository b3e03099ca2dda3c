#include <cmath>
#include <numbers>

#include "doctest.h"
#include "radiotwin/features.hpp"
#include "radiotwin/radiomap.hpp"

using namespace rtwin;

namespace {

AntennaConfig antenna_at_height(double z_tx) {
    AntennaConfig a;
    a.latitude = 48.137;
    a.longitude = 11.575;
    a.height_m = z_tx;
    a.azimuth_rad = 0.0;
    a.tilt_rad = 0.0;
    return a;
}

}  // namespace

TEST_CASE("aligned geometry: boresight cell due east at 100 m") {
    AntennaConfig a = antenna_at_height(1.5);  // z_Tx = z_Rx: flat geometry
    const GeoTransform t = transform_for(a, 5.0);
    const GeometryLayers g = compute_geometry(t, a);
    const int col = 256 + 20;  // 100 m east
    CHECK(g.distance.at(256, col) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(g.phi.at(256, col) == doctest::Approx(0.0));
    CHECK(g.theta.at(256, col) == doctest::Approx(0.0));
}

TEST_CASE("rotating the azimuth by 90 degrees moves the same cell to |phi| = pi/2") {
    AntennaConfig a = antenna_at_height(1.5);
    a.azimuth_rad = std::numbers::pi / 2.0;
    const GeoTransform t = transform_for(a, 5.0);
    const GeometryLayers g = compute_geometry(t, a);
    CHECK(std::abs(g.phi.at(256, 256 + 20)) ==
          doctest::Approx(std::numbers::pi / 2.0));
}

TEST_CASE("3-4-5 triangle: z_Tx 31.5 m, ground 40 m -> d 50 m, theta -0.6435") {
    AntennaConfig a = antenna_at_height(31.5);
    const GeoTransform t = transform_for(a, 5.0);
    const GeometryLayers g = compute_geometry(t, a);
    const int col = 256 + 8;  // 40 m east
    CHECK(g.distance.at(256, col) == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(g.theta.at(256, col) == doctest::Approx(std::asin(-30.0 / 50.0)));
    CHECK(g.theta.at(256, col) == doctest::Approx(-0.6435).epsilon(1e-4));
}

TEST_CASE("phi is invariant to adding 2*pi to the azimuth") {
    AntennaConfig a = antenna_at_height(25.0);
    a.azimuth_rad = 0.7;
    const GeoTransform t = transform_for(a, 5.0);
    const GeometryLayers g1 = compute_geometry(t, a);
    a.azimuth_rad += 2.0 * std::numbers::pi;
    const GeometryLayers g2 = compute_geometry(t, a);
    for (int r = 100; r < 400; r += 57)
        for (int c = 100; c < 400; c += 61)
            CHECK(g1.phi.at(r, c) == doctest::Approx(g2.phi.at(r, c)).epsilon(1e-9));
}

TEST_CASE("distance layer has the half-cell reflection symmetry and is positive") {
    AntennaConfig a = antenna_at_height(30.0);
    const GeoTransform t = transform_for(a, 5.0);
    const GeometryLayers g = compute_geometry(t, a);
    CHECK(g.distance.at(256, 256) > 0.0);  // z_Rx != z_Tx keeps D > 0
    // Reflection through the antenna cell maps (256+k) to (256-k) exactly.
    for (int k : {5, 40, 120})
        CHECK(g.distance.at(256, 256 + k) ==
              doctest::Approx(g.distance.at(256, 256 - k)).epsilon(1e-12));
}

TEST_CASE("FSPL closed-form values") {
    const double c0 = kSpeedOfLight;
    SUBCASE("f = c0 / (4 pi), d = 1 m gives exactly 0 dB") {
        CHECK(fspl_db(1.0, c0 / (4.0 * std::numbers::pi)) ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("f = 1 GHz, d = 100 m gives 72.45 dB") {
        CHECK(fspl_db(100.0, 1e9) == doctest::Approx(72.45).epsilon(1e-4));
    }
    SUBCASE("doubling the distance adds 20 log10(2) = 6.0206 dB") {
        for (double d : {1.0, 37.5, 900.0})
            CHECK(fspl_db(2.0 * d, 2.3e9) - fspl_db(d, 2.3e9) ==
                  doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("channel layer follows L = P_Tx + G - FSPL - L_H") {
    AntennaConfig a = antenna_at_height(31.5);
    a.frequency_hz = 1e9;
    a.tx_power_dbm = 0.0;
    a.hardware_loss_db = 0.0;
    const GeoTransform t = transform_for(a, 5.0);
    const GeometryLayers g = compute_geometry(t, a);
    const Grid<float> L = compute_channel_layer(g, std::nullopt, a.frequency_hz,
                                                a.tx_power_dbm, a.hardware_loss_db);
    const int col = 256 + 20;
    const double d = g.distance.at(256, col);
    CHECK(L.at(256, col) == doctest::Approx(-fspl_db(d, 1e9)).epsilon(1e-6));

    SUBCASE("hardware loss and transmit power shift L additively") {
        const Grid<float> L2 = compute_channel_layer(g, std::nullopt, 1e9, 43.0, 2.0);
        CHECK(L2.at(256, col) - L.at(256, col) == doctest::Approx(41.0).epsilon(1e-5));
    }
    SUBCASE("L decreases monotonically with distance along a fixed ray") {
        double prev = L.at(256, 256 + 2);
        for (int k = 3; k < 250; ++k) {
            const double now = L.at(256, 256 + k);
            CHECK(now < prev);
            prev = now;
        }
    }
}

TEST_CASE("GIS rasterization") {
    AntennaConfig a = antenna_at_height(30.0);
    const GeoTransform t = transform_for(a, 5.0);
    const GeoTransform frame(a.latitude, a.longitude, 1.0);

    SceneData scene;
    Building b;
    for (const auto& [x, y] :
         std::vector<std::pair<double, double>>{{50, 50}, {150, 50}, {150, 150}, {50, 150}}) {
        const auto [lat, lon] = frame.enu_to_latlon(x, y);
        b.footprint.push_back({lon, lat});
    }
    b.height_m = 20.0;
    scene.buildings = {b};
    LandusePolygon lp;
    lp.polygon = b.footprint;
    lp.land_class = 7;
    scene.landuse = {lp};
    {
        const auto [lat1, lon1] = frame.enu_to_latlon(-200.0, -100.0);
        const auto [lat2, lon2] = frame.enu_to_latlon(200.0, -100.0);
        scene.roads = {{{lon1, lat1}, {lon2, lat2}}};
    }

    const GisLayers gis = rasterize_gis(scene, t, a);
    const auto inside = t.enu_to_cell(100.0, 100.0);
    REQUIRE(inside.has_value());
    CHECK(gis.height.at(inside->row, inside->col) == doctest::Approx(20.0));
    CHECK(gis.landuse.at(inside->row, inside->col) == doctest::Approx(7.0));
    const auto outside = t.enu_to_cell(-300.0, 300.0);
    CHECK(gis.height.at(outside->row, outside->col) == 0.0f);
    const auto on_road = t.enu_to_cell(0.0, -100.0);
    CHECK(gis.road.at(on_road->row, on_road->col) == 1);
    CHECK(gis.road.at(inside->row, inside->col) == 0);

    SUBCASE("empty scene rasterizes to all-zero layers") {
        const GisLayers empty = rasterize_gis(SceneData{}, t, a);
        for (float v : empty.height.data())
            CHECK(v == 0.0f);
        for (std::uint8_t v : empty.road.data())
            CHECK(v == 0);
    }
}
