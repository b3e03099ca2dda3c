#include "radiotwin/demo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "radiotwin/geo.hpp"
#include "radiotwin/rng.hpp"

namespace rtwin {

namespace {

constexpr double kDemoLat = 52.5200;
constexpr double kDemoLon = 13.4050;

std::vector<LonLat> rect_footprint(const GeoTransform& frame, double cx, double cy,
                                   double half_w, double half_h) {
    std::vector<LonLat> out;
    const double xs[4] = {cx - half_w, cx + half_w, cx + half_w, cx - half_w};
    const double ys[4] = {cy - half_h, cy - half_h, cy + half_h, cy + half_h};
    for (int k = 0; k < 4; ++k) {
        const auto [lat, lon] = frame.enu_to_latlon(xs[k], ys[k]);
        out.push_back({lon, lat});
    }
    return out;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("demo dataset: cannot write " + p.string());
    out << content;
}

}  // namespace

DemoDataset generate_demo_dataset(const DemoConfig& config) {
    DemoDataset demo;
    const GeoTransform frame(kDemoLat, kDemoLon, 1.0);
    Rng rng(config.seed);

    // Two sector antennas 250 m apart, pointing at each other.
    AntennaConfig a1;
    a1.antenna_id = "demo-a1";
    a1.latitude = kDemoLat;
    a1.longitude = kDemoLon;
    a1.height_m = 30.0;
    a1.frequency_hz = 2.3e9;
    a1.azimuth_rad = 0.0;
    a1.tilt_rad = 0.05;
    a1.tx_power_dbm = 43.0;
    a1.bandwidth_hz = 20e6;
    AntennaConfig a2 = a1;
    a2.antenna_id = "demo-a2";
    const auto [lat2, lon2] = frame.enu_to_latlon(250.0, 40.0);
    a2.latitude = lat2;
    a2.longitude = lon2;
    a2.azimuth_rad = std::numbers::pi;
    demo.antennas = {a1, a2};

    // Three buildings between and around the antennas.
    Building b1;
    b1.footprint = rect_footprint(frame, 90.0, 10.0, 25.0, 18.0);
    b1.height_m = 21.0;
    b1.material = Material::Concrete;
    Building b2;
    b2.footprint = rect_footprint(frame, 160.0, -60.0, 20.0, 30.0);
    b2.height_m = 15.0;
    b2.material = Material::Brick;
    Building b3;
    b3.footprint = rect_footprint(frame, 40.0, 110.0, 30.0, 15.0);
    b3.height_m = 27.0;
    b3.material = Material::Glass;
    demo.scene.buildings = {b1, b2, b3};

    LandusePolygon lp;
    lp.polygon = rect_footprint(frame, 100.0, 20.0, 400.0, 400.0);
    lp.land_class = 2;
    demo.scene.landuse = {lp};
    demo.scene.roads = {{
        [&] { const auto [la, lo] = frame.enu_to_latlon(-300.0, -30.0);
              return LonLat{lo, la}; }(),
        [&] { const auto [la, lo] = frame.enu_to_latlon(500.0, -30.0);
              return LonLat{lo, la}; }(),
    }};

    // Planted ground-truth parameters: perturbed AMv state so calibration
    // starts away from its own initialization.
    demo.planted_params = TrainableSceneParams::defaults(CalibrationMode::AMv);
    {
        std::vector<double> free = demo.planted_params.get_free();
        for (double& f : free)
            f += 0.35 * rng.gaussian();
        demo.planted_params.set_free(free);
    }

    SolverConfig solver_cfg;
    solver_cfg.n_rays = config.n_rays;
    solver_cfg.resolution_m = 2.0;
    solver_cfg.seed = config.seed;
    solver_cfg.threads = 0;  // all hardware threads; output is count-invariant

    std::vector<RadioMap> maps;
    std::vector<GeoTransform> transforms;
    for (const AntennaConfig& ant : demo.antennas) {
        const SceneGeometry geom = build_scene(demo.scene, ant);
        maps.push_back(trace(geom, ant, demo.planted_params, solver_cfg));
        transforms.emplace_back(ant.latitude, ant.longitude,
                                solver_cfg.resolution_m);
    }

    const std::int64_t t0 = 1700000000;
    demo.measurements.reserve(static_cast<std::size_t>(config.n_measurements));
    for (int i = 0; i < config.n_measurements; ++i) {
        const int serving = i % 2;
        const RadioMap& map = maps[serving];
        // Rejection-sample an outdoor covered point within 400 m.
        for (int attempt = 0; attempt < 256; ++attempt) {
            const double radius = 25.0 + 375.0 * std::sqrt(rng.uniform());
            const double bearing = rng.uniform(-std::numbers::pi, std::numbers::pi);
            const double x = radius * std::cos(bearing);
            const double y = radius * std::sin(bearing);
            const auto cell = transforms[serving].enu_to_cell(x, y);
            if (!cell || !map.valid.at(cell->row, cell->col))
                continue;
            const auto [lat, lon] =
                transforms[serving].cell_to_latlon(cell->row, cell->col);
            MeasurementRecord rec;
            rec.antenna_id = demo.antennas[serving].antenna_id;
            rec.timestamp = t0 + 10 * i;
            rec.latitude = lat;
            rec.longitude = lon;
            // Clamp to the measurement range; receivers saturate near the mast.
            rec.rsrp_dbm = std::clamp(
                static_cast<double>(map.values.at(cell->row, cell->col)) +
                    config.noise_db * rng.gaussian(),
                -140.0, -40.0);
            rec.sinr_db = std::clamp(rec.rsrp_dbm + 110.0, 0.0, 30.0);
            rec.indoor = false;
            rec.accuracy_m = rng.uniform(1.0, 8.0);
            demo.measurements.push_back(rec);
            break;
        }
    }
    if (demo.measurements.size() < 0.9 * config.n_measurements)
        throw std::runtime_error("demo dataset: coverage too sparse to sample");
    return demo;
}

void write_demo_dataset(const DemoDataset& dataset, const std::string& directory) {
    const std::filesystem::path dir(directory);
    std::filesystem::create_directories(dir);
    write_file(dir / "measurements.csv", serialize_measurements(dataset.measurements));
    write_file(dir / "antennas.json", serialize_antennas(dataset.antennas));
    write_file(dir / "scene.json", serialize_scene(dataset.scene));
    write_file(dir / "planted_params.json", dataset.planted_params.to_json());
}

}  // namespace rtwin
