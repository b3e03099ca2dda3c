// Microbenchmarks for the hot paths: footprint tessellation + extrusion,
// the ray-launching solver, and the map metrics.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "radiotwin/features.hpp"
#include "radiotwin/ingest.hpp"
#include "radiotwin/mesh.hpp"
#include "radiotwin/metrics.hpp"
#include "radiotwin/radiomap.hpp"
#include "radiotwin/rng.hpp"
#include "radiotwin/solver.hpp"

namespace {

using namespace rtwin;

std::vector<Vec2> star_polygon(Rng& rng, int n_verts) {
    std::vector<double> gaps(n_verts);
    double gap_sum = 0.0;
    for (double& g : gaps) {
        g = rng.uniform(0.1, 1.0);
        gap_sum += g;
    }
    std::vector<Vec2> poly;
    poly.reserve(n_verts);
    double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < n_verts; ++i) {
        const double r = rng.uniform(6.0, 30.0);
        poly.push_back({r * std::cos(a), r * std::sin(a)});
        a += gaps[i] / gap_sum * 2.0 * std::numbers::pi;
    }
    return poly;
}

AntennaConfig bench_antenna() {
    AntennaConfig ant;
    ant.antenna_id = "bench";
    ant.latitude = 48.1;
    ant.longitude = 11.5;
    ant.height_m = 30.0;
    ant.frequency_hz = 2.3e9;
    ant.tx_power_dbm = 43.0;
    return ant;
}

SceneData bench_scene(int n_buildings) {
    const AntennaConfig ant = bench_antenna();
    const GeoTransform frame(ant.latitude, ant.longitude, 1.0);
    Rng rng(5);
    SceneData scene;
    for (int k = 0; k < n_buildings; ++k) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double dist = rng.uniform(70.0, 320.0);
        const double cx = dist * std::cos(angle), cy = dist * std::sin(angle);
        const double hw = rng.uniform(8.0, 25.0), hh = rng.uniform(8.0, 25.0);
        Building b;
        for (const auto& [dx, dy] : {std::pair{-hw, -hh}, {hw, -hh},
                                     {hw, hh}, {-hw, hh}}) {
            const auto [lat, lon] = frame.enu_to_latlon(cx + dx, cy + dy);
            b.footprint.push_back({lon, lat});
        }
        b.height_m = rng.uniform(10.0, 40.0);
        b.material = static_cast<Material>(rng.below(kNumMaterials));
        scene.buildings.push_back(b);
    }
    return scene;
}

void BM_TessellateExtrude1000(benchmark::State& state) {
    Rng rng(11);
    std::vector<std::vector<Vec2>> polys;
    std::vector<double> heights;
    for (int k = 0; k < 1000; ++k) {
        polys.push_back(star_polygon(rng, 4 + static_cast<int>(rng.below(9))));
        heights.push_back(rng.uniform(3.0, 60.0));
    }
    for (auto _ : state) {
        double volume = 0.0;
        for (std::size_t k = 0; k < polys.size(); ++k) {
            const TriangleMesh mesh =
                extrude(tessellate_footprint(polys[k]), heights[k]);
            volume += mesh_volume(mesh);
        }
        benchmark::DoNotOptimize(volume);
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_TessellateExtrude1000)->Unit(benchmark::kMillisecond);

void BM_Trace(benchmark::State& state) {
    const AntennaConfig ant = bench_antenna();
    const SceneGeometry geom = build_scene(bench_scene(5), ant);
    const TrainableSceneParams params =
        TrainableSceneParams::defaults(CalibrationMode::AM);
    SolverConfig cfg;
    cfg.n_rays = static_cast<int>(state.range(0));
    cfg.threads = 0;
    for (auto _ : state) {
        const RadioMap map = trace(geom, ant, params, cfg);
        benchmark::DoNotOptimize(map.coverage_fraction);
    }
    state.SetItemsProcessed(state.iterations() * cfg.n_rays);
}
BENCHMARK(BM_Trace)->Arg(16384)->Arg(65536)->Unit(benchmark::kMillisecond);

void BM_FullMapMetrics(benchmark::State& state) {
    Rng rng(3);
    Grid<float> a(kGridSize, kGridSize), b(kGridSize, kGridSize);
    for (int r = 0; r < kGridSize; ++r) {
        for (int c = 0; c < kGridSize; ++c) {
            a.at(r, c) = static_cast<float>(rng.uniform(-140.0, -40.0));
            b.at(r, c) = a.at(r, c) + static_cast<float>(rng.gaussian(0.0, 3.0));
        }
    }
    for (auto _ : state) {
        const MetricReport rep = full_map_metrics(a, b);
        benchmark::DoNotOptimize(rep.ssim);
    }
}
BENCHMARK(BM_FullMapMetrics)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
