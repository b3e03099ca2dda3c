#pragma once

#include <cstdint>
#include <string>

#include "radiotwin/ingest.hpp"
#include "radiotwin/solver.hpp"

namespace rtwin {

// Self-contained synthetic dataset: 3 buildings, 2 antennas and 500
// measurements sampled from the ray solver with planted parameters plus
// Gaussian noise, so the full pipeline runs without external data.
struct DemoDataset {
    SceneData scene;
    std::vector<AntennaConfig> antennas;
    std::vector<MeasurementRecord> measurements;
    TrainableSceneParams planted_params;
};

struct DemoConfig {
    std::uint64_t seed = 7;
    int n_measurements = 500;
    double noise_db = 2.0;  // measurement noise stddev
    int n_rays = 16384;     // solver rays for ground-truth generation
};

DemoDataset generate_demo_dataset(const DemoConfig& config = {});

// Writes measurements.csv, antennas.json, scene.json and
// planted_params.json into the directory (created if missing).
void write_demo_dataset(const DemoDataset& dataset, const std::string& directory);

}  // namespace rtwin
