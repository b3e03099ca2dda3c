#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radiotwin/radiomap.hpp"
#include "radiotwin/solver.hpp"

namespace rtwin {

// MAE over cells valid in truth AND covered by the prediction; cells the
// solver did not reach are masked out. excluded_cells counts truth-valid
// cells dropped that way. Throws when no cell overlaps.
double masked_mae(const RadioMap& predicted, const RadioMap& truth,
                  std::size_t* excluded_cells = nullptr);

struct CalibrationConfig {
    double lr = 1e-3;
    double weight_decay = 0.0;  // bounded/log parameters, no decay
    int max_iterations = 100;
    int plateau_patience = 15;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    int min_train_cells = 20;
};

struct CalibrationRun {
    CalibrationMode mode = CalibrationMode::A;
    int iterations = 0;
    std::vector<double> train_loss;       // masked MAE on the training cells
    std::vector<double> validation_mae;   // per iteration, starting at init
    double best_validation_mae = 0.0;
    TrainableSceneParams best_params;

    std::string to_json() const;
    std::string curves_csv() const;
};

// Gradient-based site calibration: 70/30 measurement split, iterated
// {trace with jacobian -> masked-MAE loss -> AdamW step}, validation MAE
// recorded each iteration (including the uncalibrated starting point),
// best snapshot returned. Stops at max_iterations or after
// plateau_patience iterations without validation improvement.
CalibrationRun calibrate_scene(const SceneGeometry& scene,
                               const AntennaConfig& antenna,
                               const std::vector<MeasurementRecord>& measurements,
                               CalibrationMode mode,
                               const CalibrationConfig& cal_config,
                               const SolverConfig& solver_config);

// Same, starting from explicit initial parameters (planted-truth tests).
CalibrationRun calibrate_scene_from(const SceneGeometry& scene,
                                    const AntennaConfig& antenna,
                                    const std::vector<MeasurementRecord>& measurements,
                                    const TrainableSceneParams& init,
                                    const CalibrationConfig& cal_config,
                                    const SolverConfig& solver_config);

}  // namespace rtwin
