#include "radiotwin/calibrate.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "radiotwin/optim.hpp"
#include "json.hpp"

namespace rtwin {

double masked_mae(const RadioMap& predicted, const RadioMap& truth,
                  std::size_t* excluded_cells) {
    double acc = 0.0;
    std::size_t n = 0, excluded = 0;
    const int rows = truth.values.rows();
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < truth.values.cols(); ++c) {
            if (!truth.valid.at(r, c))
                continue;
            if (!predicted.valid.at(r, c)) {
                ++excluded;
                continue;
            }
            acc += std::abs(predicted.values.at(r, c) - truth.values.at(r, c));
            ++n;
        }
    }
    if (excluded_cells)
        *excluded_cells = excluded;
    if (n == 0)
        throw std::invalid_argument("masked_mae: no overlapping valid cells");
    return acc / static_cast<double>(n);
}

std::string CalibrationRun::to_json() const {
    nlohmann::json j;
    j["mode"] = mode_name(mode);
    j["iterations"] = iterations;
    j["train_loss"] = train_loss;
    j["validation_mae"] = validation_mae;
    j["best_validation_mae"] = best_validation_mae;
    j["best_params"] = nlohmann::json::parse(best_params.to_json());
    return j.dump(2);
}

std::string CalibrationRun::curves_csv() const {
    std::ostringstream out;
    out << "iteration,train_loss,validation_mae\n";
    for (std::size_t i = 0; i < validation_mae.size(); ++i) {
        out << i << ',';
        if (i < train_loss.size())
            out << train_loss[i];
        out << ',' << validation_mae[i] << '\n';
    }
    return out.str();
}

CalibrationRun calibrate_scene_from(const SceneGeometry& scene,
                                    const AntennaConfig& antenna,
                                    const std::vector<MeasurementRecord>& measurements,
                                    const TrainableSceneParams& init,
                                    const CalibrationConfig& cal,
                                    const SolverConfig& solver_cfg) {
    const auto [train_recs, val_recs] =
        split_records(measurements, cal.train_fraction, cal.seed);

    const GeoTransform transform = transform_for(antenna, solver_cfg.resolution_m);
    const RadioMap train_map = rasterize_measurements(train_recs, transform);
    const RadioMap val_map = rasterize_measurements(val_recs, transform);

    std::size_t n_train_cells = 0;
    for (auto v : train_map.valid.data())
        n_train_cells += v;
    if (static_cast<int>(n_train_cells) < cal.min_train_cells)
        throw std::invalid_argument("calibrate_scene: fewer than " +
                                    std::to_string(cal.min_train_cells) +
                                    " training cells");

    // Jacobian cells: union of train and validation masks; gradients use
    // train cells only, validation cells only feed the MAE curve.
    Grid<std::uint8_t> mask;
    for (std::size_t i = 0; i < mask.data().size(); ++i)
        mask.data()[i] = train_map.valid.data()[i] | val_map.valid.data()[i];

    TrainableSceneParams params = init;
    std::vector<double> theta = params.get_free();
    AdamW opt(theta.size(), cal.lr, cal.weight_decay);

    CalibrationRun run;
    run.mode = params.mode;
    run.best_params = params;
    run.best_validation_mae = std::numeric_limits<double>::infinity();

    int since_best = 0;
    const int n = transform.size();
    for (int iter = 0;; ++iter) {
        params.set_free(theta);
        const TraceJacobian jac =
            trace_with_cell_jacobian(scene, antenna, params, solver_cfg, mask);

        const double val_mae = masked_mae(jac.map, val_map);
        run.validation_mae.push_back(val_mae);
        if (val_mae < run.best_validation_mae) {
            run.best_validation_mae = val_mae;
            run.best_params = params;
            since_best = 0;
        } else {
            ++since_best;
        }

        // Masked MAE on training cells and its adjoint.
        double train_acc = 0.0;
        std::size_t n_used = 0;
        for (const auto& [cell, dg] : jac.cells) {
            const int r = cell / n, c = cell % n;
            if (!train_map.valid.at(r, c) || !jac.map.valid.at(r, c))
                continue;
            train_acc += std::abs(jac.map.values.at(r, c) - train_map.values.at(r, c));
            ++n_used;
        }
        if (n_used == 0)
            throw std::runtime_error("calibrate_scene: solver covers no training cell");
        run.train_loss.push_back(train_acc / static_cast<double>(n_used));

        if (iter >= cal.max_iterations || since_best > cal.plateau_patience)
            break;

        DerivedGrad total;
        for (const auto& [cell, dg] : jac.cells) {
            const int r = cell / n, c = cell % n;
            if (!train_map.valid.at(r, c) || !jac.map.valid.at(r, c))
                continue;
            const double diff = jac.map.values.at(r, c) - train_map.values.at(r, c);
            const double adj = (diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0)) /
                               static_cast<double>(n_used);
            DerivedGrad g = dg;
            g.scale(adj);
            total += g;
        }
        std::vector<double> grad(theta.size(), 0.0);
        accumulate_free_grad(params, total, grad);
        opt.step(theta, grad);
        run.iterations = iter + 1;
    }
    return run;
}

CalibrationRun calibrate_scene(const SceneGeometry& scene,
                               const AntennaConfig& antenna,
                               const std::vector<MeasurementRecord>& measurements,
                               CalibrationMode mode, const CalibrationConfig& cal,
                               const SolverConfig& solver_cfg) {
    return calibrate_scene_from(scene, antenna, measurements,
                                TrainableSceneParams::defaults(mode), cal,
                                solver_cfg);
}

}  // namespace rtwin
