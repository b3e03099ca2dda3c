// Command-line front end: wires the library modules into pipeline
// subcommands driven by a single JSON configuration file with per-flag
// overrides. Every subcommand writes its outputs plus a run manifest
// (input hashes, seed, version, wall clock) into the output directory.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error,
// 3 infeasible optimization.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "radiotwin/calibrate.hpp"
#include "radiotwin/demo.hpp"
#include "radiotwin/features.hpp"
#include "radiotwin/handover.hpp"
#include "radiotwin/ingest.hpp"
#include "radiotwin/mesh.hpp"
#include "radiotwin/metrics.hpp"
#include "radiotwin/poweropt.hpp"
#include "radiotwin/radiomap.hpp"
#include "radiotwin/raster_io.hpp"
#include "radiotwin/rng.hpp"
#include "radiotwin/solver.hpp"
#include "radiotwin/surrogate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rtwin;

namespace {

constexpr const char* kVersion = "0.1.0";

// Thrown when a downstream optimization problem has no feasible point;
// mapped to exit code 3.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown for configuration / input validation problems; mapped to exit 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write file: " + path.string());
    out << text;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

// ------------------------------------------------------------------------
// Configuration.
// ------------------------------------------------------------------------

struct RunConfig {
    json raw;            // parsed config file (or an empty object)
    std::string config_path;

    std::string output_dir = "out";
    std::uint64_t seed = 0;
    std::string measurements_path;
    std::string antennas_path;
    std::string scene_path;

    // CLI overrides (empty/negative = keep config/default value).
    std::string antenna_filter;       // restrict to one antenna_id
    int threads_override = -1;
    int rays_override = -1;
    std::string mode_override;

    const json& section(const char* name) const {
        static const json empty = json::object();
        auto it = raw.find(name);
        return it != raw.end() ? *it : empty;
    }

    template <typename T>
    T get(const char* sect, const char* key, T fallback) const {
        const json& s = section(sect);
        auto it = s.find(key);
        return it != s.end() ? it->get<T>() : fallback;
    }
};

RunConfig load_config(const std::string& config_path) {
    RunConfig cfg;
    cfg.config_path = config_path;
    cfg.raw = json::object();
    if (!config_path.empty()) {
        try {
            cfg.raw = json::parse(read_file(config_path));
        } catch (const json::exception& e) {
            throw ValidationError("config " + config_path + ": " + e.what());
        }
    }
    cfg.output_dir = cfg.raw.value("output_dir", cfg.output_dir);
    cfg.seed = cfg.raw.value("seed", cfg.seed);
    const json& inputs = cfg.section("inputs");
    cfg.measurements_path = inputs.value("measurements", "");
    cfg.antennas_path = inputs.value("antennas", "");
    cfg.scene_path = inputs.value("scene", "");
    return cfg;
}

SolverConfig solver_config(const RunConfig& cfg) {
    SolverConfig sc;
    sc.n_rays = cfg.get("solver", "n_rays", sc.n_rays);
    sc.max_reflections = cfg.get("solver", "max_reflections", sc.max_reflections);
    sc.no_coverage_fill_dbm =
        cfg.get("solver", "no_coverage_fill_dbm", sc.no_coverage_fill_dbm);
    sc.rx_height_m = cfg.get("solver", "rx_height_m", sc.rx_height_m);
    sc.resolution_m = cfg.get("solver", "resolution_m", sc.resolution_m);
    sc.threads = cfg.get("solver", "threads", sc.threads);
    sc.seed = cfg.seed;
    if (cfg.threads_override >= 0)
        sc.threads = cfg.threads_override;
    if (cfg.rays_override > 0)
        sc.n_rays = cfg.rays_override;
    return sc;
}

CalibrationConfig calibration_config(const RunConfig& cfg) {
    CalibrationConfig cc;
    cc.lr = cfg.get("calibration", "lr", cc.lr);
    cc.weight_decay = cfg.get("calibration", "weight_decay", cc.weight_decay);
    cc.max_iterations = cfg.get("calibration", "max_iterations", cc.max_iterations);
    cc.plateau_patience =
        cfg.get("calibration", "plateau_patience", cc.plateau_patience);
    cc.train_fraction = cfg.get("calibration", "train_fraction", cc.train_fraction);
    cc.min_train_cells = cfg.get("calibration", "min_train_cells", cc.min_train_cells);
    cc.seed = cfg.seed;
    return cc;
}

CalibrationMode calibration_mode(const RunConfig& cfg) {
    std::string name = cfg.get<std::string>("calibration", "mode", "AMv");
    if (!cfg.mode_override.empty())
        name = cfg.mode_override;
    try {
        return mode_from_name(name);
    } catch (const std::exception& e) {
        throw ValidationError(e.what());
    }
}

SurrogateConfig surrogate_config(const RunConfig& cfg) {
    SurrogateConfig sc;
    sc.hidden = cfg.get("surrogate", "hidden", sc.hidden);
    sc.lr = cfg.get("surrogate", "lr", sc.lr);
    sc.weight_decay = cfg.get("surrogate", "weight_decay", sc.weight_decay);
    sc.epochs = cfg.get("surrogate", "epochs", sc.epochs);
    sc.batch_size = cfg.get("surrogate", "batch_size", sc.batch_size);
    sc.plateau_factor = cfg.get("surrogate", "plateau_factor", sc.plateau_factor);
    sc.plateau_patience =
        cfg.get("surrogate", "plateau_patience", sc.plateau_patience);
    sc.holdout_fraction =
        cfg.get("surrogate", "holdout_fraction", sc.holdout_fraction);
    sc.seed = cfg.seed;
    return sc;
}

// ------------------------------------------------------------------------
// Run manifest.
// ------------------------------------------------------------------------

class Manifest {
public:
    Manifest(const RunConfig& cfg, const std::string& subcommand)
        : cfg_(cfg), subcommand_(subcommand),
          start_(std::chrono::steady_clock::now()) {
        if (!cfg.config_path.empty())
            add_input(cfg.config_path);
    }

    void add_input(const std::string& path) {
        if (path.empty())
            return;
        inputs_[path] = "fnv1a64:" + fnv1a_hex(read_file(path));
    }

    void add_output(const fs::path& path) { outputs_.push_back(path.string()); }

    void write() const {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
                .count();
        json j;
        j["subcommand"] = subcommand_;
        j["version"] = kVersion;
        j["seed"] = cfg_.seed;
        j["inputs"] = inputs_;
        j["outputs"] = outputs_;
        j["wall_clock_s"] = wall;
        write_file(fs::path(cfg_.output_dir) / (subcommand_ + "_manifest.json"),
                   j.dump(2) + "\n");
    }

private:
    const RunConfig& cfg_;
    std::string subcommand_;
    std::chrono::steady_clock::time_point start_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
};

// ------------------------------------------------------------------------
// Shared loading helpers.
// ------------------------------------------------------------------------

std::vector<AntennaConfig> load_antennas(const RunConfig& cfg, Manifest& man) {
    if (cfg.antennas_path.empty())
        throw ValidationError("config: inputs.antennas is required");
    man.add_input(cfg.antennas_path);
    std::vector<AntennaConfig> antennas = parse_antennas(cfg.antennas_path);
    if (!cfg.antenna_filter.empty()) {
        std::erase_if(antennas, [&](const AntennaConfig& a) {
            return a.antenna_id != cfg.antenna_filter;
        });
        if (antennas.empty())
            throw ValidationError("antenna id not found: " + cfg.antenna_filter);
    }
    if (antennas.empty())
        throw ValidationError(cfg.antennas_path + ": no antennas");
    return antennas;
}

std::vector<MeasurementRecord> load_measurements(const RunConfig& cfg,
                                                 Manifest& man) {
    if (cfg.measurements_path.empty())
        throw ValidationError("config: inputs.measurements is required");
    man.add_input(cfg.measurements_path);
    return parse_measurements(cfg.measurements_path);
}

SceneData load_scene(const RunConfig& cfg, Manifest& man) {
    if (cfg.scene_path.empty())
        throw ValidationError("config: inputs.scene is required");
    man.add_input(cfg.scene_path);
    return parse_scene(cfg.scene_path);
}

std::vector<MeasurementRecord> records_for(
    const std::vector<MeasurementRecord>& all, const std::string& antenna_id) {
    std::vector<MeasurementRecord> out;
    for (const MeasurementRecord& r : all)
        if (r.antenna_id == antenna_id)
            out.push_back(r);
    return out;
}

// The per-antenna radio map consumed by the downstream optimizers: the ray
// tracer's raster when `trace` has produced one, the measurement-derived
// raster from `build-maps` otherwise.
RadioMap load_antenna_map(const RunConfig& cfg, const std::string& antenna_id,
                          Manifest& man) {
    const fs::path traced = fs::path(cfg.output_dir) / ("trace_" + antenna_id + ".r32");
    const fs::path rasterized = fs::path(cfg.output_dir) / ("map_" + antenna_id + ".r32");
    const fs::path& chosen = fs::exists(traced) ? traced : rasterized;
    if (!fs::exists(chosen))
        throw ValidationError("no radio map for antenna " + antenna_id +
                              "; run `trace` or `build-maps` first (expected " +
                              traced.string() + " or " + rasterized.string() + ")");
    man.add_input(chosen.string());
    return read_raster(chosen.string());
}

TrainableSceneParams load_params(const RunConfig& cfg, const std::string& path,
                                 CalibrationMode mode, Manifest& man) {
    if (path.empty())
        return TrainableSceneParams::defaults(mode);
    man.add_input(path);
    return TrainableSceneParams::from_json(read_file(path));
}

// ------------------------------------------------------------------------
// Subcommands.
// ------------------------------------------------------------------------

int cmd_ingest_check(const RunConfig& cfg) {
    Manifest man(cfg, "ingest-check");
    const std::vector<MeasurementRecord> records = load_measurements(cfg, man);
    const std::vector<AntennaConfig> antennas = load_antennas(cfg, man);
    const SceneData scene = load_scene(cfg, man);
    const double max_accuracy = cfg.get("ingest", "max_accuracy_m", 10.0);
    const bool outdoor_only = cfg.get("ingest", "outdoor_only", true);
    const std::vector<MeasurementRecord> kept =
        filter_measurements(records, max_accuracy, outdoor_only);

    json j;
    j["measurements_total"] = records.size();
    j["measurements_kept"] = kept.size();
    j["antennas"] = antennas.size();
    j["buildings"] = scene.buildings.size();
    j["landuse_polygons"] = scene.landuse.size();
    j["roads"] = scene.roads.size();
    const fs::path out = fs::path(cfg.output_dir) / "ingest_report.json";
    write_file(out, j.dump(2) + "\n");
    man.add_output(out);
    man.write();
    std::cout << "ingest-check: " << kept.size() << "/" << records.size()
              << " measurements kept, " << antennas.size() << " antennas, "
              << scene.buildings.size() << " buildings\n";
    return 0;
}

int cmd_build_maps(const RunConfig& cfg) {
    Manifest man(cfg, "build-maps");
    const std::vector<MeasurementRecord> all = load_measurements(cfg, man);
    const std::vector<AntennaConfig> antennas = load_antennas(cfg, man);
    const double max_accuracy = cfg.get("ingest", "max_accuracy_m", 10.0);
    const bool outdoor_only = cfg.get("ingest", "outdoor_only", true);

    std::ostringstream csv;
    csv << "antenna_id,n_records,extent_m,resolution_m,coverage_fraction\n";
    for (const AntennaConfig& ant : antennas) {
        const std::vector<MeasurementRecord> records = filter_measurements(
            records_for(all, ant.antenna_id), max_accuracy, outdoor_only);
        if (records.empty())
            throw ValidationError("no measurements for antenna " + ant.antenna_id);
        const ExtentChoice extent = classify_extent(records, ant);
        const GeoTransform t = transform_for(ant, extent.resolution_m);
        const RadioMap map = rasterize_measurements(records, t);

        const fs::path raster =
            fs::path(cfg.output_dir) / ("map_" + ant.antenna_id + ".r32");
        const fs::path pgm =
            fs::path(cfg.output_dir) / ("map_" + ant.antenna_id + ".pgm");
        fs::create_directories(cfg.output_dir);
        write_raster(map, raster.string());
        write_pgm(map, pgm.string());
        man.add_output(raster);
        man.add_output(pgm);
        csv << ant.antenna_id << ',' << records.size() << ','
            << extent.max_distance_m << ',' << extent.resolution_m << ','
            << map.coverage_fraction << '\n';
    }
    const fs::path summary = fs::path(cfg.output_dir) / "maps_summary.csv";
    write_file(summary, csv.str());
    man.add_output(summary);
    man.write();
    std::cout << "build-maps: wrote rasters for " << antennas.size()
              << " antenna(s) to " << cfg.output_dir << "\n";
    return 0;
}

int cmd_build_scene(const RunConfig& cfg) {
    Manifest man(cfg, "build-scene");
    const SceneData scene = load_scene(cfg, man);
    const std::vector<AntennaConfig> antennas = load_antennas(cfg, man);
    const AntennaConfig& ant = antennas.front();
    const SceneGeometry geom = build_scene(scene, ant);

    json j;
    j["antenna_id"] = ant.antenna_id;
    j["buildings"] = json::array();
    for (std::size_t k = 0; k < geom.meshes.size(); ++k) {
        const TriangleMesh& mesh = geom.meshes[k];
        const fs::path ply = fs::path(cfg.output_dir) /
                             ("building_" + std::to_string(k) + ".ply");
        write_file(ply, export_ply(mesh));
        man.add_output(ply);
        json b;
        b["file"] = ply.filename().string();
        b["material"] = material_name(mesh.material);
        b["watertight"] = is_watertight(mesh);
        b["volume_m3"] = mesh_volume(mesh);
        b["surface_area_m2"] = mesh_surface_area(mesh);
        j["buildings"].push_back(b);
    }
    j["walls"] = geom.walls.size();
    const fs::path report = fs::path(cfg.output_dir) / "scene_report.json";
    write_file(report, j.dump(2) + "\n");
    man.add_output(report);
    man.write();
    std::cout << "build-scene: " << geom.meshes.size() << " meshes, "
              << geom.walls.size() << " walls -> " << cfg.output_dir << "\n";
    return 0;
}

int cmd_features(const RunConfig& cfg, const std::string& params_path) {
    Manifest man(cfg, "features");
    const SceneData scene = load_scene(cfg, man);
    const std::vector<AntennaConfig> antennas = load_antennas(cfg, man);
    const SolverConfig sc = solver_config(cfg);
    const TrainableSceneParams params =
        load_params(cfg, params_path, calibration_mode(cfg), man);

    for (const AntennaConfig& ant : antennas) {
        const GeoTransform t = transform_for(ant, sc.resolution_m);
        const FeatureStack stack =
            build_features(scene, ant, t, params.antenna_params());
        const auto layer_path = [&](const char* name) {
            return fs::path(cfg.output_dir) /
                   ("features_" + ant.antenna_id + "_" + name + ".r32");
        };
        fs::create_directories(cfg.output_dir);
        const std::vector<std::pair<const char*, const Grid<float>*>> layers = {
            {"distance", &stack.distance}, {"phi", &stack.phi},
            {"theta", &stack.theta},       {"channel", &stack.channel},
            {"height", &stack.height},     {"landuse", &stack.landuse}};
        for (const auto& [name, grid] : layers) {
            write_layer(*grid, t, layer_path(name).string());
            man.add_output(layer_path(name));
        }
        Grid<float> road(stack.road.rows(), stack.road.cols());
        for (int r = 0; r < road.rows(); ++r)
            for (int c = 0; c < road.cols(); ++c)
                road.at(r, c) = static_cast<float>(stack.road.at(r, c));
        write_layer(road, t, layer_path("road").string());
        man.add_output(layer_path("road"));
    }
    man.write();
    std::cout << "features: wrote 7 layers per antenna for " << antennas.size()
              << " antenna(s)\n";
    return 0;
}

int cmd_trace(const RunConfig& cfg, const std::string& params_path) {
    Manifest man(cfg, "trace");
    const SceneData scene = load_scene(cfg, man);
    const std::vector<AntennaConfig> antennas = load_antennas(cfg, man);
    const SolverConfig sc = solver_config(cfg);
    const TrainableSceneParams params =
        load_params(cfg, params_path, calibration_mode(cfg), man);

    json report;
    report["n_rays"] = sc.n_rays;
    report["max_reflections"] = sc.max_reflections;
    report["maps"] = json::array();
    for (const AntennaConfig& ant : antennas) {
        const SceneGeometry geom = build_scene(scene, ant);
        const auto t0 = std::chrono::steady_clock::now();
        const RadioMap map = trace(geom, ant, params, sc);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        const fs::path raster =
            fs::path(cfg.output_dir) / ("trace_" + ant.antenna_id + ".r32");
        const fs::path pgm =
            fs::path(cfg.output_dir) / ("trace_" + ant.antenna_id + ".pgm");
        fs::create_directories(cfg.output_dir);
        write_raster(map, raster.string());
        write_pgm(map, pgm.string());
        man.add_output(raster);
        man.add_output(pgm);
        json m;
        m["antenna_id"] = ant.antenna_id;
        m["coverage_fraction"] = map.coverage_fraction;
        m["wall_clock_s"] = wall;
        report["maps"].push_back(m);
        std::cout << "trace: " << ant.antenna_id << " coverage "
                  << map.coverage_fraction << " in " << wall << " s\n";
    }
    const fs::path rp = fs::path(cfg.output_dir) / "trace_report.json";
    write_file(rp, report.dump(2) + "\n");
    man.add_output(rp);
    man.write();
    return 0;
}

int cmd_calibrate(const RunConfig& cfg) {
    Manifest man(cfg, "calibrate");
    const SceneData scene = load_scene(cfg, man);
    const std::vector<AntennaConfig> antennas = load_antennas(cfg, man);
    const std::vector<MeasurementRecord> all = load_measurements(cfg, man);
    const SolverConfig sc = solver_config(cfg);
    const CalibrationConfig cc = calibration_config(cfg);
    const CalibrationMode mode = calibration_mode(cfg);
    const double max_accuracy = cfg.get("ingest", "max_accuracy_m", 10.0);
    const bool outdoor_only = cfg.get("ingest", "outdoor_only", true);

    for (const AntennaConfig& ant : antennas) {
        const std::vector<MeasurementRecord> records = filter_measurements(
            records_for(all, ant.antenna_id), max_accuracy, outdoor_only);
        const SceneGeometry geom = build_scene(scene, ant);
        const CalibrationRun run =
            calibrate_scene(geom, ant, records, mode, cc, sc);

        const fs::path run_json = fs::path(cfg.output_dir) /
                                  ("calibration_" + ant.antenna_id + ".json");
        const fs::path curves = fs::path(cfg.output_dir) /
                                ("calibration_" + ant.antenna_id + "_curves.csv");
        const fs::path params = fs::path(cfg.output_dir) /
                                ("params_" + ant.antenna_id + ".json");
        write_file(run_json, run.to_json() + "\n");
        write_file(curves, run.curves_csv());
        write_file(params, run.best_params.to_json() + "\n");
        man.add_output(run_json);
        man.add_output(curves);
        man.add_output(params);
        std::cout << "calibrate: " << ant.antenna_id << " mode "
                  << mode_name(mode) << " best validation MAE "
                  << run.best_validation_mae << " dB after " << run.iterations
                  << " iterations\n";
    }
    man.write();
    return 0;
}

std::vector<SurrogateSample> surrogate_samples(const RunConfig& cfg,
                                               Manifest& man,
                                               const AntennaConfig& ant,
                                               const SceneData& scene,
                                               const std::vector<MeasurementRecord>& all) {
    const double max_accuracy = cfg.get("ingest", "max_accuracy_m", 10.0);
    const bool outdoor_only = cfg.get("ingest", "outdoor_only", true);
    const std::vector<MeasurementRecord> records = filter_measurements(
        records_for(all, ant.antenna_id), max_accuracy, outdoor_only);
    if (records.empty())
        throw ValidationError("no measurements for antenna " + ant.antenna_id);
    const ExtentChoice extent = classify_extent(records, ant);
    const GeoTransform t = transform_for(ant, extent.resolution_m);
    const RadioMap truth = rasterize_measurements(records, t);
    const FeatureStack stack = build_features(
        scene, ant, t,
        TrainableSceneParams::defaults(calibration_mode(cfg)).antenna_params());
    (void)man;
    return collect_samples(stack, truth);
}

std::string curves_csv(const SurrogateTrainReport& rep) {
    std::ostringstream csv;
    csv << "epoch,train_loss,val_loss,val_mae\n";
    for (std::size_t i = 0; i < rep.train_loss.size(); ++i)
        csv << i << ',' << rep.train_loss[i] << ',' << rep.val_loss[i] << ','
            << rep.val_mae[i] << '\n';
    return csv.str();
}

int cmd_surrogate(const RunConfig& cfg, const std::string& model_path,
                  bool finetune) {
    Manifest man(cfg, finetune ? "surrogate-calibrate" : "surrogate-train");
    const SceneData scene = load_scene(cfg, man);
    const std::vector<AntennaConfig> antennas = load_antennas(cfg, man);
    const std::vector<MeasurementRecord> all = load_measurements(cfg, man);
    const AntennaConfig& ant = antennas.front();
    const std::vector<SurrogateSample> samples =
        surrogate_samples(cfg, man, ant, scene, all);

    SurrogateModel model{surrogate_config(cfg)};
    if (finetune) {
        const std::string path = model_path.empty()
                                     ? (fs::path(cfg.output_dir) / "surrogate_model.json").string()
                                     : model_path;
        man.add_input(path);
        model = SurrogateModel::from_json(read_file(path));
    }
    const SurrogateTrainReport rep =
        finetune ? model.calibrate(samples) : model.train(samples);

    const char* stem = finetune ? "surrogate_calibrated" : "surrogate_model";
    const fs::path model_out = fs::path(cfg.output_dir) / (std::string(stem) + ".json");
    const fs::path curves = fs::path(cfg.output_dir) / (std::string(stem) + "_curves.csv");
    write_file(model_out, model.to_json() + "\n");
    write_file(curves, curves_csv(rep));
    man.add_output(model_out);
    man.add_output(curves);
    man.write();
    std::cout << (finetune ? "surrogate-calibrate" : "surrogate-train") << ": "
              << samples.size() << " samples, best validation loss "
              << rep.best_val_loss << " at epoch " << rep.best_epoch << "\n";
    return 0;
}

int cmd_metrics(const RunConfig& cfg, const std::string& pred_path,
                const std::string& truth_path) {
    Manifest man(cfg, "metrics");
    if (pred_path.empty() || truth_path.empty())
        throw ValidationError("metrics: --pred and --truth raster paths are required");
    man.add_input(pred_path);
    man.add_input(truth_path);
    const RadioMap pred = read_raster(pred_path);
    const RadioMap truth = read_raster(truth_path);

    const MetricReport full = full_map_metrics(pred.values, truth.values);
    const MetricReport sparse = sparse_map_metrics(pred.values, truth);

    const auto to_json = [](const MetricReport& r) {
        json j;
        j["rmse"] = r.rmse;
        j["mae"] = r.mae;
        j["smape"] = r.smape;
        if (r.pcc_defined)
            j["pcc"] = r.pcc;
        if (r.has_ssim)
            j["ssim"] = r.ssim;
        j["n_points"] = r.n_points;
        return j;
    };
    json j;
    j["prediction"] = pred_path;
    j["truth"] = truth_path;
    j["full_map"] = to_json(full);
    j["sparse_map"] = to_json(sparse);

    std::ostringstream csv;
    csv << "scope,rmse,mae,smape,pcc,ssim,n_points\n";
    const auto row = [&](const char* scope, const MetricReport& r) {
        csv << scope << ',' << r.rmse << ',' << r.mae << ',' << r.smape << ',';
        if (r.pcc_defined)
            csv << r.pcc;
        csv << ',';
        if (r.has_ssim)
            csv << r.ssim;
        csv << ',' << r.n_points << '\n';
    };
    row("full", full);
    row("sparse", sparse);

    const fs::path jpath = fs::path(cfg.output_dir) / "metrics.json";
    const fs::path cpath = fs::path(cfg.output_dir) / "metrics.csv";
    write_file(jpath, j.dump(2) + "\n");
    write_file(cpath, csv.str());
    man.add_output(jpath);
    man.add_output(cpath);
    man.write();
    std::cout << "metrics: sparse MAE " << sparse.mae << " dB over "
              << sparse.n_points << " cells\n";
    return 0;
}

int cmd_poweropt_sweep(const RunConfig& cfg) {
    Manifest man(cfg, "poweropt-sweep");
    const std::vector<AntennaConfig> antennas = load_antennas(cfg, man);

    std::vector<RadioMap> maps;
    maps.reserve(antennas.size());
    for (const AntennaConfig& ant : antennas)
        maps.push_back(load_antenna_map(cfg, ant.antenna_id, man));

    std::vector<int> user_counts =
        cfg.get("poweropt", "user_counts", std::vector<int>{2, 4, 6, 8});
    const double demand = cfg.get("poweropt", "demand_bps", 2e6);
    const double noise_w = cfg.get("poweropt", "noise_w", 1e-12);
    const double cap_w = cfg.get("poweropt", "power_cap_w", 10.0);
    const int pieces = cfg.get("poweropt", "capacity_pieces", 1);
    const double placement_radius =
        cfg.get("poweropt", "placement_radius_m", 200.0);

    PowerSolveOptions options;
    options.tolerance = cfg.get("poweropt", "tolerance", options.tolerance);

    // One deterministic user drop, uniform in a disc around the grid centre;
    // each sweep point takes a prefix so larger counts strictly add users and
    // the total-power column is monotone.
    const int max_users =
        *std::max_element(user_counts.begin(), user_counts.end());
    Rng rng(cfg.seed);
    std::vector<Vec2> all_users(max_users);
    for (Vec2& u : all_users) {
        const double ang = rng.uniform(0.0, 6.283185307179586);
        const double r = placement_radius * std::sqrt(rng.uniform());
        u = {r * std::cos(ang), r * std::sin(ang)};
    }

    std::ostringstream csv;
    csv << "n_users,status,total_power_w,kkt_residual,iterations\n";
    bool any_infeasible = false;
    for (int n_users : user_counts) {
        const std::vector<Vec2> users(all_users.begin(),
                                      all_users.begin() + n_users);
        PowerInstance inst;
        inst.demands_bps.assign(n_users, demand);
        inst.noise_w = noise_w;
        inst.power_cap_w = cap_w;
        inst.pieces = fit_capacity_pieces(pieces);
        inst.gains.assign(n_users, std::vector<double>(antennas.size()));
        inst.bandwidths_hz.clear();
        for (std::size_t j = 0; j < antennas.size(); ++j) {
            inst.bandwidths_hz.push_back(antennas[j].bandwidth_hz);
            const std::vector<double> g =
                gains_from_map(maps[j], antennas[j].tx_power_dbm, users);
            for (int i = 0; i < n_users; ++i)
                inst.gains[i][j] = g[i];
        }
        const PowerSolution sol = solve_power(inst, options);
        csv << n_users << ',' << power_status_name(sol.status) << ','
            << sol.total_power_w << ',' << sol.kkt_residual << ','
            << sol.iterations << '\n';
        if (sol.status == PowerStatus::Infeasible)
            any_infeasible = true;
    }
    const fs::path out = fs::path(cfg.output_dir) / "power_sweep.csv";
    write_file(out, csv.str());
    man.add_output(out);
    man.write();
    std::cout << "poweropt-sweep: wrote " << out.string() << "\n";
    if (any_infeasible)
        throw InfeasibleError("poweropt-sweep: at least one sweep point is infeasible");
    return 0;
}

int cmd_handover_sim(const RunConfig& cfg, double gamma_override,
                     int users_override, int slots_override) {
    Manifest man(cfg, "handover-sim");
    const std::vector<AntennaConfig> antennas = load_antennas(cfg, man);
    if (antennas.size() < 2)
        throw ValidationError("handover-sim: needs at least two antennas");

    std::vector<RadioMap> maps;
    maps.reserve(antennas.size());
    HandoverInstance inst;
    inst.bandwidths_hz.clear();
    for (const AntennaConfig& ant : antennas) {
        maps.push_back(load_antenna_map(cfg, ant.antenna_id, man));
        inst.bandwidths_hz.push_back(ant.bandwidth_hz);
    }
    inst.n_users = cfg.get("handover", "n_users", inst.n_users);
    inst.horizon_slots = cfg.get("handover", "horizon_slots", inst.horizon_slots);
    inst.gamma = cfg.get("handover", "gamma", inst.gamma);
    inst.noise_dbm = cfg.get("handover", "noise_dbm", inst.noise_dbm);
    inst.hedge_eps = cfg.get("handover", "hedge_eps", inst.hedge_eps);
    inst.expert_etas = cfg.get("handover", "expert_etas", inst.expert_etas);
    inst.seed = cfg.seed;
    if (gamma_override >= 0.0)
        inst.gamma = gamma_override;
    if (users_override > 0)
        inst.n_users = users_override;
    if (slots_override > 0)
        inst.horizon_slots = slots_override;

    const HandoverTrace trace = simulate_handover(inst, maps);
    const fs::path csv = fs::path(cfg.output_dir) / "handover_trace.csv";
    const fs::path summary = fs::path(cfg.output_dir) / "handover_summary.json";
    write_file(csv, trace.trace_csv());
    write_file(summary, trace.summary.to_json() + "\n");
    man.add_output(csv);
    man.add_output(summary);
    man.write();
    std::cout << "handover-sim: " << inst.n_users << " users x "
              << inst.horizon_slots << " slots, last-100 mean throughput "
              << trace.summary.mean_throughput_last100 << " bps, mean handovers "
              << trace.summary.mean_handovers_last100 << "\n";
    return 0;
}

int cmd_report(const RunConfig& cfg) {
    Manifest man(cfg, "report");
    const fs::path dir(cfg.output_dir);
    const fs::path metrics_csv = dir / "metrics.csv";
    const fs::path power_csv = dir / "power_sweep.csv";
    const fs::path handover_csv = dir / "handover_trace.csv";
    for (const fs::path& p : {metrics_csv, power_csv, handover_csv})
        if (!fs::exists(p))
            throw ValidationError("report: missing " + p.string() +
                                  "; run the producing subcommand first");
    man.add_input(metrics_csv.string());
    man.add_input(power_csv.string());
    man.add_input(handover_csv.string());

    // Table 1: prediction-quality metrics (pass-through, plot-ready).
    write_file(dir / "report_metrics.csv", read_file(metrics_csv.string()));
    man.add_output(dir / "report_metrics.csv");

    // Table 2: total transmit power vs user count.
    write_file(dir / "report_power.csv", read_file(power_csv.string()));
    man.add_output(dir / "report_power.csv");

    // Table 3: handover trace thinned with a 100-slot mean for plotting.
    std::istringstream in(read_file(handover_csv.string()));
    std::string line;
    std::getline(in, line);  // header
    std::ostringstream out;
    out << "slot,mean_throughput_100,mean_handovers_100\n";
    double tp_acc = 0.0, ho_acc = 0.0;
    int count = 0, slot = 0;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string field;
        std::getline(row, field, ',');
        slot = std::stoi(field);
        std::getline(row, field, ',');
        tp_acc += std::stod(field);
        std::getline(row, field, ',');
        ho_acc += std::stod(field);
        if (++count == 100) {
            out << slot << ',' << tp_acc / 100.0 << ',' << ho_acc / 100.0 << '\n';
            tp_acc = ho_acc = 0.0;
            count = 0;
        }
    }
    if (count > 0)
        out << slot << ',' << tp_acc / count << ',' << ho_acc / count << '\n';
    write_file(dir / "report_handover.csv", out.str());
    man.add_output(dir / "report_handover.csv");
    man.write();
    std::cout << "report: wrote report_metrics.csv, report_power.csv, "
                 "report_handover.csv\n";
    return 0;
}

int cmd_make_demo(const std::string& dir, std::uint64_t seed) {
    DemoConfig dc;
    dc.seed = seed;
    const DemoDataset demo = generate_demo_dataset(dc);
    write_demo_dataset(demo, dir);
    std::cout << "make-demo: wrote " << demo.measurements.size()
              << " measurements, " << demo.antennas.size() << " antennas, "
              << demo.scene.buildings.size() << " buildings to " << dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cellular radio digital-twin pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path;
    std::string antenna_filter;
    std::string params_path;
    std::string model_path;
    std::string pred_path, truth_path;
    std::string demo_dir = "data/demo";
    std::string output_dir_override;
    std::int64_t seed_override = -1;
    int threads_override = -1;
    int rays_override = -1;
    std::string mode_override;
    double gamma_override = -1.0;
    int users_override = -1, slots_override = -1;

    const auto add_common = [&](CLI::App* sub, bool needs_config) {
        CLI::Option* opt =
            sub->add_option("-c,--config", config_path, "JSON run configuration");
        if (needs_config)
            opt->required();
        sub->add_option("-o,--output-dir", output_dir_override,
                        "override output directory");
        sub->add_option("--seed", seed_override, "override global seed");
        sub->add_option("--antenna", antenna_filter,
                        "restrict to one antenna id");
        sub->add_option("--threads", threads_override,
                        "override solver worker threads (0 = all)");
        sub->add_option("--rays", rays_override, "override solver ray count");
        sub->add_option("--mode", mode_override,
                        "calibration parameter mode: A, AM or AMv");
    };

    CLI::App* ingest = app.add_subcommand("ingest-check",
                                          "parse and validate all inputs");
    add_common(ingest, true);
    CLI::App* build_maps = app.add_subcommand(
        "build-maps", "median-rasterize measurements into radio maps");
    add_common(build_maps, true);
    CLI::App* build_scene_cmd = app.add_subcommand(
        "build-scene", "tessellate and extrude building meshes (PLY)");
    add_common(build_scene_cmd, true);
    CLI::App* features = app.add_subcommand(
        "features", "write the per-cell feature layers");
    add_common(features, true);
    features->add_option("--params", params_path, "calibrated parameter JSON");
    CLI::App* trace_cmd = app.add_subcommand(
        "trace", "run the ray-launching solver over the scene");
    add_common(trace_cmd, true);
    trace_cmd->add_option("--params", params_path, "calibrated parameter JSON");
    CLI::App* calibrate_cmd = app.add_subcommand(
        "calibrate", "gradient calibration against measurements");
    add_common(calibrate_cmd, true);
    CLI::App* surr_train = app.add_subcommand(
        "surrogate-train", "train the per-cell surrogate regressor");
    add_common(surr_train, true);
    CLI::App* surr_cal = app.add_subcommand(
        "surrogate-calibrate", "fine-tune a trained surrogate on the scene");
    add_common(surr_cal, true);
    surr_cal->add_option("--model", model_path, "trained surrogate model JSON");
    CLI::App* metrics_cmd = app.add_subcommand(
        "metrics", "compare a predicted raster against a truth raster");
    add_common(metrics_cmd, true);
    metrics_cmd->add_option("--pred", pred_path, "predicted raster")->required();
    metrics_cmd->add_option("--truth", truth_path, "truth raster")->required();
    CLI::App* poweropt = app.add_subcommand(
        "poweropt-sweep", "transmit-power minimization over user counts");
    add_common(poweropt, true);
    CLI::App* handover = app.add_subcommand(
        "handover-sim", "online handover simulation over the radio maps");
    add_common(handover, true);
    handover->add_option("--gamma", gamma_override, "switching-penalty weight");
    handover->add_option("--users", users_override, "number of users");
    handover->add_option("--slots", slots_override, "horizon in slots");
    CLI::App* report = app.add_subcommand(
        "report", "collate prior outputs into plot-ready tables");
    add_common(report, true);
    CLI::App* make_demo = app.add_subcommand(
        "make-demo", "regenerate the bundled synthetic demo dataset");
    make_demo->add_option("--dir", demo_dir, "target directory");
    std::uint64_t demo_seed = 7;
    make_demo->add_option("--seed", demo_seed, "generation seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (make_demo->parsed())
            return cmd_make_demo(demo_dir, demo_seed);

        RunConfig cfg = load_config(config_path);
        if (!output_dir_override.empty())
            cfg.output_dir = output_dir_override;
        if (seed_override >= 0)
            cfg.seed = static_cast<std::uint64_t>(seed_override);
        cfg.antenna_filter = antenna_filter;
        cfg.threads_override = threads_override;
        cfg.rays_override = rays_override;
        cfg.mode_override = mode_override;

        if (ingest->parsed())
            return cmd_ingest_check(cfg);
        if (build_maps->parsed())
            return cmd_build_maps(cfg);
        if (build_scene_cmd->parsed())
            return cmd_build_scene(cfg);
        if (features->parsed())
            return cmd_features(cfg, params_path);
        if (trace_cmd->parsed())
            return cmd_trace(cfg, params_path);
        if (calibrate_cmd->parsed())
            return cmd_calibrate(cfg);
        if (surr_train->parsed())
            return cmd_surrogate(cfg, "", false);
        if (surr_cal->parsed())
            return cmd_surrogate(cfg, model_path, true);
        if (metrics_cmd->parsed())
            return cmd_metrics(cfg, pred_path, truth_path);
        if (poweropt->parsed())
            return cmd_poweropt_sweep(cfg);
        if (handover->parsed())
            return cmd_handover_sim(cfg, gamma_override, users_override,
                                    slots_override);
        if (report->parsed())
            return cmd_report(cfg);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}
