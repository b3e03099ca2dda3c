#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtwin {

struct MeasurementRecord {
    std::string antenna_id;
    std::int64_t timestamp = 0;  // seconds since epoch
    double latitude = 0.0;       // degrees
    double longitude = 0.0;      // degrees
    double rsrp_dbm = 0.0;
    double sinr_db = 0.0;
    bool indoor = false;
    double accuracy_m = 0.0;
};

struct AntennaConfig {
    std::string antenna_id;
    double latitude = 0.0;
    double longitude = 0.0;
    double height_m = 30.0;       // z_Tx
    double frequency_hz = 2.3e9;
    double azimuth_rad = 0.0;
    double tilt_rad = 0.0;
    double tx_power_dbm = 43.0;
    double hardware_loss_db = 0.0;
    double bandwidth_hz = 20e6;
};

enum class Material { Concrete = 0, Brick = 1, Glass = 2 };
inline constexpr int kNumMaterials = 3;

const char* material_name(Material m);
Material material_from_name(const std::string& name);

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

struct Building {
    std::vector<LonLat> footprint;  // simple polygon, not closed
    double height_m = 0.0;
    Material material = Material::Concrete;
};

struct LandusePolygon {
    std::vector<LonLat> polygon;
    int land_class = 0;  // 0..23
};

struct SceneData {
    std::vector<Building> buildings;
    std::vector<LandusePolygon> landuse;
    std::vector<std::vector<LonLat>> roads;
};

// Raised for malformed input files; message names the file, line and field.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Measurement CSV columns, in order:
//   antenna_id, timestamp, latitude, longitude, rsrp_dbm, sinr_db,
//   indoor(0/1), accuracy_m
// An optional header line repeating these names is skipped.
std::vector<MeasurementRecord> parse_measurements(const std::string& path);
std::vector<MeasurementRecord> parse_measurements_text(const std::string& text,
                                                       const std::string& origin);
std::string serialize_measurements(const std::vector<MeasurementRecord>& records);

// Keeps records with accuracy <= max_accuracy and, when outdoor_only, the
// outdoor ones. Idempotent.
std::vector<MeasurementRecord> filter_measurements(
    const std::vector<MeasurementRecord>& records, double max_accuracy_m = 10.0,
    bool outdoor_only = true);

std::vector<AntennaConfig> parse_antennas(const std::string& path);
std::vector<AntennaConfig> parse_antennas_text(const std::string& text,
                                               const std::string& origin);
std::string serialize_antennas(const std::vector<AntennaConfig>& antennas);

SceneData parse_scene(const std::string& path);
SceneData parse_scene_text(const std::string& text, const std::string& origin);
std::string serialize_scene(const SceneData& scene);

}  // namespace rtwin
