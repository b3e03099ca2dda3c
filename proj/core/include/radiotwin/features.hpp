#pragma once

#include <optional>

#include "radiotwin/antenna.hpp"
#include "radiotwin/geo.hpp"
#include "radiotwin/grid.hpp"
#include "radiotwin/ingest.hpp"
#include "radiotwin/mesh.hpp"

namespace rtwin {

inline constexpr double kRxHeightM = 1.5;
inline constexpr double kSpeedOfLight = 299792458.0;

// Per-cell geometric and GIS layers feeding the surrogate model.
struct FeatureStack {
    Grid<float> distance;   // D, meters (3D, receiver plane at 1.5 m)
    Grid<float> phi;        // azimuth relative to boresight, (-pi, pi]
    Grid<float> theta;      // elevation relative to boresight, [-pi/2, pi/2]
    Grid<float> channel;    // L, predicted received power, dBm
    Grid<float> height;     // building height, m (0 outside buildings)
    Grid<float> landuse;    // class code 0..23
    Grid<std::uint8_t> road;
    GeoTransform transform;

    explicit FeatureStack(GeoTransform t) : transform(std::move(t)) {}
};

struct GeometryLayers {
    Grid<float> distance;
    Grid<float> phi;
    Grid<float> theta;
};

// 3D distance and boresight-relative angles per cell. The horizontal frame
// is rotated by the antenna azimuth, then tilted about the y-axis, so that
// phi = theta = 0 on boresight.
GeometryLayers compute_geometry(const GeoTransform& transform,
                                const AntennaConfig& antenna);

double fspl_db(double distance_m, double frequency_hz);

// L = P_Tx + G(phi, theta) - FSPL(D, f) - L_H, stored as received power in
// dBm. Pass nullopt for an isotropic element (G = 0 dB).
Grid<float> compute_channel_layer(const GeometryLayers& geom,
                                  const std::optional<AntennaParams>& pattern,
                                  double frequency_hz, double tx_power_dbm,
                                  double hardware_loss_db);

struct GisLayers {
    Grid<float> height;
    Grid<float> landuse;
    Grid<std::uint8_t> road;
};

// Point-in-polygon at cell centres for heights and land use; roads rasterized
// one cell wide along each polyline.
GisLayers rasterize_gis(const SceneData& scene, const GeoTransform& transform,
                        const AntennaConfig& antenna);

FeatureStack build_features(const SceneData& scene, const AntennaConfig& antenna,
                            const GeoTransform& transform,
                            const std::optional<AntennaParams>& pattern);

}  // namespace rtwin
