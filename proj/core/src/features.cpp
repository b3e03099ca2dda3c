#include "radiotwin/features.hpp"

#include <cmath>
#include <numbers>

namespace rtwin {

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<Vec2> ring_to_enu(const std::vector<LonLat>& ring,
                              const GeoTransform& t) {
    std::vector<Vec2> out;
    out.reserve(ring.size());
    for (const auto& p : ring) {
        const EnuPoint e = t.latlon_to_enu(p.lat, p.lon);
        out.push_back({e.x, e.y});
    }
    return out;
}
}  // namespace

GeometryLayers compute_geometry(const GeoTransform& transform,
                                const AntennaConfig& antenna) {
    GeometryLayers g;
    const int n = transform.size();
    const double dz = kRxHeightM - antenna.height_m;
    const double ca = std::cos(antenna.azimuth_rad);
    const double sa = std::sin(antenna.azimuth_rad);
    const double ct = std::cos(antenna.tilt_rad);
    const double st = std::sin(antenna.tilt_rad);

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const EnuPoint p = transform.cell_to_enu(r, c);
            const double d = std::sqrt(p.x * p.x + p.y * p.y + dz * dz);

            // Align +x with the boresight: horizontal rotation by the
            // azimuth, then tilt about the y-axis (positive = downtilt).
            const double x1 = ca * p.x + sa * p.y;
            const double y1 = -sa * p.x + ca * p.y;
            const double x2 = ct * x1 - st * dz;
            const double z2 = st * x1 + ct * dz;

            g.distance.at(r, c) = static_cast<float>(d);
            g.phi.at(r, c) = static_cast<float>(std::atan2(y1, x2));
            g.theta.at(r, c) = static_cast<float>(std::asin(z2 / d));
        }
    }
    return g;
}

double fspl_db(double distance_m, double frequency_hz) {
    return 20.0 * std::log10(4.0 * kPi * distance_m * frequency_hz / kSpeedOfLight);
}

Grid<float> compute_channel_layer(const GeometryLayers& geom,
                                  const std::optional<AntennaParams>& pattern,
                                  double frequency_hz, double tx_power_dbm,
                                  double hardware_loss_db) {
    Grid<float> layer;
    const int n = geom.distance.rows();
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double d = geom.distance.at(r, c);
            double gain = 0.0;
            if (pattern) {
                // Pattern equations take the zenith-style angle; our theta
                // layer is elevation, so theta_zenith = pi/2 - elevation.
                // theta0 then steers the beam in elevation.
                gain = pattern_gain(*pattern, kPi / 2.0 - geom.theta.at(r, c),
                                    geom.phi.at(r, c));
            }
            layer.at(r, c) = static_cast<float>(
                tx_power_dbm + gain - fspl_db(d, frequency_hz) - hardware_loss_db);
        }
    }
    return layer;
}

GisLayers rasterize_gis(const SceneData& scene, const GeoTransform& transform,
                        const AntennaConfig& /*antenna*/) {
    GisLayers out;
    const int n = transform.size();
    const double res = transform.resolution();

    std::vector<std::pair<std::vector<Vec2>, double>> buildings;
    for (const auto& b : scene.buildings)
        buildings.push_back({ring_to_enu(b.footprint, transform), b.height_m});
    std::vector<std::pair<std::vector<Vec2>, int>> landuse;
    for (const auto& l : scene.landuse)
        landuse.push_back({ring_to_enu(l.polygon, transform), l.land_class});

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const EnuPoint e = transform.cell_to_enu(r, c);
            const Vec2 p{e.x, e.y};
            for (const auto& [ring, h] : buildings) {
                if (point_in_polygon(p, ring)) {
                    out.height.at(r, c) = static_cast<float>(h);
                    break;
                }
            }
            for (const auto& [ring, cls] : landuse) {
                if (point_in_polygon(p, ring)) {
                    out.landuse.at(r, c) = static_cast<float>(cls);
                    break;
                }
            }
        }
    }

    // Roads: march each segment at quarter-cell steps and mark the
    // containing cell; one cell of width total.
    for (const auto& road : scene.roads) {
        for (std::size_t i = 0; i + 1 < road.size(); ++i) {
            const EnuPoint a = transform.latlon_to_enu(road[i].lat, road[i].lon);
            const EnuPoint b =
                transform.latlon_to_enu(road[i + 1].lat, road[i + 1].lon);
            const double len = std::hypot(b.x - a.x, b.y - a.y);
            const int steps = std::max(1, static_cast<int>(len / (res / 4.0)));
            for (int s = 0; s <= steps; ++s) {
                const double t = static_cast<double>(s) / steps;
                const double x = a.x + t * (b.x - a.x);
                const double y = a.y + t * (b.y - a.y);
                if (auto cell = transform.enu_to_cell(x, y))
                    out.road.at(cell->row, cell->col) = 1;
            }
        }
    }
    return out;
}

FeatureStack build_features(const SceneData& scene, const AntennaConfig& antenna,
                            const GeoTransform& transform,
                            const std::optional<AntennaParams>& pattern) {
    FeatureStack fs(transform);
    GeometryLayers geom = compute_geometry(transform, antenna);
    fs.channel = compute_channel_layer(geom, pattern, antenna.frequency_hz,
                                       antenna.tx_power_dbm,
                                       antenna.hardware_loss_db);
    fs.distance = std::move(geom.distance);
    fs.phi = std::move(geom.phi);
    fs.theta = std::move(geom.theta);
    GisLayers gis = rasterize_gis(scene, transform, antenna);
    fs.height = std::move(gis.height);
    fs.landuse = std::move(gis.landuse);
    fs.road = std::move(gis.road);
    return fs;
}

}  // namespace rtwin
