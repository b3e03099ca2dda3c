#pragma once

#include <optional>
#include <string>
#include <utility>

namespace rtwin {

struct CellIndex {
    int row = 0;
    int col = 0;
    bool operator==(const CellIndex&) const = default;
};

struct EnuPoint {
    double x = 0.0;  // east, meters
    double y = 0.0;  // north, meters
};

// Affine mapping between geographic coordinates and the 512x512 raster
// centred on one antenna. Local ENU tangent-plane approximation: adequate
// for grid radii <= 1.28 km, no projection library needed. Row 0 is the
// northernmost row; the antenna sits at the centre of cell (256, 256).
class GeoTransform {
public:
    GeoTransform(double origin_lat_deg, double origin_lon_deg, double resolution_m);

    double origin_lat() const { return lat0_; }
    double origin_lon() const { return lon0_; }
    double resolution() const { return res_; }
    int size() const;

    EnuPoint latlon_to_enu(double lat_deg, double lon_deg) const;
    std::pair<double, double> enu_to_latlon(double x_east, double y_north) const;

    // Cell containing the point, or nullopt when outside the grid.
    std::optional<CellIndex> latlon_to_cell(double lat_deg, double lon_deg) const;
    std::optional<CellIndex> enu_to_cell(double x_east, double y_north) const;

    // Centre of the cell. Throws std::out_of_range for bad indices.
    std::pair<double, double> cell_to_latlon(int row, int col) const;
    EnuPoint cell_to_enu(int row, int col) const;

    std::string to_json() const;
    static GeoTransform from_json(const std::string& json_text);

private:
    double lat0_;
    double lon0_;
    double res_;
    double meters_per_deg_lat_;
    double meters_per_deg_lon_;
};

// Great-circle distance on the reference sphere, meters. Used by tests to
// bound the distortion of the tangent-plane approximation.
double haversine_m(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

}  // namespace rtwin
