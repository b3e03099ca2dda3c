#include "radiotwin/geo.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "radiotwin/grid.hpp"
#include "json.hpp"

namespace rtwin {

namespace {
constexpr double kEarthRadiusM = 6371000.0;
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr int kCentre = kGridSize / 2;
}  // namespace

GeoTransform::GeoTransform(double origin_lat_deg, double origin_lon_deg,
                           double resolution_m)
    : lat0_(origin_lat_deg), lon0_(origin_lon_deg), res_(resolution_m) {
    if (resolution_m <= 0.0)
        throw std::invalid_argument("GeoTransform: resolution must be positive");
    meters_per_deg_lat_ = kEarthRadiusM * kDegToRad;
    meters_per_deg_lon_ = kEarthRadiusM * kDegToRad * std::cos(lat0_ * kDegToRad);
}

int GeoTransform::size() const { return kGridSize; }

EnuPoint GeoTransform::latlon_to_enu(double lat_deg, double lon_deg) const {
    return {(lon_deg - lon0_) * meters_per_deg_lon_,
            (lat_deg - lat0_) * meters_per_deg_lat_};
}

std::pair<double, double> GeoTransform::enu_to_latlon(double x_east,
                                                      double y_north) const {
    return {lat0_ + y_north / meters_per_deg_lat_,
            lon0_ + x_east / meters_per_deg_lon_};
}

std::optional<CellIndex> GeoTransform::enu_to_cell(double x_east,
                                                   double y_north) const {
    // Nearest cell centre; cell (r, c) covers a res x res box around it.
    const int col = kCentre + static_cast<int>(std::floor(x_east / res_ + 0.5));
    const int row = kCentre - static_cast<int>(std::floor(y_north / res_ + 0.5));
    if (row < 0 || row >= kGridSize || col < 0 || col >= kGridSize)
        return std::nullopt;
    return CellIndex{row, col};
}

std::optional<CellIndex> GeoTransform::latlon_to_cell(double lat_deg,
                                                      double lon_deg) const {
    const EnuPoint p = latlon_to_enu(lat_deg, lon_deg);
    return enu_to_cell(p.x, p.y);
}

EnuPoint GeoTransform::cell_to_enu(int row, int col) const {
    if (row < 0 || row >= kGridSize || col < 0 || col >= kGridSize)
        throw std::out_of_range("GeoTransform::cell_to_enu: index out of range");
    return {(col - kCentre) * res_, (kCentre - row) * res_};
}

std::pair<double, double> GeoTransform::cell_to_latlon(int row, int col) const {
    const EnuPoint p = cell_to_enu(row, col);
    return enu_to_latlon(p.x, p.y);
}

std::string GeoTransform::to_json() const {
    nlohmann::json j;
    j["origin_lat"] = lat0_;
    j["origin_lon"] = lon0_;
    j["resolution_m"] = res_;
    j["width"] = kGridSize;
    j["height"] = kGridSize;
    return j.dump();
}

GeoTransform GeoTransform::from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    return GeoTransform(j.at("origin_lat").get<double>(),
                        j.at("origin_lon").get<double>(),
                        j.at("resolution_m").get<double>());
}

double haversine_m(double lat1_deg, double lon1_deg, double lat2_deg,
                   double lon2_deg) {
    const double p1 = lat1_deg * kDegToRad;
    const double p2 = lat2_deg * kDegToRad;
    const double dp = (lat2_deg - lat1_deg) * kDegToRad;
    const double dl = (lon2_deg - lon1_deg) * kDegToRad;
    const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                     std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(a));
}

}  // namespace rtwin
