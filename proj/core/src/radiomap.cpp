#include "radiotwin/radiomap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "radiotwin/rng.hpp"

namespace rtwin {

void RadioMap::update_coverage() {
    std::size_t n = 0;
    for (auto v : valid.data())
        n += v;
    coverage_fraction =
        static_cast<double>(n) / (static_cast<double>(valid.rows()) * valid.cols());
}

namespace {
// Extent pairing: max distance -> cell resolution.
constexpr double kExtents[4] = {512.0, 768.0, 1024.0, 1280.0};
constexpr double kResolutions[4] = {2.0, 3.0, 4.0, 5.0};
}  // namespace

ExtentChoice classify_extent(const std::vector<MeasurementRecord>& records,
                             const AntennaConfig& antenna) {
    if (records.empty())
        throw std::invalid_argument("classify_extent: no records");

    // Ground (2D) distances via the local tangent plane.
    const GeoTransform ref(antenna.latitude, antenna.longitude, 1.0);
    std::vector<double> dist;
    dist.reserve(records.size());
    for (const auto& r : records) {
        const EnuPoint p = ref.latlon_to_enu(r.latitude, r.longitude);
        dist.push_back(std::hypot(p.x, p.y));
    }
    std::sort(dist.begin(), dist.end());

    // Nearest-rank 90th percentile.
    const std::size_t idx = static_cast<std::size_t>(
        std::ceil(0.9 * static_cast<double>(dist.size()))) - 1;
    const double p90 = dist[std::min(idx, dist.size() - 1)];

    for (int i = 0; i < 4; ++i) {
        if (p90 <= kExtents[i])
            return {kExtents[i], kResolutions[i]};
    }
    return {kExtents[3], kResolutions[3]};
}

GeoTransform transform_for(const AntennaConfig& antenna, double resolution_m) {
    return GeoTransform(antenna.latitude, antenna.longitude, resolution_m);
}

RadioMap rasterize_measurements(const std::vector<MeasurementRecord>& records,
                                const GeoTransform& transform) {
    RadioMap map(transform);
    const int n = transform.size();

    // Collect-then-sort-then-median keeps the result independent of record
    // order and of any batching of the input.
    Grid<std::vector<float>> buckets(n, n);
    for (const auto& r : records) {
        if (auto cell = transform.latlon_to_cell(r.latitude, r.longitude))
            buckets.at(cell->row, cell->col).push_back(static_cast<float>(r.rsrp_dbm));
    }

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            auto& b = buckets.at(r, c);
            if (b.empty()) {
                map.values.at(r, c) = 0.0f;
                map.valid.at(r, c) = 0;
                continue;
            }
            std::sort(b.begin(), b.end());
            const std::size_t m = b.size();
            const float median = (m % 2 == 1)
                                     ? b[m / 2]
                                     : 0.5f * (b[m / 2 - 1] + b[m / 2]);
            map.values.at(r, c) = median;
            map.valid.at(r, c) = 1;
        }
    }
    map.update_coverage();
    return map;
}

std::pair<std::vector<MeasurementRecord>, std::vector<MeasurementRecord>>
split_records(const std::vector<MeasurementRecord>& records, double train_fraction,
              std::uint64_t seed) {
    if (records.size() < 2)
        throw std::invalid_argument("split_records: need at least 2 records");

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    const std::size_t n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(records.size())));

    std::pair<std::vector<MeasurementRecord>, std::vector<MeasurementRecord>> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < n_train)
            out.first.push_back(records[order[i]]);
        else
            out.second.push_back(records[order[i]]);
    }
    return out;
}

}  // namespace rtwin
