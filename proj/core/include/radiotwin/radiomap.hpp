#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "radiotwin/geo.hpp"
#include "radiotwin/grid.hpp"
#include "radiotwin/ingest.hpp"

namespace rtwin {

inline constexpr float kNoCoverageDbm = -140.0f;

struct RadioMap {
    Grid<float> values;         // dBm
    Grid<std::uint8_t> valid;   // 0/1 mask
    GeoTransform transform;
    double coverage_fraction = 0.0;

    explicit RadioMap(GeoTransform t)
        : values(), valid(), transform(std::move(t)) {}

    // coverage_fraction = valid cells / total cells.
    void update_coverage();
};

struct ExtentChoice {
    double max_distance_m = 512.0;  // one of 1280, 1024, 768, 512
    double resolution_m = 2.0;      // paired 5, 4, 3, 2
};

// Picks the smallest supported extent whose radius covers the 90th
// percentile of antenna-to-measurement ground distances (largest extent when
// even 1280 m does not). Throws std::invalid_argument on an empty list.
ExtentChoice classify_extent(const std::vector<MeasurementRecord>& records,
                             const AntennaConfig& antenna);

GeoTransform transform_for(const AntennaConfig& antenna, double resolution_m);

// Median-aggregates records into cells. Cells without records get value 0
// and valid = 0; out-of-grid records are ignored. Even-count medians are the
// midpoint of the two central values.
RadioMap rasterize_measurements(const std::vector<MeasurementRecord>& records,
                                const GeoTransform& transform);

// Deterministic 70/30-style split: |train| = round(train_fraction * n).
std::pair<std::vector<MeasurementRecord>, std::vector<MeasurementRecord>>
split_records(const std::vector<MeasurementRecord>& records,
              double train_fraction, std::uint64_t seed);

}  // namespace rtwin
