#pragma once

#include <vector>

#include "radiotwin/radiomap.hpp"

namespace rtwin {

struct MetricReport {
    double rmse = 0.0;
    double mae = 0.0;
    double smape = 0.0;
    double pcc = 0.0;
    bool pcc_defined = true;  // false when either input is constant
    double ssim = 0.0;
    bool has_ssim = false;    // full-map only
    std::size_t n_points = 0;
};

// SMAPE denominator guard and SSIM stability constants; R = 100 dB is the
// [-140, -40] dynamic range.
inline constexpr double kSmapeEps = 1e-8;
inline constexpr double kSsimC1 = 1.0;   // (0.01 * 100)^2
inline constexpr double kSsimC2 = 9.0;   // (0.03 * 100)^2
inline constexpr int kSsimWindow = 8;

// All cells, SSIM via an 8x8 sliding window with uniform weighting.
MetricReport full_map_metrics(const Grid<float>& pred, const Grid<float>& truth);

// Metrics restricted to truth's valid mask; SSIM undefined on sparse sets.
// Pools across several (pred, truth) pairs when batched.
MetricReport sparse_map_metrics(const Grid<float>& pred, const RadioMap& truth);
MetricReport sparse_map_metrics_batch(
    const std::vector<const Grid<float>*>& preds,
    const std::vector<const RadioMap*>& truths);

// Minimum validation MAE over the recorded iteration trajectory.
double per_site_min_mae(const std::vector<double>& mae_trajectory);

}  // namespace rtwin
