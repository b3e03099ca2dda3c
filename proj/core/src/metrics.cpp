#include "radiotwin/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace rtwin {

namespace {

struct Accum {
    double se = 0.0;    // squared error
    double ae = 0.0;    // absolute error
    double smape = 0.0;
    double sum_p = 0.0;
    double sum_t = 0.0;
    std::size_t n = 0;

    void add(double p, double t) {
        const double d = p - t;
        se += d * d;
        ae += std::abs(d);
        smape += std::abs(d) / (std::abs(p) + std::abs(t) + kSmapeEps);
        sum_p += p;
        sum_t += t;
        ++n;
    }
};

struct PccAccum {
    double num = 0.0, dp = 0.0, dt = 0.0;
    void add(double p, double t, double mp, double mt) {
        num += (p - mp) * (t - mt);
        dp += (p - mp) * (p - mp);
        dt += (t - mt) * (t - mt);
    }
};

double ssim_sliding(const Grid<float>& x, const Grid<float>& y) {
    const int n = x.rows();
    const int w = kSsimWindow;
    double total = 0.0;
    std::size_t windows = 0;
    for (int r = 0; r + w <= n; ++r) {
        for (int c = 0; c + w <= n; ++c) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int i = 0; i < w; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double xv = x.at(r + i, c + j);
                    const double yv = y.at(r + i, c + j);
                    sx += xv;
                    sy += yv;
                    sxx += xv * xv;
                    syy += yv * yv;
                    sxy += xv * yv;
                }
            }
            const double m = w * w;
            const double mx = sx / m, my = sy / m;
            const double vx = sxx / m - mx * mx;
            const double vy = syy / m - my * my;
            const double cov = sxy / m - mx * my;
            total += (2 * mx * my + kSsimC1) * (2 * cov + kSsimC2) /
                     ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

}  // namespace

MetricReport full_map_metrics(const Grid<float>& pred, const Grid<float>& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::invalid_argument("full_map_metrics: shape mismatch");

    Accum a;
    for (std::size_t i = 0; i < pred.data().size(); ++i)
        a.add(pred.data()[i], truth.data()[i]);

    MetricReport rep;
    rep.n_points = a.n;
    rep.rmse = std::sqrt(a.se / a.n);
    rep.mae = a.ae / a.n;
    rep.smape = a.smape / a.n;

    const double mp = a.sum_p / a.n, mt = a.sum_t / a.n;
    PccAccum p;
    for (std::size_t i = 0; i < pred.data().size(); ++i)
        p.add(pred.data()[i], truth.data()[i], mp, mt);
    if (p.dp == 0.0 || p.dt == 0.0) {
        rep.pcc = std::nan("");
        rep.pcc_defined = false;
    } else {
        rep.pcc = p.num / (std::sqrt(p.dp) * std::sqrt(p.dt));
    }

    rep.ssim = ssim_sliding(pred, truth);
    rep.has_ssim = true;
    return rep;
}

MetricReport sparse_map_metrics(const Grid<float>& pred, const RadioMap& truth) {
    return sparse_map_metrics_batch({&pred}, {&truth});
}

MetricReport sparse_map_metrics_batch(
    const std::vector<const Grid<float>*>& preds,
    const std::vector<const RadioMap*>& truths) {
    if (preds.size() != truths.size() || preds.empty())
        throw std::invalid_argument("sparse_map_metrics_batch: bad batch");

    Accum a;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const auto& p = *preds[k];
        const auto& t = *truths[k];
        for (int r = 0; r < p.rows(); ++r)
            for (int c = 0; c < p.cols(); ++c)
                if (t.valid.at(r, c))
                    a.add(p.at(r, c), t.values.at(r, c));
    }
    if (a.n == 0)
        throw std::invalid_argument("sparse_map_metrics: empty valid set");

    MetricReport rep;
    rep.n_points = a.n;  // M pooled across the batch
    rep.rmse = std::sqrt(a.se / a.n);
    rep.mae = a.ae / a.n;
    rep.smape = a.smape / a.n;

    const double mp = a.sum_p / a.n, mt = a.sum_t / a.n;
    PccAccum pc;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const auto& p = *preds[k];
        const auto& t = *truths[k];
        for (int r = 0; r < p.rows(); ++r)
            for (int c = 0; c < p.cols(); ++c)
                if (t.valid.at(r, c))
                    pc.add(p.at(r, c), t.values.at(r, c), mp, mt);
    }
    if (pc.dp == 0.0 || pc.dt == 0.0) {
        rep.pcc = std::nan("");
        rep.pcc_defined = false;
    } else {
        rep.pcc = pc.num / (std::sqrt(pc.dp) * std::sqrt(pc.dt));
    }
    return rep;
}

double per_site_min_mae(const std::vector<double>& mae_trajectory) {
    if (mae_trajectory.empty())
        throw std::invalid_argument("per_site_min_mae: empty trajectory");
    double best = mae_trajectory.front();
    for (double v : mae_trajectory)
        best = std::min(best, v);
    return best;
}

}  // namespace rtwin
