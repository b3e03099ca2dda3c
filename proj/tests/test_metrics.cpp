#include <cmath>

#include "doctest.h"
#include "radiotwin/metrics.hpp"
#include "radiotwin/rng.hpp"

using namespace rtwin;

namespace {

Grid<float> random_map(Rng& rng, int n = 32) {
    Grid<float> g(n, n);
    for (float& v : g.data())
        v = static_cast<float>(rng.uniform(-120.0, -60.0));
    return g;
}

GeoTransform dummy_transform() { return GeoTransform(48.0, 11.0, 5.0); }

}  // namespace

TEST_CASE("identical maps score zero error and SSIM 1") {
    Rng rng(2);
    const Grid<float> m = random_map(rng);
    const MetricReport r = full_map_metrics(m, m);
    CHECK(r.rmse == doctest::Approx(0.0));
    CHECK(r.mae == doctest::Approx(0.0));
    CHECK(r.smape == doctest::Approx(0.0));
    CHECK(r.has_ssim);
    CHECK(r.ssim == doctest::Approx(1.0));
}

TEST_CASE("uniform +2 offset: mae 2, rmse 2, pcc 1") {
    Rng rng(4);
    const Grid<float> truth = random_map(rng);
    Grid<float> pred = truth;
    for (float& v : pred.data())
        v += 2.0f;
    const MetricReport r = full_map_metrics(pred, truth);
    CHECK(r.mae == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(r.rmse == doctest::Approx(2.0).epsilon(1e-6));
    REQUIRE(r.pcc_defined);
    CHECK(r.pcc == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("hand-computed 2x2 case: rmse 5, mae 2.5") {
    Grid<float> truth(2, 2), pred(2, 2);
    truth.data() = {0, 10, 20, 30};
    pred.data() = {0, 10, 20, 40};
    const MetricReport r = full_map_metrics(pred, truth);
    CHECK(r.rmse == doctest::Approx(5.0));
    CHECK(r.mae == doctest::Approx(2.5));
}

TEST_CASE("rmse is translation invariant, smape is not") {
    Rng rng(6);
    const Grid<float> truth = random_map(rng);
    const Grid<float> pred = random_map(rng);
    Grid<float> truth_c = truth, pred_c = pred;
    for (float& v : truth_c.data())
        v += 30.0f;
    for (float& v : pred_c.data())
        v += 30.0f;
    const MetricReport a = full_map_metrics(pred, truth);
    const MetricReport b = full_map_metrics(pred_c, truth_c);
    CHECK(a.rmse == doctest::Approx(b.rmse).epsilon(1e-5));
    CHECK(a.mae == doctest::Approx(b.mae).epsilon(1e-5));

    // Concrete SMAPE counterexample.
    Grid<float> t1(1, 1), p1(1, 1), t2(1, 1), p2(1, 1);
    t1.data() = {1.0f};
    p1.data() = {2.0f};
    t2.data() = {101.0f};
    p2.data() = {102.0f};
    CHECK(full_map_metrics(p1, t1).smape != full_map_metrics(p2, t2).smape);
}

TEST_CASE("PCC on a constant input is flagged undefined") {
    Grid<float> truth(4, 4, -80.0f);
    Rng rng(8);
    const Grid<float> pred = random_map(rng, 4);
    CHECK_FALSE(full_map_metrics(pred, truth).pcc_defined);
}

TEST_CASE("SSIM(x, x) = 1 for non-constant x and degrades with noise") {
    Rng rng(10);
    const Grid<float> x = random_map(rng, 64);
    CHECK(full_map_metrics(x, x).ssim == doctest::Approx(1.0));
    Grid<float> noisy = x;
    for (float& v : noisy.data())
        v += static_cast<float>(rng.gaussian(0.0, 10.0));
    CHECK(full_map_metrics(noisy, x).ssim < 0.999);
}

TEST_CASE("sparse metrics with a full mask match the full-map values") {
    Rng rng(12);
    const Grid<float> pred = random_map(rng, 24);
    RadioMap truth(dummy_transform());
    truth.values = random_map(rng, 24);
    truth.valid = Grid<std::uint8_t>(24, 24, 1);
    const MetricReport full = full_map_metrics(pred, truth.values);
    const MetricReport sparse = sparse_map_metrics(pred, truth);
    CHECK(sparse.rmse == doctest::Approx(full.rmse).epsilon(1e-9));
    CHECK(sparse.mae == doctest::Approx(full.mae).epsilon(1e-9));
    CHECK(sparse.smape == doctest::Approx(full.smape).epsilon(1e-9));
    CHECK(sparse.pcc == doctest::Approx(full.pcc).epsilon(1e-9));
    CHECK_FALSE(sparse.has_ssim);
}

TEST_CASE("single valid cell with error 4: rmse = mae = 4, pcc undefined") {
    RadioMap truth(dummy_transform());
    truth.values = Grid<float>(8, 8, 0.0f);
    truth.valid = Grid<std::uint8_t>(8, 8, 0);
    truth.values.at(3, 3) = -80.0f;
    truth.valid.at(3, 3) = 1;
    Grid<float> pred(8, 8, 0.0f);
    pred.at(3, 3) = -76.0f;
    const MetricReport r = sparse_map_metrics(pred, truth);
    CHECK(r.rmse == doctest::Approx(4.0));
    CHECK(r.mae == doctest::Approx(4.0));
    CHECK_FALSE(r.pcc_defined);
    CHECK(r.n_points == 1);
}

TEST_CASE("batched sparse metrics pool the valid count across scenes") {
    // Scene 1: one valid cell, error 2. Scene 2: two valid cells, errors 4, 6.
    // Pooled MAE = (2 + 4 + 6) / 3 = 4; pooled RMSE = sqrt((4+16+36)/3).
    RadioMap t1(dummy_transform()), t2(dummy_transform());
    t1.values = Grid<float>(4, 4, 0.0f);
    t1.valid = Grid<std::uint8_t>(4, 4, 0);
    t1.values.at(0, 0) = -90.0f;
    t1.valid.at(0, 0) = 1;
    Grid<float> p1(4, 4, 0.0f);
    p1.at(0, 0) = -88.0f;

    t2.values = Grid<float>(4, 4, 0.0f);
    t2.valid = Grid<std::uint8_t>(4, 4, 0);
    t2.values.at(1, 1) = -70.0f;
    t2.valid.at(1, 1) = 1;
    t2.values.at(2, 2) = -60.0f;
    t2.valid.at(2, 2) = 1;
    Grid<float> p2(4, 4, 0.0f);
    p2.at(1, 1) = -74.0f;
    p2.at(2, 2) = -54.0f;

    const MetricReport r =
        sparse_map_metrics_batch({&p1, &p2}, {&t1, &t2});
    CHECK(r.n_points == 3);
    CHECK(r.mae == doctest::Approx(4.0));
    CHECK(r.rmse == doctest::Approx(std::sqrt((4.0 + 16.0 + 36.0) / 3.0)));
}

TEST_CASE("sparse metrics reject an empty valid set") {
    RadioMap truth(dummy_transform());
    truth.values = Grid<float>(4, 4, 0.0f);
    truth.valid = Grid<std::uint8_t>(4, 4, 0);
    const Grid<float> pred(4, 4, 0.0f);
    CHECK_THROWS_AS((void)sparse_map_metrics(pred, truth), std::invalid_argument);
}

TEST_CASE("rmse >= mae on random inputs") {
    Rng rng(14);
    for (int i = 0; i < 10; ++i) {
        const Grid<float> a = random_map(rng, 16);
        const Grid<float> b = random_map(rng, 16);
        const MetricReport r = full_map_metrics(a, b);
        CHECK(r.rmse >= r.mae);
        CHECK(r.smape >= 0.0);
        CHECK(r.smape <= 1.0);
    }
}

TEST_CASE("per-site minimum MAE") {
    CHECK(per_site_min_mae({9.0, 7.0, 8.0}) == 7.0);
    CHECK(per_site_min_mae({5.0, 4.0, 3.0}) == 3.0);  // monotone -> last
    std::vector<double> traj = {6.0, 5.5};
    const double before = per_site_min_mae(traj);
    traj.push_back(9.0);
    CHECK(per_site_min_mae(traj) <= before);
    CHECK_THROWS_AS((void)per_site_min_mae({}), std::invalid_argument);
}
