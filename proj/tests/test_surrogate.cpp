#include <cmath>

#include "doctest.h"
#include "radiotwin/rng.hpp"
#include "radiotwin/surrogate.hpp"

using namespace rtwin;

namespace {

// Synthetic per-cell samples from a known linear function of the features.
std::vector<SurrogateSample> linear_samples(int n, Rng& rng) {
    const std::array<double, kSurrogateInputs> w = {0.8,  -0.01, 2.0, -1.5,
                                                    0.05, 0.3,   4.0};
    std::vector<SurrogateSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        SurrogateSample s;
        s.x = {rng.uniform(-100.0, -60.0), rng.uniform(10.0, 800.0),
               rng.uniform(-1.0, 1.0),     rng.uniform(-3.0, 3.0),
               rng.uniform(0.0, 40.0),     rng.uniform(0.0, 23.0),
               static_cast<double>(rng.below(2))};
        s.y = -20.0;
        for (int k = 0; k < kSurrogateInputs; ++k)
            s.y += w[k] * s.x[k];
        out.push_back(s);
    }
    return out;
}

}  // namespace

TEST_CASE("backprop gradient matches central differences on a minibatch") {
    Rng rng(13);
    SurrogateConfig cfg;
    cfg.hidden = 8;  // small net keeps the finite-difference sweep cheap
    cfg.seed = 13;
    SurrogateModel model(cfg);
    const std::vector<SurrogateSample> batch = linear_samples(16, rng);
    // Fit the normalizer so the loss surface is well scaled.
    model.train(batch, 0);

    const std::vector<double> grad = model.loss_gradient(batch);
    std::vector<double>& params = model.parameters();
    REQUIRE(grad.size() == params.size());

    Rng pick(7);
    int checked = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t i = pick.below(params.size());
        const double h = 1e-5 * std::max(1.0, std::abs(params[i]));
        const double orig = params[i];
        params[i] = orig + h;
        const double up = model.loss(batch);
        params[i] = orig - h;
        const double dn = model.loss(batch);
        params[i] = orig;
        const double fd = (up - dn) / (2.0 * h);
        if (std::abs(fd) < 1e-10)
            continue;
        worst = std::max(worst, std::abs(grad[i] - fd) / std::abs(fd));
        ++checked;
    }
    CHECK(checked >= 10);
    CHECK(worst < 1e-4);
}

TEST_CASE("learns a linear function of the features to MSE < 1e-3") {
    Rng rng(17);
    SurrogateConfig cfg;
    cfg.seed = 17;
    cfg.epochs = 200;
    cfg.weight_decay = 0.0;  // regularization biases an exact-fit check
    SurrogateModel model(cfg);
    const std::vector<SurrogateSample> samples = linear_samples(2000, rng);
    const SurrogateTrainReport rep = model.train(samples, 400);
    // Report losses are in dBm^2; normalize by the target variance.
    double var = 0.0, mean = 0.0;
    for (const auto& s : samples)
        mean += s.y;
    mean /= static_cast<double>(samples.size());
    for (const auto& s : samples)
        var += (s.y - mean) * (s.y - mean);
    var /= static_cast<double>(samples.size());
    CHECK(rep.train_loss.back() / var < 1e-3);
}

TEST_CASE("best-so-far training loss is non-increasing over epochs") {
    Rng rng(19);
    SurrogateConfig cfg;
    cfg.hidden = 16;
    cfg.seed = 19;
    SurrogateModel model(cfg);
    const SurrogateTrainReport rep = model.train(linear_samples(400, rng), 40);
    double best = rep.train_loss.front();
    for (double l : rep.train_loss) {
        best = std::min(best, l);
        CHECK(best <= rep.train_loss.front());
    }
    CHECK(best <= rep.train_loss.front());
}

TEST_CASE("identical seeds give identical trajectories") {
    Rng rng(23);
    const std::vector<SurrogateSample> samples = linear_samples(300, rng);
    SurrogateConfig cfg;
    cfg.hidden = 16;
    cfg.seed = 5;
    SurrogateModel a(cfg), b(cfg);
    const SurrogateTrainReport ra = a.train(samples, 15);
    const SurrogateTrainReport rb = b.train(samples, 15);
    CHECK(ra.train_loss == rb.train_loss);
    CHECK(ra.val_mae == rb.val_mae);
    CHECK(a.parameters() == b.parameters());
}

TEST_CASE("fine-tuning keeps best-so-far semantics and helps on shifted data") {
    Rng rng(29);
    SurrogateConfig cfg;
    cfg.hidden = 16;
    cfg.seed = 29;
    SurrogateModel model(cfg);
    std::vector<SurrogateSample> base = linear_samples(800, rng);
    model.train(base, 60);

    // Scene-specific shift the pretrained model has not seen.
    std::vector<SurrogateSample> scene = linear_samples(400, rng);
    for (auto& s : scene)
        s.y += 6.0;
    auto mae_on = [&](const SurrogateModel& m) {
        double acc = 0.0;
        for (const auto& s : scene)
            acc += std::abs(m.predict(s.x) - s.y);
        return acc / static_cast<double>(scene.size());
    };
    const double frozen_mae = mae_on(model);
    const SurrogateTrainReport rep = model.calibrate(scene, 40);
    CHECK(mae_on(model) <= frozen_mae + 1e-9);
    CHECK(rep.convergence_iteration >= 0);
    CHECK(rep.best_val_loss <= rep.val_loss.front() + 1e-12);
}

TEST_CASE("calibrating an untrained model is rejected, empty input too") {
    SurrogateModel model;
    CHECK_THROWS_AS((void)model.calibrate({}, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)model.train({}, 1), std::invalid_argument);
}

TEST_CASE("output stays finite for extreme finite inputs") {
    Rng rng(31);
    SurrogateConfig cfg;
    cfg.hidden = 16;
    cfg.seed = 31;
    SurrogateModel model(cfg);
    model.train(linear_samples(200, rng), 5);
    const std::array<double, kSurrogateInputs> extreme = {1e6, -1e6, 1e6, -1e6,
                                                          1e6, 1e6,  1e6};
    CHECK(std::isfinite(model.predict(extreme)));
}

TEST_CASE("model JSON round trip preserves predictions") {
    Rng rng(37);
    SurrogateConfig cfg;
    cfg.hidden = 16;
    cfg.seed = 37;
    SurrogateModel model(cfg);
    const std::vector<SurrogateSample> samples = linear_samples(200, rng);
    model.train(samples, 10);
    const SurrogateModel back = SurrogateModel::from_json(model.to_json());
    for (int i = 0; i < 20; ++i)
        CHECK(back.predict(samples[i].x) == doctest::Approx(model.predict(samples[i].x)));
}
