#include "radiotwin/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "radiotwin/optim.hpp"
#include "radiotwin/rng.hpp"
#include "json.hpp"

namespace rtwin {

namespace {

constexpr double kLeakySlope = 0.01;

double leaky(double v) { return v > 0.0 ? v : kLeakySlope * v; }
double leaky_grad(double v) { return v > 0.0 ? 1.0 : kLeakySlope; }

// Flat layout: W1[h][in], b1[h], W2[h][h], b2[h], W3[h], b3.
std::size_t param_count(int h) {
    return static_cast<std::size_t>(h) * kSurrogateInputs + h +
           static_cast<std::size_t>(h) * h + h + h + 1;
}

}  // namespace

std::vector<SurrogateSample> collect_samples(const FeatureStack& features,
                                             const RadioMap& truth) {
    std::vector<SurrogateSample> out;
    for (int r = 0; r < truth.valid.rows(); ++r) {
        for (int c = 0; c < truth.valid.cols(); ++c) {
            if (!truth.valid.at(r, c))
                continue;
            SurrogateSample s;
            s.x = {static_cast<double>(features.channel.at(r, c)),
                   static_cast<double>(features.distance.at(r, c)),
                   static_cast<double>(features.theta.at(r, c)),
                   static_cast<double>(features.phi.at(r, c)),
                   static_cast<double>(features.height.at(r, c)),
                   static_cast<double>(features.landuse.at(r, c)),
                   static_cast<double>(features.road.at(r, c))};
            s.y = truth.values.at(r, c);
            out.push_back(s);
        }
    }
    return out;
}

SurrogateModel::SurrogateModel(const SurrogateConfig& config) : config_(config) {
    feat_scale_.fill(1.0);
    init_weights();
}

void SurrogateModel::init_weights() {
    const int h = config_.hidden;
    params_.assign(param_count(h), 0.0);
    Rng rng(config_.seed ^ 0x50647e11ULL);
    std::size_t k = 0;
    auto he = [&](int fan_in, std::size_t n_w, std::size_t n_b) {
        const double bound = std::sqrt(6.0 / fan_in);
        for (std::size_t i = 0; i < n_w; ++i)
            params_[k++] = rng.uniform(-bound, bound);
        k += n_b;  // biases stay zero
    };
    he(kSurrogateInputs, static_cast<std::size_t>(h) * kSurrogateInputs, h);
    he(h, static_cast<std::size_t>(h) * h, h);
    he(h, h, 1);
}

void SurrogateModel::fit_normalizer(const std::vector<SurrogateSample>& samples) {
    const double n = static_cast<double>(samples.size());
    std::array<double, kSurrogateInputs> mean{}, sq{};
    double ym = 0.0, ysq = 0.0;
    for (const auto& s : samples) {
        for (int i = 0; i < kSurrogateInputs; ++i) {
            mean[i] += s.x[i];
            sq[i] += s.x[i] * s.x[i];
        }
        ym += s.y;
        ysq += s.y * s.y;
    }
    for (int i = 0; i < kSurrogateInputs; ++i) {
        feat_mean_[i] = mean[i] / n;
        const double var = std::max(0.0, sq[i] / n - feat_mean_[i] * feat_mean_[i]);
        feat_scale_[i] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    y_mean_ = ym / n;
    const double yvar = std::max(0.0, ysq / n - y_mean_ * y_mean_);
    y_scale_ = yvar > 1e-12 ? std::sqrt(yvar) : 1.0;
    normalizer_fitted_ = true;
}

double SurrogateModel::forward(const std::array<double, kSurrogateInputs>& x,
                               std::vector<double>* h1, std::vector<double>* h2) const {
    const int h = config_.hidden;
    std::array<double, kSurrogateInputs> z;
    for (int i = 0; i < kSurrogateInputs; ++i)
        z[i] = (x[i] - feat_mean_[i]) / feat_scale_[i];

    const double* w1 = params_.data();
    const double* b1 = w1 + static_cast<std::size_t>(h) * kSurrogateInputs;
    const double* w2 = b1 + h;
    const double* b2 = w2 + static_cast<std::size_t>(h) * h;
    const double* w3 = b2 + h;
    const double b3 = w3[h];

    std::vector<double> a1(h), a2(h);
    for (int j = 0; j < h; ++j) {
        double acc = b1[j];
        for (int i = 0; i < kSurrogateInputs; ++i)
            acc += w1[static_cast<std::size_t>(j) * kSurrogateInputs + i] * z[i];
        a1[j] = acc;
    }
    for (int j = 0; j < h; ++j) {
        double acc = b2[j];
        for (int i = 0; i < h; ++i)
            acc += w2[static_cast<std::size_t>(j) * h + i] * leaky(a1[i]);
        a2[j] = acc;
    }
    double out = b3;
    for (int j = 0; j < h; ++j)
        out += w3[j] * leaky(a2[j]);
    if (h1)
        *h1 = std::move(a1);
    if (h2)
        *h2 = std::move(a2);
    return out;
}

double SurrogateModel::predict(const std::array<double, kSurrogateInputs>& x) const {
    return y_mean_ + y_scale_ * forward(x, nullptr, nullptr);
}

Grid<float> SurrogateModel::predict_map(const FeatureStack& f) const {
    Grid<float> out(f.channel.rows(), f.channel.cols());
    for (int r = 0; r < out.rows(); ++r) {
        for (int c = 0; c < out.cols(); ++c) {
            const std::array<double, kSurrogateInputs> x = {
                static_cast<double>(f.channel.at(r, c)),
                static_cast<double>(f.distance.at(r, c)),
                static_cast<double>(f.theta.at(r, c)),
                static_cast<double>(f.phi.at(r, c)),
                static_cast<double>(f.height.at(r, c)),
                static_cast<double>(f.landuse.at(r, c)),
                static_cast<double>(f.road.at(r, c))};
            out.at(r, c) = static_cast<float>(predict(x));
        }
    }
    return out;
}

double SurrogateModel::loss(const std::vector<SurrogateSample>& batch) const {
    if (batch.empty())
        throw std::invalid_argument("surrogate loss: empty batch");
    double acc = 0.0;
    for (const auto& s : batch) {
        const double e = predict(s.x) - s.y;
        acc += e * e;
    }
    return acc / static_cast<double>(batch.size());
}

std::vector<double> SurrogateModel::loss_gradient(
    const std::vector<SurrogateSample>& batch) const {
    if (batch.empty())
        throw std::invalid_argument("surrogate loss_gradient: empty batch");
    const int h = config_.hidden;
    std::vector<double> grad(params_.size(), 0.0);

    const double* w2 = params_.data() + static_cast<std::size_t>(h) * kSurrogateInputs + h;
    const double* w3 = w2 + static_cast<std::size_t>(h) * h + h;
    double* gw1 = grad.data();
    double* gb1 = gw1 + static_cast<std::size_t>(h) * kSurrogateInputs;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + static_cast<std::size_t>(h) * h;
    double* gw3 = gb2 + h;
    double* gb3 = gw3 + h;

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::vector<double> a1, a2, d1(h), d2(h);
    for (const auto& s : batch) {
        const double out = forward(s.x, &a1, &a2);
        const double pred = y_mean_ + y_scale_ * out;
        // d(MSE)/d(out) with prediction denormalized to dBm.
        const double dout = 2.0 * (pred - s.y) * y_scale_ * inv_n;

        std::array<double, kSurrogateInputs> z;
        for (int i = 0; i < kSurrogateInputs; ++i)
            z[i] = (s.x[i] - feat_mean_[i]) / feat_scale_[i];

        for (int j = 0; j < h; ++j) {
            gw3[j] += dout * leaky(a2[j]);
            d2[j] = dout * w3[j] * leaky_grad(a2[j]);
        }
        *gb3 += dout;

        std::fill(d1.begin(), d1.end(), 0.0);
        for (int j = 0; j < h; ++j) {
            gb2[j] += d2[j];
            const double* w2row = w2 + static_cast<std::size_t>(j) * h;
            double* gw2row = gw2 + static_cast<std::size_t>(j) * h;
            for (int i = 0; i < h; ++i) {
                gw2row[i] += d2[j] * leaky(a1[i]);
                d1[i] += d2[j] * w2row[i];
            }
        }
        for (int j = 0; j < h; ++j) {
            const double dj = d1[j] * leaky_grad(a1[j]);
            gb1[j] += dj;
            double* gw1row = gw1 + static_cast<std::size_t>(j) * kSurrogateInputs;
            for (int i = 0; i < kSurrogateInputs; ++i)
                gw1row[i] += dj * z[i];
        }
    }
    return grad;
}

SurrogateTrainReport SurrogateModel::run_training(
    const std::vector<SurrogateSample>& samples, int epochs, bool keep_best) {
    if (samples.empty())
        throw std::invalid_argument("surrogate training: no valid cells");
    if (epochs < 0)
        epochs = config_.epochs;
    if (!normalizer_fitted_)
        fit_normalizer(samples);

    // Deterministic holdout split for the plateau schedule and best snapshot.
    Rng rng(config_.seed + 0x9e37u + 31 * train_calls_);
    ++train_calls_;
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::size_t n_hold = static_cast<std::size_t>(
        std::llround(config_.holdout_fraction * static_cast<double>(samples.size())));
    if (samples.size() > 1 && n_hold == 0)
        n_hold = 1;
    if (n_hold >= samples.size())
        n_hold = samples.size() - 1;
    std::vector<SurrogateSample> train, hold;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_hold ? hold : train).push_back(samples[order[i]]);
    if (hold.empty())
        hold = train;

    AdamW opt(params_.size(), config_.lr, config_.weight_decay);
    SurrogateTrainReport report;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = params_;
    int since_improve = 0;
    double lr = config_.lr;

    const int batch = std::max(1, config_.batch_size);
    std::vector<SurrogateSample> mini;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(train);
        for (std::size_t start = 0; start < train.size();
             start += static_cast<std::size_t>(batch)) {
            const std::size_t end =
                std::min(train.size(), start + static_cast<std::size_t>(batch));
            mini.assign(train.begin() + static_cast<long>(start),
                        train.begin() + static_cast<long>(end));
            const std::vector<double> g = loss_gradient(mini);
            opt.step(params_, g);
        }

        const double tl = loss(train);
        const double vl = loss(hold);
        double vmae = 0.0;
        for (const auto& s : hold)
            vmae += std::abs(predict(s.x) - s.y);
        vmae /= static_cast<double>(hold.size());
        report.train_loss.push_back(tl);
        report.val_loss.push_back(vl);
        report.val_mae.push_back(vmae);

        if (vl < best_val) {
            best_val = vl;
            best_params = params_;
            report.best_epoch = epoch;
            report.convergence_iteration = epoch;
            since_improve = 0;
        } else if (++since_improve >= config_.plateau_patience) {
            lr *= config_.plateau_factor;
            opt.set_lr(lr);
            since_improve = 0;
        }
    }
    report.best_val_loss = best_val;
    if (keep_best)
        params_ = best_params;
    return report;
}

SurrogateTrainReport SurrogateModel::train(const std::vector<SurrogateSample>& samples,
                                           int epochs) {
    return run_training(samples, epochs, /*keep_best=*/false);
}

SurrogateTrainReport SurrogateModel::calibrate(
    const std::vector<SurrogateSample>& samples, int epochs) {
    if (!normalizer_fitted_)
        throw std::invalid_argument("surrogate calibrate: model is untrained");
    return run_training(samples, epochs, /*keep_best=*/true);
}

std::string SurrogateModel::to_json() const {
    nlohmann::json j;
    j["hidden"] = config_.hidden;
    j["lr"] = config_.lr;
    j["weight_decay"] = config_.weight_decay;
    j["plateau_factor"] = config_.plateau_factor;
    j["plateau_patience"] = config_.plateau_patience;
    j["epochs"] = config_.epochs;
    j["batch_size"] = config_.batch_size;
    j["holdout_fraction"] = config_.holdout_fraction;
    j["seed"] = config_.seed;
    j["params"] = params_;
    j["feat_mean"] = feat_mean_;
    j["feat_scale"] = feat_scale_;
    j["y_mean"] = y_mean_;
    j["y_scale"] = y_scale_;
    j["normalizer_fitted"] = normalizer_fitted_;
    j["train_calls"] = train_calls_;
    return j.dump();
}

SurrogateModel SurrogateModel::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    SurrogateConfig cfg;
    cfg.hidden = j.at("hidden").get<int>();
    cfg.lr = j.at("lr").get<double>();
    cfg.weight_decay = j.at("weight_decay").get<double>();
    cfg.plateau_factor = j.at("plateau_factor").get<double>();
    cfg.plateau_patience = j.at("plateau_patience").get<int>();
    cfg.epochs = j.at("epochs").get<int>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.holdout_fraction = j.at("holdout_fraction").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    SurrogateModel m(cfg);
    m.params_ = j.at("params").get<std::vector<double>>();
    if (m.params_.size() != param_count(cfg.hidden))
        throw std::invalid_argument("surrogate model: parameter count mismatch");
    m.feat_mean_ = j.at("feat_mean").get<std::array<double, kSurrogateInputs>>();
    m.feat_scale_ = j.at("feat_scale").get<std::array<double, kSurrogateInputs>>();
    m.y_mean_ = j.at("y_mean").get<double>();
    m.y_scale_ = j.at("y_scale").get<double>();
    m.normalizer_fitted_ = j.at("normalizer_fitted").get<bool>();
    m.train_calls_ = j.at("train_calls").get<std::uint64_t>();
    return m;
}

}  // namespace rtwin
