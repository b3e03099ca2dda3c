#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "radiotwin/features.hpp"
#include "radiotwin/radiomap.hpp"

namespace rtwin {

inline constexpr int kSurrogateInputs = 7;  // L, D, theta, phi, height, landuse, road

struct SurrogateSample {
    std::array<double, kSurrogateInputs> x{};
    double y = 0.0;  // RSRP, dBm
};

// One sample per truth-valid cell.
std::vector<SurrogateSample> collect_samples(const FeatureStack& features,
                                             const RadioMap& truth);

struct SurrogateConfig {
    int hidden = 64;
    double lr = 1e-3;
    double weight_decay = 5e-2;
    double plateau_factor = 0.7;
    int plateau_patience = 10;
    int epochs = 200;
    int batch_size = 256;
    double holdout_fraction = 0.2;  // drives the plateau schedule
    std::uint64_t seed = 0;
};

struct SurrogateTrainReport {
    std::vector<double> train_loss;  // masked MSE per epoch
    std::vector<double> val_loss;
    std::vector<double> val_mae;
    double best_val_loss = 0.0;
    int best_epoch = 0;
    int convergence_iteration = 0;  // epoch of the best validation MAE
};

// Per-cell fully connected regressor: 7 -> hidden -> hidden -> 1 with
// leaky-ReLU, trained by manual backpropagation with AdamW and the
// reduce-on-plateau schedule. Feature standardization is fitted once at
// first training and stored with the model.
class SurrogateModel {
public:
    explicit SurrogateModel(const SurrogateConfig& config = {});

    double predict(const std::array<double, kSurrogateInputs>& x) const;
    Grid<float> predict_map(const FeatureStack& features) const;

    // Minimizes MSE over the samples; deterministic for a fixed seed.
    SurrogateTrainReport train(const std::vector<SurrogateSample>& samples,
                               int epochs = -1);

    // Scene fine-tuning with best-snapshot semantics: the model keeps the
    // weights of the epoch with the lowest holdout MAE.
    SurrogateTrainReport calibrate(const std::vector<SurrogateSample>& samples,
                                   int epochs = -1);

    // Flat parameter access for gradient checking and serialization.
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    // MSE loss and its gradient on a batch (test hook for finite differences).
    double loss(const std::vector<SurrogateSample>& batch) const;
    std::vector<double> loss_gradient(const std::vector<SurrogateSample>& batch) const;

    std::string to_json() const;
    static SurrogateModel from_json(const std::string& text);

private:
    void init_weights();
    void fit_normalizer(const std::vector<SurrogateSample>& samples);
    double forward(const std::array<double, kSurrogateInputs>& x,
                   std::vector<double>* h1, std::vector<double>* h2) const;
    SurrogateTrainReport run_training(const std::vector<SurrogateSample>& samples,
                                      int epochs, bool keep_best);

    SurrogateConfig config_;
    std::vector<double> params_;
    std::array<double, kSurrogateInputs> feat_mean_{};
    std::array<double, kSurrogateInputs> feat_scale_{};
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    bool normalizer_fitted_ = false;
    std::uint64_t train_calls_ = 0;
};

}  // namespace rtwin
