#pragma once

#include "msalnet/optim.hpp"
#include "msalnet/representation.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msalnet {

// Site-feature regressor: embedding -> hidden (relu) -> m.
struct RegressorParams {
    LayerParams layer1;
    LayerParams layer2;

    RegressorParams() = default;
    RegressorParams(std::size_t n_pre, std::size_t m, std::size_t hidden = 128);
    static RegressorParams init(std::size_t n_pre, std::size_t m, RngStream& rng, std::size_t hidden = 128);

    std::size_t input_dim() const { return layer1.weights.extent(0); }
    std::size_t output_dim() const { return layer2.weights.extent(1); }
    std::vector<LayerParams*> layers() { return {&layer1, &layer2}; }
    std::vector<const LayerParams*> layers() const { return {&layer1, &layer2}; }
};

struct RegressorCache {
    Tensor input;
    Tensor hidden_pre;
    Tensor hidden;
    Tensor output;
};

Tensor regressor_forward(const Tensor& embedding, const RegressorParams& params, RegressorCache* cache = nullptr);

struct TrainConfig {
    double alpha = 0.006;
    double lr_main = 1e-4;
    double lr_ae = 1e-5;
    double l2 = 1e-4;
    std::size_t batch_size = 10;
    double dropout = 0.5;
    std::size_t max_epochs = 100;
    std::size_t patience = 20;
    double epsilon_guard = 1e-6;
    std::uint64_t seed = 0;
    bool adversarial = true;
    OptimizerKind optimizer = OptimizerKind::adam;

    // Throws InputError naming the offending field.
    void validate() const;
};

struct EpochLog {
    std::size_t epoch = 0;
    double l_r_regression = 0.0;  // mean pre-step L_R of the regression steps
    double l_t = 0.0;
    double l_c = 0.0;
    double l_r_objective = 0.0;  // L_R as recomputed inside the objective step
    double val_l_c = 0.0;
    std::optional<double> site_probe_accuracy;
};

struct BatchLog {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    double l_r_regression = 0.0;
    double l_t = 0.0;
    double l_c = 0.0;
    double l_r_objective = 0.0;
};

nlohmann::json to_json(const EpochLog& log);

// Extractor+classifier (theta_E, theta_C) and regressor (theta_R) with their
// optimizer moments. The two parameter sets never share storage.
struct ModelState {
    ExtractorParams extractor;
    RegressorParams regressor;
    OptimizerState extractor_opt;
    OptimizerState regressor_opt;
};

ModelState make_model_state(ExtractorParams extractor, std::size_t site_feature_dim, RngStream& rng,
                            std::size_t regressor_hidden = 128);

struct TrainSample {
    const FcMatrix* fc = nullptr;
    int label = 0;
    const Tensor* target = nullptr;  // site feature vector C_i
};

// Mean over coordinates of the squared error.
double loss_regression(const Tensor& pred, const Tensor& target);
// Batch mean of the per-sample loss.
double loss_regression(std::span<const Tensor> preds, std::span<const Tensor> targets);

// Binary cross-entropy on p1 = probs[1], clamped to [1e-12, 1 - 1e-12].
double loss_classification(const Tensor& probs, int label);
double loss_classification(std::span<const Tensor> probs, std::span<const int> labels);

// L_t = L_C + alpha / (L_R + eps).
double loss_objective(double l_c, double l_r, double alpha, double eps);

struct ObjectiveLosses {
    double l_t = 0.0;
    double l_c = 0.0;
    double l_r = 0.0;
};

// Regression-step loss and gradients into theta_R only; the extractor runs in
// eval mode (no dropout). Returns L_R before any update.
double regression_gradients(ModelState& state, std::span<const TrainSample> batch);

// Objective-step loss and gradients into theta_E and theta_C only. The
// regressor is evaluated but its gradients are discarded. `dropout_rng` is
// advanced by the train-mode forward passes.
ObjectiveLosses objective_gradients(ModelState& state, std::span<const TrainSample> batch, double alpha,
                                    double eps, RngStream& dropout_rng);

// Loss values only, no gradients.
ObjectiveLosses evaluate_objective(const ModelState& state, std::span<const TrainSample> batch, double alpha,
                                   double eps, Mode mode, RngStream& dropout_rng);

double train_regressor_step(ModelState& state, std::span<const TrainSample> batch, const TrainConfig& cfg);
ObjectiveLosses train_objective_step(ModelState& state, std::span<const TrainSample> batch, const TrainConfig& cfg,
                                     double alpha, RngStream& dropout_rng);

struct FitResult {
    ModelState state;  // parameters from the best validation epoch
    std::vector<EpochLog> epochs;
    std::vector<BatchLog> batches;
    std::size_t best_epoch = 0;
    bool adversarial_used = false;
    std::vector<std::string> warnings;
};

// Alternating training: per batch a regressor step then an objective step
// (objective only with alpha = 0 when adversarial training is off). Early
// stopping on validation L_C, or on training L_C when `val` is empty.
FitResult fit(ModelState state, std::span<const TrainSample> train, std::span<const TrainSample> val,
              const TrainConfig& cfg);

// Mean eval-mode classification loss.
double validation_loss(const ModelState& state, std::span<const TrainSample> samples);

}  // namespace msalnet
