#include "msalnet/adversarial.hpp"

#include "msalnet/error.hpp"
#include "msalnet/io.hpp"
#include "msalnet/log.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msalnet {

RegressorParams::RegressorParams(std::size_t n_pre, std::size_t m, std::size_t hidden)
    : layer1({n_pre, hidden}, {hidden}), layer2({hidden, m}, {m}) {}

RegressorParams RegressorParams::init(std::size_t n_pre, std::size_t m, RngStream& rng, std::size_t hidden) {
    RegressorParams p(n_pre, m, hidden);
    glorot_uniform(p.layer1, n_pre, hidden, rng);
    glorot_uniform(p.layer2, hidden, m, rng);
    return p;
}

Tensor regressor_forward(const Tensor& embedding, const RegressorParams& params, RegressorCache* cache) {
    RegressorCache local;
    RegressorCache& c = cache ? *cache : local;
    c.input = embedding;
    c.hidden_pre = dense_forward(embedding, params.layer1);
    c.hidden = activation(c.hidden_pre, Activation::relu);
    c.output = dense_forward(c.hidden, params.layer2);
    return c.output;
}

namespace {
// Accumulates theta_R gradients and returns dLoss/dembedding when requested.
void regressor_backward(const RegressorCache& c, RegressorParams& params, const Tensor& grad_out, Tensor* grad_input) {
    Tensor g_hidden;
    dense_backward(c.hidden, grad_out, params.layer2, &g_hidden);
    const Tensor g_pre = activation_backward(Activation::relu, c.hidden_pre, c.hidden, g_hidden);
    dense_backward(c.input, g_pre, params.layer1, grad_input);
}

void require_finite_loss(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + " is not finite");
}
}  // namespace

void TrainConfig::validate() const {
    if (!(alpha >= 0.0)) throw InputError("config field 'alpha' must be >= 0");
    if (!(lr_main > 0.0)) throw InputError("config field 'lr_main' must be > 0");
    if (!(lr_ae > 0.0)) throw InputError("config field 'lr_ae' must be > 0");
    if (!(l2 >= 0.0)) throw InputError("config field 'l2' must be >= 0");
    if (batch_size < 1) throw InputError("config field 'batch_size' must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("config field 'dropout' must be in [0, 1)");
    if (max_epochs < 1) throw InputError("config field 'max_epochs' must be >= 1");
    if (!(epsilon_guard > 0.0)) throw InputError("config field 'epsilon_guard' must be > 0");
}

json to_json(const EpochLog& log) {
    json j{{"epoch", log.epoch},           {"l_r_regression", log.l_r_regression}, {"l_t", log.l_t},
           {"l_c", log.l_c},               {"l_r_objective", log.l_r_objective},   {"val_l_c", log.val_l_c}};
    j["site_probe_accuracy"] = log.site_probe_accuracy ? json(*log.site_probe_accuracy) : json(nullptr);
    return j;
}

ModelState make_model_state(ExtractorParams extractor, std::size_t site_feature_dim, RngStream& rng,
                            std::size_t regressor_hidden) {
    const std::size_t n_pre = embedding_dim(extractor);
    ModelState s{std::move(extractor), RegressorParams::init(n_pre, site_feature_dim, rng, regressor_hidden), {}, {}};
    return s;
}

// ---- losses ---------------------------------------------------------------

double loss_regression(const Tensor& pred, const Tensor& target) {
    if (pred.size() != target.size()) throw DimensionError("loss_regression: prediction and target lengths differ");
    double s = 0.0;
    for (std::size_t j = 0; j < pred.size(); ++j) s += (pred[j] - target[j]) * (pred[j] - target[j]);
    return s / static_cast<double>(pred.size());
}

double loss_regression(std::span<const Tensor> preds, std::span<const Tensor> targets) {
    if (preds.size() != targets.size() || preds.empty()) throw DimensionError("loss_regression: batch size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) s += loss_regression(preds[i], targets[i]);
    return s / static_cast<double>(preds.size());
}

namespace {
constexpr double kProbFloor = 1e-12;

double clamped_p1(const Tensor& probs) { return std::clamp(probs[1], kProbFloor, 1.0 - kProbFloor); }

// dCE/dprobs for one sample, scaled by `scale`.
Tensor classification_grad(const Tensor& probs, int label, double scale) {
    Tensor g({2});
    const double raw = probs[1];
    if (raw > kProbFloor && raw < 1.0 - kProbFloor) g[1] = scale * (label == 1 ? -1.0 / raw : 1.0 / (1.0 - raw));
    return g;
}
}  // namespace

double loss_classification(const Tensor& probs, int label) {
    if (probs.size() != 2) throw DimensionError("loss_classification: expects two class probabilities");
    const double p1 = clamped_p1(probs);
    return label == 1 ? -std::log(p1) : -std::log(1.0 - p1);
}

double loss_classification(std::span<const Tensor> probs, std::span<const int> labels) {
    if (probs.size() != labels.size() || probs.empty()) throw DimensionError("loss_classification: batch size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) s += loss_classification(probs[i], labels[i]);
    return s / static_cast<double>(probs.size());
}

double loss_objective(double l_c, double l_r, double alpha, double eps) { return l_c + alpha / (l_r + eps); }

// ---- steps ----------------------------------------------------------------

double regression_gradients(ModelState& state, std::span<const TrainSample> batch) {
    if (batch.empty()) throw InputError("regression step on an empty batch");
    for (auto* l : state.regressor.layers()) l->zero_grad();
    RngStream unused(0);
    const double scale = 1.0 / static_cast<double>(batch.size());
    double l_r = 0.0;
    RegressorCache cache;
    for (const auto& s : batch) {
        const ForwardResult f = extractor_forward(state.extractor, *s.fc, Mode::eval, unused);
        const Tensor pred = regressor_forward(f.embedding, state.regressor, &cache);
        const Tensor& target = *s.target;
        l_r += loss_regression(pred, target);
        Tensor g({pred.size()});
        const double k = 2.0 * scale / static_cast<double>(pred.size());
        for (std::size_t j = 0; j < pred.size(); ++j) g[j] = k * (pred[j] - target[j]);
        regressor_backward(cache, state.regressor, g, nullptr);
    }
    return l_r * scale;
}

ObjectiveLosses objective_gradients(ModelState& state, std::span<const TrainSample> batch, double alpha, double eps,
                                    RngStream& dropout_rng) {
    if (batch.empty()) throw InputError("objective step on an empty batch");
    for (auto* l : extractor_layers(state.extractor)) l->zero_grad();
    const std::size_t n = batch.size();
    const double scale = 1.0 / static_cast<double>(n);
    std::vector<ExtractorCache> ext(n);
    std::vector<RegressorCache> reg(n);
    ObjectiveLosses losses;
    for (std::size_t i = 0; i < n; ++i) {
        const ForwardResult f = extractor_forward(state.extractor, *batch[i].fc, Mode::train, dropout_rng, &ext[i]);
        losses.l_c += loss_classification(f.probs, batch[i].label);
        if (alpha > 0.0) losses.l_r += loss_regression(regressor_forward(f.embedding, state.regressor, &reg[i]), *batch[i].target);
    }
    losses.l_c *= scale;
    losses.l_r *= scale;
    losses.l_t = alpha > 0.0 ? loss_objective(losses.l_c, losses.l_r, alpha, eps) : losses.l_c;

    // dL_t/dL_R = -alpha / (L_R + eps)^2.
    const double d_lr = alpha > 0.0 ? -alpha / ((losses.l_r + eps) * (losses.l_r + eps)) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const ForwardResult& f = backbone_kind(state.extractor) == BackboneKind::nia ? ext[i].nia.out : ext[i].mlp.out;
        const Tensor g_probs = classification_grad(f.probs, batch[i].label, scale);
        Tensor g_emb;
        if (alpha > 0.0) {
            const Tensor& pred = reg[i].output;
            const Tensor& target = *batch[i].target;
            Tensor g_pred({pred.size()});
            const double k = d_lr * 2.0 * scale / static_cast<double>(pred.size());
            for (std::size_t j = 0; j < pred.size(); ++j) g_pred[j] = k * (pred[j] - target[j]);
            regressor_backward(reg[i], state.regressor, g_pred, &g_emb);
        }
        extractor_backward(state.extractor, *batch[i].fc, ext[i], g_probs, g_emb);
    }
    // theta_R is frozen in this step.
    for (auto* l : state.regressor.layers()) l->zero_grad();
    return losses;
}

ObjectiveLosses evaluate_objective(const ModelState& state, std::span<const TrainSample> batch, double alpha,
                                   double eps, Mode mode, RngStream& dropout_rng) {
    ObjectiveLosses losses;
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch) {
        const ForwardResult f = extractor_forward(state.extractor, *s.fc, mode, dropout_rng);
        losses.l_c += loss_classification(f.probs, s.label);
        if (s.target) losses.l_r += loss_regression(regressor_forward(f.embedding, state.regressor), *s.target);
    }
    losses.l_c *= scale;
    losses.l_r *= scale;
    losses.l_t = alpha > 0.0 ? loss_objective(losses.l_c, losses.l_r, alpha, eps) : losses.l_c;
    return losses;
}

double train_regressor_step(ModelState& state, std::span<const TrainSample> batch, const TrainConfig& cfg) {
    const double l_r = regression_gradients(state, batch);
    require_finite_loss(l_r, "regression loss");
    const OptimizerConfig ocfg{cfg.optimizer, cfg.lr_main, 0.9, 0.999, 1e-8, 0.0};
    const auto layers = state.regressor.layers();
    state.regressor_opt.step(layers, ocfg);
    return l_r;
}

ObjectiveLosses train_objective_step(ModelState& state, std::span<const TrainSample> batch, const TrainConfig& cfg,
                                     double alpha, RngStream& dropout_rng) {
    const ObjectiveLosses losses = objective_gradients(state, batch, alpha, cfg.epsilon_guard, dropout_rng);
    require_finite_loss(losses.l_t, "objective loss");
    const OptimizerConfig ocfg{cfg.optimizer, cfg.lr_main, 0.9, 0.999, 1e-8, cfg.l2};
    const auto layers = extractor_layers(state.extractor);
    state.extractor_opt.step(layers, ocfg);
    return losses;
}

double validation_loss(const ModelState& state, std::span<const TrainSample> samples) {
    RngStream unused(0);
    double s = 0.0;
    for (const auto& x : samples)
        s += loss_classification(extractor_forward(state.extractor, *x.fc, Mode::eval, unused).probs, x.label);
    return s / static_cast<double>(samples.size());
}

// ---- fit ------------------------------------------------------------------

namespace {
std::size_t distinct_targets(std::span<const TrainSample> samples) {
    std::vector<const Tensor*> seen;
    for (const auto& s : samples) {
        if (!s.target) continue;
        if (std::none_of(seen.begin(), seen.end(), [&](const Tensor* t) { return *t == *s.target; }))
            seen.push_back(s.target);
    }
    return seen.size();
}

void set_dropout(ExtractorParams& params, double rate) {
    if (auto* nia = std::get_if<NiaParams>(&params)) nia->hyper.dropout_rate = rate;
    else std::get<MlpParams>(params).hyper.dropout_rate = rate;
}
}  // namespace

FitResult fit(ModelState state, std::span<const TrainSample> train, std::span<const TrainSample> val,
              const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw InputError("fit: empty training set");
    set_dropout(state.extractor, cfg.dropout);

    FitResult result;
    bool adversarial = cfg.adversarial;
    if (adversarial && distinct_targets(train) < 2) {
        result.warnings.push_back("fewer than two distinct site targets in the training set; adversarial term disabled");
        log::warn(result.warnings.back());
        adversarial = false;
    }
    result.adversarial_used = adversarial;
    const double alpha = adversarial ? cfg.alpha : 0.0;

    RngStream root(cfg.seed);
    RngStream shuffle_rng = root.split(11);
    RngStream dropout_rng = root.split(12);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<TrainSample> batch;
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    result.state = state;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        EpochLog log_entry;
        log_entry.epoch = epoch;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
                batch.push_back(train[order[i]]);
            BatchLog b;
            b.epoch = epoch;
            b.batch = batches;
            if (adversarial) b.l_r_regression = train_regressor_step(state, batch, cfg);
            const ObjectiveLosses o = train_objective_step(state, batch, cfg, alpha, dropout_rng);
            b.l_t = o.l_t;
            b.l_c = o.l_c;
            b.l_r_objective = o.l_r;
            log_entry.l_r_regression += b.l_r_regression;
            log_entry.l_t += b.l_t;
            log_entry.l_c += b.l_c;
            log_entry.l_r_objective += b.l_r_objective;
            result.batches.push_back(b);
            ++batches;
        }
        const double nb = static_cast<double>(batches);
        log_entry.l_r_regression /= nb;
        log_entry.l_t /= nb;
        log_entry.l_c /= nb;
        log_entry.l_r_objective /= nb;
        log_entry.val_l_c = val.empty() ? log_entry.l_c : validation_loss(state, val);
        result.epochs.push_back(log_entry);
        if (!std::isfinite(log_entry.val_l_c) || !std::isfinite(log_entry.l_t))
            throw NumericError("fit: non-finite loss; last epoch " + to_json(log_entry).dump());

        if (log_entry.val_l_c < best) {
            best = log_entry.val_l_c;
            result.best_epoch = epoch;
            result.state = state;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

}  // namespace msalnet
