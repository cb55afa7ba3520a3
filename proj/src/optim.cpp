#include "msalnet/optim.hpp"

#include <cmath>

namespace msalnet {

namespace {
void ensure_moments(const LayerParams& p, AdamMoments& m) {
    if (m.m_weights.shape() != p.weights.shape()) {
        m.m_weights = Tensor(p.weights.shape());
        m.v_weights = Tensor(p.weights.shape());
        m.m_bias = Tensor(p.bias.shape());
        m.v_bias = Tensor(p.bias.shape());
        m.step = 0;
    }
}

void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m, std::span<double> v,
                 double decay, double lr, double b1, double b2, double eps, double c1, double c2) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double grad = g[i] + decay * w[i];
        m[i] = b1 * m[i] + (1.0 - b1) * grad;
        v[i] = b2 * v[i] + (1.0 - b2) * grad * grad;
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}
}  // namespace

void sgd_adam_step(LayerParams& params, AdamMoments& moments, const OptimizerConfig& cfg) {
    if (cfg.kind == OptimizerKind::sgd) {
        auto w = params.weights.data();
        const auto gw = params.grad_weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.lr * (gw[i] + cfg.weight_decay * w[i]);
        auto b = params.bias.data();
        const auto gb = params.grad_bias.data();
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= cfg.lr * gb[i];
        return;
    }
    ensure_moments(params, moments);
    ++moments.step;
    const double t = static_cast<double>(moments.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    adam_update(params.weights.data(), params.grad_weights.data(), moments.m_weights.data(),
                moments.v_weights.data(), cfg.weight_decay, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, c1, c2);
    adam_update(params.bias.data(), params.grad_bias.data(), moments.m_bias.data(), moments.v_bias.data(), 0.0,
                cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, c1, c2);
}

void OptimizerState::step(std::span<LayerParams* const> layers, const OptimizerConfig& cfg) {
    if (moments.size() < layers.size()) moments.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) sgd_adam_step(*layers[i], moments[i], cfg);
}

}  // namespace msalnet
