#pragma once

#include "msalnet/layers.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace msalnet {

enum class OptimizerKind { adam, sgd };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // L2 penalty coefficient; adds weight_decay * w to weight gradients (never biases).
    double weight_decay = 0.0;
};

struct AdamMoments {
    Tensor m_weights;
    Tensor v_weights;
    Tensor m_bias;
    Tensor v_bias;
    std::uint64_t step = 0;
};

// One update of `params` from its populated gradients. Moments are created on first use.
void sgd_adam_step(LayerParams& params, AdamMoments& moments, const OptimizerConfig& cfg);

// Moments for an ordered parameter set; the i-th layer always maps to moments[i].
struct OptimizerState {
    std::vector<AdamMoments> moments;

    void step(std::span<LayerParams* const> layers, const OptimizerConfig& cfg);
};

}  // namespace msalnet
