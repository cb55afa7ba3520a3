#pragma once

#include "msalnet/rng.hpp"
#include "msalnet/tensor.hpp"

#include <vector>

namespace msalnet {

enum class Mode { train, eval };
enum class Activation { tanh, relu, softmax };

// Learnable weights and bias of one layer with matching gradient buffers.
struct LayerParams {
    Tensor weights;
    Tensor bias;
    Tensor grad_weights;
    Tensor grad_bias;

    LayerParams() = default;
    LayerParams(std::vector<std::size_t> weight_shape, std::vector<std::size_t> bias_shape);

    void zero_grad();
    std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

// Glorot-uniform weights, zero bias.
void glorot_uniform(LayerParams& params, std::size_t fan_in, std::size_t fan_out, RngStream& rng);

// Row convolution: the 1xR kernel spans a full row, so each (channel, row)
// pair yields one value. input R x R, weights C1 x R, bias C1 -> C1 x R.
Tensor conv_row_forward(const Tensor& input, const LayerParams& params);
// Accumulates parameter gradients; fills grad_input when non-null.
void conv_row_backward(const Tensor& input, const Tensor& grad_out, LayerParams& params,
                       Tensor* grad_input = nullptr);

// Column convolution: an Rx1 kernel spanning all rows collapses the ROI axis.
// input C1 x R, weights (R, 1, C1, C2), bias C2 -> C2.
Tensor conv_col_forward(const Tensor& input, const LayerParams& params);
void conv_col_backward(const Tensor& input, const Tensor& grad_out, LayerParams& params,
                       Tensor* grad_input = nullptr);

// y = x^T W + b with x of length n, W n x k, b of length k.
Tensor dense_forward(const Tensor& x, const LayerParams& params);
void dense_backward(const Tensor& x, const Tensor& grad_out, LayerParams& params, Tensor* grad_input = nullptr);

struct InstanceNormCache {
    Tensor normalized;
    std::vector<double> inv_std;
};

// Per-channel normalization over the second axis, no affine parameters.
Tensor instance_norm(const Tensor& x, double eps, InstanceNormCache* cache = nullptr);
Tensor instance_norm_backward(const Tensor& grad_out, const InstanceNormCache& cache);

// Softmax expects a rank-1 logit vector of length >= 2.
Tensor activation(const Tensor& x, Activation kind);
// `input` is needed for relu, `output` for tanh and softmax.
Tensor activation_backward(Activation kind, const Tensor& input, const Tensor& output, const Tensor& grad_out);

// Per-entry multiplier: 0 for dropped entries, 1/(1-rate) for kept ones.
// An empty mask means identity.
struct DropoutMask {
    std::vector<double> scale;
};

// Inverted dropout. Eval mode and rate 0 are identities and draw nothing from rng.
Tensor dropout(const Tensor& x, double rate, Mode mode, RngStream& rng, DropoutMask* mask = nullptr);
Tensor dropout_backward(const Tensor& grad_out, const DropoutMask& mask);

}  // namespace msalnet
