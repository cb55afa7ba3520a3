#include "msalnet/layers.hpp"

#include "msalnet/error.hpp"

#include <algorithm>
#include <cmath>

namespace msalnet {

LayerParams::LayerParams(std::vector<std::size_t> weight_shape, std::vector<std::size_t> bias_shape)
    : weights(weight_shape), bias(bias_shape), grad_weights(weight_shape), grad_bias(bias_shape) {}

void LayerParams::zero_grad() {
    grad_weights.fill(0.0);
    grad_bias.fill(0.0);
}

void glorot_uniform(LayerParams& params, std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : params.weights.data()) w = rng.uniform(-limit, limit);
    params.bias.fill(0.0);
    params.zero_grad();
}

// ---- row convolution ------------------------------------------------------

Tensor conv_row_forward(const Tensor& input, const LayerParams& params) {
    if (input.rank() != 2 || input.extent(0) != input.extent(1))
        throw DimensionError("conv_row: input must be square R x R, got " + input.shape_string());
    const std::size_t r = input.extent(0);
    if (params.weights.rank() != 2) throw DimensionError("conv_row: weights must be C1 x R");
    const std::size_t c1 = params.weights.extent(0);
    require_shape(params.weights, {c1, r}, "conv_row weights");
    require_shape(params.bias, {c1}, "conv_row bias");

    Tensor out({c1, r});
    for (std::size_t c = 0; c < c1; ++c) {
        const auto w = params.weights.row(c);
        for (std::size_t i = 0; i < r; ++i) {
            const auto x = input.row(i);
            double acc = params.bias[c];
            for (std::size_t j = 0; j < r; ++j) acc += x[j] * w[j];
            out(c, i) = acc;
        }
    }
    return out;
}

void conv_row_backward(const Tensor& input, const Tensor& grad_out, LayerParams& params, Tensor* grad_input) {
    const std::size_t r = input.extent(0);
    const std::size_t c1 = params.weights.extent(0);
    require_shape(grad_out, {c1, r}, "conv_row grad_out");
    for (std::size_t c = 0; c < c1; ++c) {
        auto gw = params.grad_weights.row(c);
        const auto g = grad_out.row(c);
        double gb = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
            const double gi = g[i];
            gb += gi;
            const auto x = input.row(i);
            for (std::size_t j = 0; j < r; ++j) gw[j] += gi * x[j];
        }
        params.grad_bias[c] += gb;
    }
    if (grad_input) {
        *grad_input = Tensor({r, r});
        for (std::size_t c = 0; c < c1; ++c) {
            const auto w = params.weights.row(c);
            const auto g = grad_out.row(c);
            for (std::size_t i = 0; i < r; ++i) {
                auto gx = grad_input->row(i);
                for (std::size_t j = 0; j < r; ++j) gx[j] += g[i] * w[j];
            }
        }
    }
}

// ---- column convolution ---------------------------------------------------

namespace {
void check_conv_col(const Tensor& input, const LayerParams& params) {
    if (input.rank() != 2) throw DimensionError("conv_col: input must be C1 x R, got " + input.shape_string());
    if (params.weights.rank() != 4) throw DimensionError("conv_col: weights must be (R, 1, C1, C2)");
    const std::size_t c1 = input.extent(0);
    const std::size_t r = input.extent(1);
    const std::size_t c2 = params.weights.extent(3);
    require_shape(params.weights, {r, 1, c1, c2}, "conv_col weights");
    require_shape(params.bias, {c2}, "conv_col bias");
}
}  // namespace

Tensor conv_col_forward(const Tensor& input, const LayerParams& params) {
    check_conv_col(input, params);
    const std::size_t c1 = input.extent(0);
    const std::size_t r = input.extent(1);
    const std::size_t c2 = params.weights.extent(3);
    Tensor out = params.bias;
    const double* w = params.weights.data().data();
    for (std::size_t roi = 0; roi < r; ++roi) {
        for (std::size_t c = 0; c < c1; ++c) {
            const double x = input(c, roi);
            const double* wk = w + (roi * c1 + c) * c2;
            for (std::size_t d = 0; d < c2; ++d) out[d] += x * wk[d];
        }
    }
    return out;
}

void conv_col_backward(const Tensor& input, const Tensor& grad_out, LayerParams& params, Tensor* grad_input) {
    check_conv_col(input, params);
    const std::size_t c1 = input.extent(0);
    const std::size_t r = input.extent(1);
    const std::size_t c2 = params.weights.extent(3);
    require_shape(grad_out, {c2}, "conv_col grad_out");
    for (std::size_t d = 0; d < c2; ++d) params.grad_bias[d] += grad_out[d];
    double* gw = params.grad_weights.data().data();
    const double* w = params.weights.data().data();
    const double* g = grad_out.data().data();
    if (grad_input) *grad_input = Tensor({c1, r});
    for (std::size_t roi = 0; roi < r; ++roi) {
        for (std::size_t c = 0; c < c1; ++c) {
            const double x = input(c, roi);
            const std::size_t base = (roi * c1 + c) * c2;
            for (std::size_t d = 0; d < c2; ++d) gw[base + d] += x * g[d];
            if (grad_input) {
                double acc = 0.0;
                for (std::size_t d = 0; d < c2; ++d) acc += w[base + d] * g[d];
                (*grad_input)(c, roi) = acc;
            }
        }
    }
}

// ---- dense ----------------------------------------------------------------

Tensor dense_forward(const Tensor& x, const LayerParams& params) {
    if (x.rank() != 1) throw DimensionError("dense: input must be a vector, got " + x.shape_string());
    if (params.weights.rank() != 2) throw DimensionError("dense: weights must be n x k");
    const std::size_t n = params.weights.extent(0);
    const std::size_t k = params.weights.extent(1);
    if (x.size() != n)
        throw DimensionError("dense: axis 0 of weights has extent " + std::to_string(n) + " but input has length " +
                             std::to_string(x.size()));
    require_shape(params.bias, {k}, "dense bias");
    Tensor y = params.bias;
    double* out = y.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const auto w = params.weights.row(i);
        for (std::size_t j = 0; j < k; ++j) out[j] += xi * w[j];
    }
    return y;
}

void dense_backward(const Tensor& x, const Tensor& grad_out, LayerParams& params, Tensor* grad_input) {
    const std::size_t n = params.weights.extent(0);
    const std::size_t k = params.weights.extent(1);
    require_shape(x, {n}, "dense input");
    require_shape(grad_out, {k}, "dense grad_out");
    for (std::size_t j = 0; j < k; ++j) params.grad_bias[j] += grad_out[j];
    const double* g = grad_out.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        auto gw = params.grad_weights.row(i);
        for (std::size_t j = 0; j < k; ++j) gw[j] += xi * g[j];
    }
    if (grad_input) {
        *grad_input = Tensor({n});
        for (std::size_t i = 0; i < n; ++i) {
            const auto w = params.weights.row(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) acc += w[j] * g[j];
            (*grad_input)[i] = acc;
        }
    }
}

// ---- instance norm --------------------------------------------------------

Tensor instance_norm(const Tensor& x, double eps, InstanceNormCache* cache) {
    if (x.rank() != 2) throw DimensionError("instance_norm: input must be C x R, got " + x.shape_string());
    const std::size_t channels = x.extent(0);
    const std::size_t n = x.extent(1);
    Tensor out({channels, n});
    std::vector<double> inv_std(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        const auto row = x.row(c);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        inv_std[c] = 1.0 / std::sqrt(var + eps);
        auto o = out.row(c);
        for (std::size_t i = 0; i < n; ++i) o[i] = (row[i] - mean) * inv_std[c];
    }
    if (cache) {
        cache->normalized = out;
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

Tensor instance_norm_backward(const Tensor& grad_out, const InstanceNormCache& cache) {
    const std::size_t channels = cache.normalized.extent(0);
    const std::size_t n = cache.normalized.extent(1);
    require_shape(grad_out, {channels, n}, "instance_norm grad_out");
    Tensor grad({channels, n});
    for (std::size_t c = 0; c < channels; ++c) {
        const auto g = grad_out.row(c);
        const auto xhat = cache.normalized.row(c);
        double mean_g = 0.0;
        double mean_gx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean_g += g[i];
            mean_gx += g[i] * xhat[i];
        }
        mean_g /= static_cast<double>(n);
        mean_gx /= static_cast<double>(n);
        auto out = grad.row(c);
        for (std::size_t i = 0; i < n; ++i) out[i] = cache.inv_std[c] * (g[i] - mean_g - xhat[i] * mean_gx);
    }
    return grad;
}

// ---- activations ----------------------------------------------------------

Tensor activation(const Tensor& x, Activation kind) {
    Tensor y = x;
    switch (kind) {
        case Activation::tanh:
            for (double& v : y.data()) v = std::tanh(v);
            break;
        case Activation::relu:
            for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::softmax: {
            if (x.rank() != 1 || x.size() < 2)
                throw DimensionError("softmax: expects a logit vector of length >= 2, got " + x.shape_string());
            const double peak = *std::max_element(x.data().begin(), x.data().end());
            double total = 0.0;
            for (double& v : y.data()) {
                v = std::exp(v - peak);
                total += v;
            }
            for (double& v : y.data()) v /= total;
            break;
        }
    }
    return y;
}

Tensor activation_backward(Activation kind, const Tensor& input, const Tensor& output, const Tensor& grad_out) {
    Tensor g = grad_out;
    switch (kind) {
        case Activation::tanh:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - output[i] * output[i];
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < g.size(); ++i)
                if (!(input[i] > 0.0)) g[i] = 0.0;
            break;
        case Activation::softmax: {
            double dot = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) dot += grad_out[i] * output[i];
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = output[i] * (grad_out[i] - dot);
            break;
        }
    }
    return g;
}

// ---- dropout --------------------------------------------------------------

Tensor dropout(const Tensor& x, double rate, Mode mode, RngStream& rng, DropoutMask* mask) {
    if (mask) mask->scale.clear();
    if (mode == Mode::eval || rate <= 0.0) return x;
    if (rate >= 1.0) throw InputError("dropout: rate must be < 1");
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor y = x;
    std::vector<double> scale(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        scale[i] = rng.uniform() < rate ? 0.0 : keep_scale;
        y[i] *= scale[i];
    }
    if (mask) mask->scale = std::move(scale);
    return y;
}

Tensor dropout_backward(const Tensor& grad_out, const DropoutMask& mask) {
    if (mask.scale.empty()) return grad_out;
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask.scale[i];
    return g;
}

}  // namespace msalnet
