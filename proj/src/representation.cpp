#include "msalnet/representation.hpp"

#include "msalnet/error.hpp"

#include <cmath>

namespace msalnet {

// ---- NIA ------------------------------------------------------------------

NiaParams::NiaParams(const NiaHyper& h)
    : hyper(h),
      conv1({h.c1, h.r}, {h.c1}),
      conv2({h.r, 1, h.c1, h.c2}, {h.c2}),
      fc_hidden({h.c2, h.n_pre}, {h.n_pre}),
      classifier({h.n_pre, 2}, {2}) {}

NiaParams NiaParams::init(const NiaHyper& h, RngStream& rng) {
    NiaParams p(h);
    // Convolution fan counts follow receptive field x channels.
    glorot_uniform(p.conv1, h.r, h.r * h.c1, rng);
    glorot_uniform(p.conv2, h.r * h.c1, h.r * h.c2, rng);
    glorot_uniform(p.fc_hidden, h.c2, h.n_pre, rng);
    glorot_uniform(p.classifier, h.n_pre, 2, rng);
    return p;
}

std::vector<LayerParams*> NiaParams::layers() { return {&conv1, &conv2, &fc_hidden, &classifier}; }
std::vector<const LayerParams*> NiaParams::layers() const { return {&conv1, &conv2, &fc_hidden, &classifier}; }
std::vector<std::string_view> NiaParams::layer_names() { return {"conv1", "conv2", "fc_hidden", "classifier"}; }

std::vector<std::string_view> nia_pipeline_stages() {
    return {"conv_row", "instance_norm", "tanh", "conv_col", "tanh", "dense", "tanh", "dropout", "dense", "softmax"};
}

ForwardResult nia_forward(const FcMatrix& fc, const NiaParams& params, Mode mode, RngStream& rng, NiaCache* cache) {
    if (fc.r != params.hyper.r)
        throw DimensionError("nia_forward: FC has r=" + std::to_string(fc.r) + " but model expects r=" +
                             std::to_string(params.hyper.r));
    NiaCache local;
    NiaCache& c = cache ? *cache : local;
    c.conv1_out = conv_row_forward(fc.values, params.conv1);
    c.act1 = activation(instance_norm(c.conv1_out, params.hyper.norm_eps, &c.norm), Activation::tanh);
    c.act2 = activation(conv_col_forward(c.act1, params.conv2), Activation::tanh);
    c.act3 = activation(dense_forward(c.act2, params.fc_hidden), Activation::tanh);
    c.out.embedding = dropout(c.act3, params.hyper.dropout_rate, mode, rng, &c.mask);
    c.out.probs = activation(dense_forward(c.out.embedding, params.classifier), Activation::softmax);
    return c.out;
}

void nia_backward(const FcMatrix& fc, const NiaCache& c, NiaParams& params, const Tensor& grad_probs,
                  const Tensor& grad_embedding) {
    const Tensor g_logits = activation_backward(Activation::softmax, Tensor{}, c.out.probs, grad_probs);
    Tensor g_emb;
    dense_backward(c.out.embedding, g_logits, params.classifier, &g_emb);
    if (!grad_embedding.empty())
        for (std::size_t i = 0; i < g_emb.size(); ++i) g_emb[i] += grad_embedding[i];

    const Tensor g_a3 = activation_backward(Activation::tanh, Tensor{}, c.act3, dropout_backward(g_emb, c.mask));
    Tensor g_act2;
    dense_backward(c.act2, g_a3, params.fc_hidden, &g_act2);
    const Tensor g_a2 = activation_backward(Activation::tanh, Tensor{}, c.act2, g_act2);
    Tensor g_act1;
    conv_col_backward(c.act1, g_a2, params.conv2, &g_act1);
    const Tensor g_norm = activation_backward(Activation::tanh, Tensor{}, c.act1, g_act1);
    conv_row_backward(fc.values, instance_norm_backward(g_norm, c.norm), params.conv1);
}

// ---- MLP ------------------------------------------------------------------

MlpHyper MlpHyper::for_rois(std::size_t r, std::vector<std::size_t> hidden, double dropout) {
    return MlpHyper{upper_length(r), std::move(hidden), dropout};
}

MlpParams::MlpParams(const MlpHyper& h) : hyper(h) {
    if (h.hidden.empty()) throw InputError("MLP needs at least one hidden layer");
    std::size_t in = h.input_dim;
    for (std::size_t width : h.hidden) {
        layers.emplace_back(std::vector<std::size_t>{in, width}, std::vector<std::size_t>{width});
        in = width;
    }
    layers.emplace_back(std::vector<std::size_t>{in, 2}, std::vector<std::size_t>{2});
}

MlpParams MlpParams::init(const MlpHyper& h, RngStream& rng) {
    MlpParams p(h);
    for (auto& layer : p.layers) glorot_uniform(layer, layer.weights.extent(0), layer.weights.extent(1), rng);
    return p;
}

ForwardResult mlp_forward(const Tensor& fcvec, const MlpParams& params, Mode mode, RngStream& rng, MlpCache* cache) {
    if (fcvec.rank() != 1 || fcvec.size() != params.hyper.input_dim)
        throw DimensionError("mlp_forward: input has length " + std::to_string(fcvec.size()) + ", expected " +
                             std::to_string(params.hyper.input_dim));
    MlpCache local;
    MlpCache& c = cache ? *cache : local;
    c.input = fcvec;
    c.activations.clear();
    const Tensor* x = &c.input;
    for (std::size_t l = 0; l + 1 < params.layers.size(); ++l) {
        c.activations.push_back(activation(dense_forward(*x, params.layers[l]), Activation::tanh));
        x = &c.activations.back();
    }
    c.out.embedding = dropout(*x, params.hyper.dropout_rate, mode, rng, &c.mask);
    c.out.probs = activation(dense_forward(c.out.embedding, params.layers.back()), Activation::softmax);
    return c.out;
}

void mlp_backward(const MlpCache& c, MlpParams& params, const Tensor& grad_probs, const Tensor& grad_embedding) {
    const Tensor g_logits = activation_backward(Activation::softmax, Tensor{}, c.out.probs, grad_probs);
    Tensor g;
    dense_backward(c.out.embedding, g_logits, params.layers.back(), &g);
    if (!grad_embedding.empty())
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += grad_embedding[i];
    g = dropout_backward(g, c.mask);
    for (std::size_t l = params.layers.size() - 1; l-- > 0;) {
        const Tensor g_pre = activation_backward(Activation::tanh, Tensor{}, c.activations[l], g);
        const Tensor& input = l == 0 ? c.input : c.activations[l - 1];
        Tensor g_in;
        dense_backward(input, g_pre, params.layers[l], l == 0 ? nullptr : &g_in);
        g = std::move(g_in);
    }
}

// ---- dispatch -------------------------------------------------------------

BackboneKind backbone_kind(const ExtractorParams& params) {
    return std::holds_alternative<NiaParams>(params) ? BackboneKind::nia : BackboneKind::mlp;
}

std::string_view backbone_name(BackboneKind kind) { return kind == BackboneKind::nia ? "nia" : "mlp"; }

std::size_t embedding_dim(const ExtractorParams& params) {
    if (const auto* nia = std::get_if<NiaParams>(&params)) return nia->hyper.n_pre;
    return std::get<MlpParams>(params).embedding_dim();
}

std::size_t roi_count(const ExtractorParams& params) {
    if (const auto* nia = std::get_if<NiaParams>(&params)) return nia->hyper.r;
    const std::size_t n = std::get<MlpParams>(params).hyper.input_dim;
    const auto r = static_cast<std::size_t>(std::llround((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(n))) / 2.0));
    return upper_length(r) == n ? r : 0;
}

ForwardResult extractor_forward(const ExtractorParams& params, const FcMatrix& fc, Mode mode, RngStream& rng,
                                ExtractorCache* cache) {
    if (const auto* nia = std::get_if<NiaParams>(&params))
        return nia_forward(fc, *nia, mode, rng, cache ? &cache->nia : nullptr);
    const auto& mlp = std::get<MlpParams>(params);
    if (upper_length(fc.r) != mlp.hyper.input_dim)
        throw DimensionError("mlp: FC with r=" + std::to_string(fc.r) + " does not match input width " +
                             std::to_string(mlp.hyper.input_dim));
    return mlp_forward(vectorize_upper(fc), mlp, mode, rng, cache ? &cache->mlp : nullptr);
}

void extractor_backward(ExtractorParams& params, const FcMatrix& fc, const ExtractorCache& cache,
                        const Tensor& grad_probs, const Tensor& grad_embedding) {
    if (auto* nia = std::get_if<NiaParams>(&params)) {
        nia_backward(fc, cache.nia, *nia, grad_probs, grad_embedding);
        return;
    }
    mlp_backward(cache.mlp, std::get<MlpParams>(params), grad_probs, grad_embedding);
}

std::vector<LayerParams*> extractor_layers(ExtractorParams& params) {
    if (auto* nia = std::get_if<NiaParams>(&params)) return nia->layers();
    std::vector<LayerParams*> out;
    for (auto& l : std::get<MlpParams>(params).layers) out.push_back(&l);
    return out;
}

std::vector<const LayerParams*> extractor_layers(const ExtractorParams& params) {
    if (const auto* nia = std::get_if<NiaParams>(&params)) return nia->layers();
    std::vector<const LayerParams*> out;
    for (const auto& l : std::get<MlpParams>(params).layers) out.push_back(&l);
    return out;
}

}  // namespace msalnet
