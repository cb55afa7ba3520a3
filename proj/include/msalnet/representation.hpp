#pragma once

#include "msalnet/fc.hpp"
#include "msalnet/layers.hpp"

#include <string_view>
#include <variant>
#include <vector>

namespace msalnet {

struct ForwardResult {
    Tensor embedding;  // vector fed to the classifier and to the site regressor
    Tensor probs;      // softmax over the two classes
};

// ---- NIA ------------------------------------------------------------------

struct NiaHyper {
    std::size_t r = 200;
    std::size_t c1 = 64;
    std::size_t c2 = 128;
    std::size_t n_pre = 64;
    double dropout_rate = 0.5;
    double norm_eps = 1e-5;
};

struct NiaParams {
    NiaHyper hyper;
    LayerParams conv1;       // C1 x R
    LayerParams conv2;       // (R, 1, C1, C2)
    LayerParams fc_hidden;   // C2 x N_pre
    LayerParams classifier;  // N_pre x 2

    // Zero-valued parameters with the shapes implied by `hyper`.
    explicit NiaParams(const NiaHyper& hyper = {});
    static NiaParams init(const NiaHyper& hyper, RngStream& rng);

    std::vector<LayerParams*> layers();
    std::vector<const LayerParams*> layers() const;
    static std::vector<std::string_view> layer_names();
};

// Ordered stage list of the forward pass. There is no pooling stage, which
// keeps a one-to-one map between conv2 kernel rows and ROIs.
std::vector<std::string_view> nia_pipeline_stages();

struct NiaCache {
    Tensor conv1_out;
    InstanceNormCache norm;
    Tensor act1;
    Tensor act2;
    Tensor act3;
    DropoutMask mask;
    ForwardResult out;
};

// conv_row -> instance_norm -> tanh -> conv_col -> tanh -> dense -> tanh ->
// dropout = embedding; probs = softmax(dense(embedding)).
ForwardResult nia_forward(const FcMatrix& fc, const NiaParams& params, Mode mode, RngStream& rng,
                          NiaCache* cache = nullptr);

// Accumulates parameter gradients given dLoss/dprobs and an optional extra
// dLoss/dembedding (empty tensor for none).
void nia_backward(const FcMatrix& fc, const NiaCache& cache, NiaParams& params, const Tensor& grad_probs,
                  const Tensor& grad_embedding);

// ---- MLP baseline ---------------------------------------------------------

struct MlpHyper {
    std::size_t input_dim = 19900;
    std::vector<std::size_t> hidden{256, 64};
    double dropout_rate = 0.5;

    // Input width r(r-1)/2 for an R-region FC.
    static MlpHyper for_rois(std::size_t r, std::vector<std::size_t> hidden = {256, 64}, double dropout = 0.5);
};

struct MlpParams {
    MlpHyper hyper;
    std::vector<LayerParams> layers;  // hidden layers followed by the 2-way classifier

    explicit MlpParams(const MlpHyper& hyper = {});
    static MlpParams init(const MlpHyper& hyper, RngStream& rng);
    std::size_t embedding_dim() const { return hyper.hidden.back(); }
};

struct MlpCache {
    Tensor input;
    std::vector<Tensor> activations;  // tanh output of each hidden layer
    DropoutMask mask;
    ForwardResult out;
};

ForwardResult mlp_forward(const Tensor& fcvec, const MlpParams& params, Mode mode, RngStream& rng,
                          MlpCache* cache = nullptr);
void mlp_backward(const MlpCache& cache, MlpParams& params, const Tensor& grad_probs, const Tensor& grad_embedding);

// ---- backbone dispatch ----------------------------------------------------

enum class BackboneKind { nia, mlp };

using ExtractorParams = std::variant<NiaParams, MlpParams>;

struct ExtractorCache {
    NiaCache nia;
    MlpCache mlp;
};

BackboneKind backbone_kind(const ExtractorParams& params);
std::string_view backbone_name(BackboneKind kind);
std::size_t embedding_dim(const ExtractorParams& params);
std::size_t roi_count(const ExtractorParams& params);

ForwardResult extractor_forward(const ExtractorParams& params, const FcMatrix& fc, Mode mode, RngStream& rng,
                                ExtractorCache* cache = nullptr);
void extractor_backward(ExtractorParams& params, const FcMatrix& fc, const ExtractorCache& cache,
                        const Tensor& grad_probs, const Tensor& grad_embedding);

// Feature extractor and classifier parameters, in a fixed order.
std::vector<LayerParams*> extractor_layers(ExtractorParams& params);
std::vector<const LayerParams*> extractor_layers(const ExtractorParams& params);

}  // namespace msalnet
