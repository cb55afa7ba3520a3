#pragma once

#include "msalnet/dataset.hpp"
#include "msalnet/layers.hpp"
#include "msalnet/rng.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace msalnet {

// ---- autoencoder ----------------------------------------------------------

struct AeParams {
    LayerParams encoder;  // input_dim x d
    LayerParams decoder;  // d x input_dim
    std::size_t input_dim = 0;
    std::size_t d = 0;

    AeParams() = default;
    AeParams(std::size_t input_dim, std::size_t d);
    static AeParams init(std::size_t input_dim, std::size_t d, RngStream& rng);
};

struct AeForward {
    Tensor h_pre;
    Tensor h;  // relu(encoder)
    Tensor x_hat;  // tanh(decoder(h)), so reconstructions stay inside the FC range
};

AeForward ae_forward(const Tensor& x, const AeParams& params);
Tensor ae_encode(const Tensor& x, const AeParams& params);

struct AeFitConfig {
    std::size_t d = 512;
    double lr = 1e-5;
    double l2 = 1e-4;
    std::size_t epochs = 200;
    std::size_t patience = 20;
    std::size_t batch_size = 10;
    // Stop as soon as the epoch loss drops below this value; disabled when unset.
    std::optional<double> loss_epsilon;
};

struct AeFitResult {
    AeParams params;
    // Entry 0 is the loss before training; entry e the loss after epoch e.
    std::vector<double> loss_trace;
    std::size_t best_epoch = 0;
};

// Mean per-sample Euclidean reconstruction error.
double ae_reconstruction_loss(const AeParams& params, std::span<const Tensor> data);
double ae_reconstruction_mse(const AeParams& params, std::span<const Tensor> data);

// Minimises ae_reconstruction_loss + l2 * (|W_enc|^2 + |W_dec|^2) with Adam
// and returns the lowest-loss parameters seen.
AeFitResult ae_fit(std::span<const Tensor> data, const AeFitConfig& cfg, RngStream& rng);

// ---- site pooling and selection -------------------------------------------

struct SiteFeatureVector {
    std::string site_id;
    Tensor values;
};

// Per-site mean of the encodings, ordered by site id.
std::vector<SiteFeatureVector> site_average_pool(std::span<const std::pair<std::string, Tensor>> encodings);
// As above, rejecting encodings whose site is not in `known_sites`.
std::vector<SiteFeatureVector> site_average_pool(std::span<const std::pair<std::string, Tensor>> encodings,
                                                 std::span<const std::string> known_sites);

double cosine_similarity(const Tensor& a, const Tensor& b);

struct SubjectScales {
    std::string site_id;
    ScaleValues values;
};
using ScaleTable = std::vector<SubjectScales>;

struct SelectionConfig {
    double fraction = 0.3;
    // z-score feature columns and scale vectors across sites before comparing.
    bool zscore = true;
};

struct VariableSimilarity {
    ScaleVariable variable;
    bool skipped = false;
    std::string skip_reason;
    std::vector<double> site_values;     // per-site means, in Z order
    std::vector<double> abs_similarity;  // one per feature column
};

struct SelectionResult {
    std::vector<std::size_t> selected;  // ranked: votes desc, mean |similarity| desc, index asc
    std::vector<int> votes;
    std::vector<double> mean_similarity;
    std::vector<VariableSimilarity> variables;
    std::vector<SiteFeatureVector> reduced;
    std::vector<std::string> warnings;
};

// Voting selection of floor(fraction * d) site-feature columns by their
// |cosine| similarity with site-level scale vectors.
SelectionResult select_site_features(std::span<const SiteFeatureVector> z, const ScaleTable& scales,
                                     const SelectionConfig& cfg);

nlohmann::json selection_report(const SelectionResult& result);

// Regression target of each subject: its site's feature vector.
std::vector<Tensor> assign_targets(std::span<const std::string> subject_sites,
                                   std::span<const SiteFeatureVector> site_vectors);

// CSV with columns `site_id,f_0..f_{m-1}`.
void write_site_features_csv(const std::filesystem::path& path, std::span<const SiteFeatureVector> sites);
std::vector<SiteFeatureVector> read_site_features_csv(const std::filesystem::path& path);

}  // namespace msalnet
