#pragma once

#include "msalnet/adversarial.hpp"
#include "msalnet/metrics.hpp"
#include "msalnet/site_features.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msalnet {

struct AeSettings {
    bool enabled = true;
    std::size_t d = 512;
    double lr = 1e-5;
    double l2 = 1e-4;
    std::size_t epochs = 200;
    std::size_t patience = 20;
    // Fit on every subject instead of the training split only (leaks test FC
    // into the site features; off by default).
    bool full_dataset = false;
};

struct SelectionSettings {
    bool enabled = true;
    double fraction = 0.3;
};

struct PipelineConfig {
    TrainConfig train;
    BackboneKind backbone = BackboneKind::nia;
    NiaHyper nia;  // r is taken from the data
    std::vector<std::size_t> mlp_hidden{256, 64};
    std::size_t regressor_hidden = 128;
    AeSettings ae;
    SelectionSettings selection;
    ProbeConfig probe;
    std::size_t probe_folds = 5;
    std::size_t validation_folds = 10;  // fold 0 of this split is the validation set
    std::size_t cv_k = 10;
    std::uint64_t cv_seed = 0;
};

struct SiteFeatureModel {
    std::vector<SiteFeatureVector> sites;  // after selection, if any
    std::size_t raw_dim = 0;               // before selection
    std::optional<SelectionResult> selection;
    std::optional<AeFitResult> ae;
    std::vector<std::string> warnings;
};

// AE (or raw FC vectors when disabled) fitted on `train` only, pooled per
// site, then optionally reduced by scale-variable selection.
SiteFeatureModel build_site_features(const Dataset& data, std::span<const std::size_t> train,
                                     const PipelineConfig& cfg, std::uint64_t seed);

struct TrainOutcome {
    FitResult fit;
    SiteFeatureModel site_features;
    EvalReport test;  // includes site_probe_accuracy when >= 2 sites
    // Share of subjects whose regressor output is nearest to their own site
    // vector; nullopt for fewer than two sites.
    std::optional<double> regressor_site_accuracy;
    std::vector<std::size_t> validation;
    std::vector<std::string> warnings;
};

ExtractorParams make_extractor(const PipelineConfig& cfg, std::size_t r, RngStream& rng);

// Eval-mode embeddings of the given subjects.
std::vector<LabelledEmbedding> embed_subjects(const ExtractorParams& extractor, const Dataset& data,
                                              std::span<const std::size_t> subjects);

// Scores p(class 1) on labelled subjects and returns the metrics.
EvalReport evaluate_subjects(const ExtractorParams& extractor, const Dataset& data,
                             std::span<const std::size_t> subjects);

// Site probe over eval embeddings of `subjects`; nullopt with a warning for
// fewer than two sites.
std::optional<ProbeResult> probe_sites(const ExtractorParams& extractor, const Dataset& data,
                                       std::span<const std::size_t> subjects, const PipelineConfig& cfg,
                                       std::vector<std::string>* warnings = nullptr);

std::optional<double> regressor_site_accuracy(const ModelState& state, const Dataset& data,
                                              std::span<const std::size_t> subjects,
                                              std::span<const SiteFeatureVector> sites);

// Full single-split pipeline. The site probe runs on every subject of the
// dataset. Requires labels on every subject used.
TrainOutcome train_and_evaluate(const Dataset& data, std::span<const std::size_t> train,
                                std::span<const std::size_t> test, const PipelineConfig& cfg, std::uint64_t seed);

struct CrossvalResult {
    FoldPlan plan;
    std::vector<TrainOutcome> folds;
};

// Folds run on up to `jobs` threads; results do not depend on `jobs`.
CrossvalResult run_crossval(const Dataset& data, const PipelineConfig& cfg, std::size_t jobs = 1);

// Mean and std of each Table-style column: ACC, AUC, Precision, Recall,
// F1Score, SiteACC.
nlohmann::json crossval_summary(const CrossvalResult& result);
nlohmann::json crossval_report(const CrossvalResult& result);

// Derived seed for fold f.
std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold);

}  // namespace msalnet
