#pragma once

#include "msalnet/dataset.hpp"
#include "msalnet/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msalnet {

struct Confusion {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

struct EvalReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.5;
    Confusion confusion;
    std::optional<double> site_probe_accuracy;
    // e.g. "precision_undefined", "auc_undefined"
    std::vector<std::string> flags;
};

nlohmann::json to_json(const EvalReport& report);

// Metrics from hard predictions. A zero denominator yields 0 and a flag.
EvalReport confusion_and_metrics(std::span<const int> labels, std::span<const int> predictions);

// Mann-Whitney AUC with average ranks for ties. Throws EvaluationError
// unless both classes are present.
double auc_roc(std::span<const int> labels, std::span<const double> scores);

// confusion_and_metrics at threshold 0.5 plus AUC; a single-class label set
// reports AUC 0.5 with the flag "auc_undefined".
EvalReport evaluate_scores(std::span<const int> labels, std::span<const double> scores);

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> train;  // dataset indices, ascending
    std::vector<std::vector<std::size_t>> test;
};

// Per site: seeded shuffle then a contiguous k-way split. Fold f trains on
// every other fold across all sites.
FoldPlan site_stratified_kfold(std::span<const std::string> site_ids, std::size_t k, std::uint64_t seed);
FoldPlan site_stratified_kfold(const Dataset& data, std::size_t k, std::uint64_t seed);

struct ProbeConfig {
    std::size_t epochs = 200;
    double lr = 0.01;
    std::uint64_t seed = 0;
};

struct LabelledEmbedding {
    Tensor embedding;
    std::string site_id;
};

struct ProbeResult {
    double accuracy = 0.0;
    double chance = 0.0;  // largest site prior on the evaluated samples
    std::size_t evaluated = 0;
    std::vector<std::string> excluded_sites;
};

// Linear softmax probe trained by per-sample SGD on `train`, accuracy on
// `test`. Test samples from sites missing in `train` are excluded.
ProbeResult site_probe(std::span<const LabelledEmbedding> train, std::span<const LabelledEmbedding> test,
                       const ProbeConfig& cfg);

// Probe accuracy pooled over a site-stratified k-fold split of `samples`.
ProbeResult site_probe_accuracy(std::span<const LabelledEmbedding> samples, std::size_t k, const ProbeConfig& cfg);

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single value
};

MetricSummary summarize(std::span<const double> values);

}  // namespace msalnet
