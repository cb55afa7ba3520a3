#pragma once

#include "msalnet/fc.hpp"
#include "msalnet/representation.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace msalnet {

struct ImportanceMap {
    Tensor importance;  // length R, min-max normalised to [0, 1]
};

enum class ClassWeightMode {
    average,     // mean of the two class columns of the classifier
    difference,  // class 1 column minus class 0 column (not used by default)
};

// Propagates classifier weights back through the hidden layer onto the
// second convolution kernel, averages over the C1 feature maps, takes the
// absolute value and min-max normalises. A constant map normalises to zeros.
ImportanceMap roi_importance(const NiaParams& params, ClassWeightMode mode = ClassWeightMode::average);

// Indices with importance >= lo, ascending.
std::vector<std::size_t> threshold_importance(const ImportanceMap& map, double lo = 0.5);

// ROI indices ordered by importance desc, index asc.
std::vector<std::size_t> rank_importance(const ImportanceMap& map);

// CSV `roi_index,importance,selected`, sorted by importance desc.
void write_importance_csv(const std::filesystem::path& path, const ImportanceMap& map, double lo = 0.5);

struct EdgeStat {
    std::size_t i = 0;
    std::size_t j = 0;
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;            // two-sided, uncorrected
    double p_corrected = 1.0;  // Bonferroni over all r(r-1)/2 edges
    bool significant = false;
};

struct EdgeTTestResult {
    std::vector<EdgeStat> edges;  // upper-triangle order
    std::vector<std::string> warnings;

    std::size_t significant_count() const;
};

// Welch two-sample t-test per edge with Bonferroni family-wise correction.
EdgeTTestResult edge_ttest(std::span<const FcMatrix> group_a, std::span<const FcMatrix> group_b,
                           double p_threshold = 0.05);

// CSV `i,j,t,p_corrected,significant`.
void write_ttest_csv(const std::filesystem::path& path, const EdgeTTestResult& result);

// Two-sided p-value of Student's t with (possibly fractional) df.
double student_t_two_sided_p(double t, double df);

// Binary undirected graph from the top `density` fraction of |off-diagonal|
// entries (ties broken by upper-triangle order).
std::vector<std::vector<bool>> binarize_by_density(const FcMatrix& fc, double density);

// 2 * triangles / (k (k - 1)) per node, 0 when degree < 2.
Tensor clustering_coefficients(const std::vector<std::vector<bool>>& adjacency);
Tensor clustering_coefficients(const FcMatrix& fc, double density = 0.2);

}  // namespace msalnet
