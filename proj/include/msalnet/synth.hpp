#pragma once

#include "msalnet/dataset.hpp"
#include "msalnet/io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace msalnet {

struct SynthSite {
    std::string site_id;
    std::size_t n_subjects = 60;
    double effect_strength = 0.3;
    std::uint64_t effect_seed = 0;
};

struct SynthConfig {
    std::size_t r = 30;
    std::vector<SynthSite> sites;
    std::vector<std::size_t> class_rois;
    double class_effect = 0.4;
    std::size_t t_points = 150;
    double noise_sd = 0.1;  // per-subject jitter of each covariance entry
    std::size_t base_rank = 3;
    double base_loading = 0.4;
    std::uint64_t seed = 0;

    // Throws InputError naming the offending field.
    void validate() const;
};

// r = 30, five sites of 60 subjects at strength 0.3, five class ROIs.
SynthConfig default_synth_config(std::uint64_t seed = 0);

json to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const json& doc);

struct GroundTruth {
    std::vector<std::size_t> class_rois;
    std::vector<std::pair<std::size_t, std::size_t>> class_edges;  // i < j, both in class_rois
    std::vector<std::string> site_ids;
    std::vector<FcMatrix> site_perturbations;  // unscaled, one per site
    std::vector<std::string> subject_ids;
    std::vector<std::string> subject_sites;
    std::vector<int> labels;
};

json to_json(const GroundTruth& truth);

struct SynthSubject {
    SubjectRecord record;
    TimeSeries timeseries;
};

struct SynthDataset {
    std::vector<SynthSubject> subjects;
    GroundTruth truth;

    Dataset records() const;
};

// Symmetric, zero diagonal, off-diagonal N(0, 1/r), drawn from `seed`.
FcMatrix site_perturbation(std::size_t r, std::uint64_t seed);

// Eigenvalues clipped at `floor`, then rescaled to a unit diagonal. Throws
// GenerationError if the result is not finite.
Tensor nearest_correlation(const Tensor& cov, double floor = 1e-4);

SynthDataset generate_dataset(const SynthConfig& cfg);

// fc + strength * perturbation, symmetrised, clamped to [-1, 1], unit diagonal.
FcMatrix inject_site_effect(const FcMatrix& fc, const FcMatrix& perturbation, double strength);

// Writes manifest.json, ground_truth.json, fc/<id>.csv and (optionally)
// timeseries/<id>.csv under `out_dir`. Returns the manifest path.
std::filesystem::path write_synth_dataset(const std::filesystem::path& out_dir, const SynthDataset& data,
                                          bool write_timeseries = true);

}  // namespace msalnet
