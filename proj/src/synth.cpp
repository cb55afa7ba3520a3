#include "msalnet/synth.hpp"

#include "msalnet/error.hpp"
#include "msalnet/fc.hpp"
#include "msalnet/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>

namespace msalnet {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
    if (r < 2) throw InputError("synth config: r must be at least 2");
    if (sites.empty()) throw InputError("synth config: sites must not be empty");
    std::set<std::string> ids;
    for (const auto& s : sites) {
        if (s.site_id.empty()) throw InputError("synth config: sites[].site_id must not be empty");
        if (!ids.insert(s.site_id).second) throw InputError("synth config: duplicate site_id " + s.site_id);
        if (s.n_subjects < 1) throw InputError("synth config: sites[].n_subjects must be at least 1");
        if (!(s.effect_strength >= 0.0)) throw InputError("synth config: sites[].effect_strength must be >= 0");
    }
    for (auto roi : class_rois)
        if (roi >= r) throw InputError("synth config: class_rois entry out of range");
    if (!(class_effect >= 0.0)) throw InputError("synth config: class_effect must be >= 0");
    if (t_points < 3) throw InputError("synth config: t_points must be at least 3");
    if (!(noise_sd >= 0.0)) throw InputError("synth config: noise_sd must be >= 0");
    if (!(base_loading >= 0.0)) throw InputError("synth config: base_loading must be >= 0");
}

SynthConfig default_synth_config(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.class_rois = {3, 8, 14, 21, 27};
    for (std::size_t s = 0; s < 5; ++s)
        cfg.sites.push_back({"site" + std::to_string(s), 60, 0.3, 1000 + s});
    return cfg;
}

json to_json(const SynthConfig& cfg) {
    json sites = json::array();
    for (const auto& s : cfg.sites)
        sites.push_back({{"site_id", s.site_id},
                         {"n_subjects", s.n_subjects},
                         {"effect_strength", s.effect_strength},
                         {"effect_seed", s.effect_seed}});
    return {{"r", cfg.r},
            {"sites", sites},
            {"class_rois", cfg.class_rois},
            {"class_effect", cfg.class_effect},
            {"t_points", cfg.t_points},
            {"noise_sd", cfg.noise_sd},
            {"base_rank", cfg.base_rank},
            {"base_loading", cfg.base_loading},
            {"seed", cfg.seed}};
}

namespace {

template <typename T>
T field(const json& doc, const char* key, T fallback, const std::string& where) {
    if (!doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(where + "." + key + ": wrong type");
    }
}

}  // namespace

SynthConfig synth_config_from_json(const json& doc) {
    if (!doc.is_object()) throw InputError("synth config: expected a JSON object");
    static const std::set<std::string> known{"r", "sites", "class_rois", "class_effect", "t_points",
                                             "noise_sd", "base_rank", "base_loading", "seed"};
    for (const auto& [key, _] : doc.items())
        if (!known.count(key)) throw InputError("synth config: unknown field " + key);
    SynthConfig cfg = default_synth_config();
    cfg.r = field(doc, "r", cfg.r, "synth config");
    cfg.class_rois = field(doc, "class_rois", cfg.class_rois, "synth config");
    cfg.class_effect = field(doc, "class_effect", cfg.class_effect, "synth config");
    cfg.t_points = field(doc, "t_points", cfg.t_points, "synth config");
    cfg.noise_sd = field(doc, "noise_sd", cfg.noise_sd, "synth config");
    cfg.base_rank = field(doc, "base_rank", cfg.base_rank, "synth config");
    cfg.base_loading = field(doc, "base_loading", cfg.base_loading, "synth config");
    cfg.seed = field(doc, "seed", cfg.seed, "synth config");
    if (doc.contains("sites")) {
        if (!doc["sites"].is_array()) throw InputError("synth config.sites: expected an array");
        cfg.sites.clear();
        std::size_t i = 0;
        for (const auto& s : doc["sites"]) {
            const std::string where = "synth config.sites[" + std::to_string(i) + "]";
            if (!s.is_object() || !s.contains("site_id")) throw InputError(where + ".site_id: missing");
            SynthSite site;
            site.site_id = field<std::string>(s, "site_id", "", where);
            site.n_subjects = field(s, "n_subjects", site.n_subjects, where);
            site.effect_strength = field(s, "effect_strength", site.effect_strength, where);
            site.effect_seed = field<std::uint64_t>(s, "effect_seed", 1000 + i, where);
            cfg.sites.push_back(site);
            ++i;
        }
    }
    cfg.validate();
    return cfg;
}

json to_json(const GroundTruth& t) {
    json edges = json::array();
    for (const auto& [i, j] : t.class_edges) edges.push_back({i, j});
    json perts = json::object();
    for (std::size_t s = 0; s < t.site_ids.size(); ++s) {
        const auto& v = t.site_perturbations[s].values.values();
        perts[t.site_ids[s]] = std::vector<double>(v.begin(), v.end());
    }
    json subjects = json::array();
    for (std::size_t i = 0; i < t.subject_ids.size(); ++i)
        subjects.push_back({{"subject_id", t.subject_ids[i]}, {"site_id", t.subject_sites[i]}, {"label", t.labels[i]}});
    return {{"class_rois", t.class_rois}, {"class_edges", edges}, {"site_perturbations", perts}, {"subjects", subjects}};
}

Dataset SynthDataset::records() const {
    Dataset out;
    out.reserve(subjects.size());
    for (const auto& s : subjects) out.push_back(s.record);
    return out;
}

FcMatrix site_perturbation(std::size_t r, std::uint64_t seed) {
    RngStream rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(r));
    FcMatrix p(Tensor({r, r}));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = i + 1; j < r; ++j) p(i, j) = p(j, i) = scale * rng.normal();
    return p;
}

Tensor nearest_correlation(const Tensor& cov, double floor) {
    const std::size_t r = cov.extent(0);
    Eigen::MatrixXd m(r, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) m(i, j) = 0.5 * (cov(i, j) + cov(j, i));
    if (!m.allFinite()) throw GenerationError("covariance projection: non-finite input");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw GenerationError("covariance projection: eigendecomposition failed");
    Eigen::VectorXd values = eig.eigenvalues().cwiseMax(floor);
    Eigen::MatrixXd projected = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    Eigen::VectorXd inv = projected.diagonal().cwiseSqrt().cwiseInverse();
    projected = inv.asDiagonal() * projected * inv.asDiagonal();
    if (!projected.allFinite()) throw GenerationError("covariance projection: non-finite result");
    Tensor out({r, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) out(i, j) = i == j ? 1.0 : 0.5 * (projected(i, j) + projected(j, i));
    return out;
}

SynthDataset generate_dataset(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t r = cfg.r;
    RngStream root(cfg.seed);

    // Shared low-rank factor structure.
    Tensor base({r, r});
    {
        RngStream rng = root.split(1);
        Tensor loadings({r, std::max<std::size_t>(cfg.base_rank, 1)});
        for (auto& v : loadings.values()) v = cfg.base_rank ? cfg.base_loading * rng.normal() : 0.0;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < r; ++j) {
                double acc = i == j ? 1.0 : 0.0;
                for (std::size_t f = 0; f < cfg.base_rank; ++f) acc += loadings(i, f) * loadings(j, f);
                base(i, j) = acc;
            }
        base = nearest_correlation(base);
    }

    SynthDataset out;
    auto& truth = out.truth;
    truth.class_rois = cfg.class_rois;
    std::sort(truth.class_rois.begin(), truth.class_rois.end());
    truth.class_rois.erase(std::unique(truth.class_rois.begin(), truth.class_rois.end()), truth.class_rois.end());
    for (std::size_t a = 0; a < truth.class_rois.size(); ++a)
        for (std::size_t b = a + 1; b < truth.class_rois.size(); ++b)
            truth.class_edges.emplace_back(truth.class_rois[a], truth.class_rois[b]);

    std::size_t global = 0;
    for (std::size_t s = 0; s < cfg.sites.size(); ++s) {
        const auto& site = cfg.sites[s];
        truth.site_ids.push_back(site.site_id);
        truth.site_perturbations.push_back(site_perturbation(r, site.effect_seed));
        const FcMatrix& pert = truth.site_perturbations.back();

        // Site-level demographic offsets, so scale variables differ by site.
        RngStream site_rng = root.split(100 + s);
        const double age_mean = site_rng.uniform(10.0, 30.0);
        const double male_rate = site_rng.uniform(0.6, 0.9);
        const double iq_offset = site_rng.normal(0.0, 5.0);

        for (std::size_t n = 0; n < site.n_subjects; ++n, ++global) {
            RngStream rng = root.split(1000 + global);
            const int label = static_cast<int>(n % 2);
            Tensor cov = base;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = i + 1; j < r; ++j) {
                    double v = cov(i, j) + site.effect_strength * pert(i, j) + cfg.noise_sd * rng.normal();
                    cov(i, j) = cov(j, i) = v;
                }
            if (label == 1)
                for (const auto& [i, j] : truth.class_edges) {
                    cov(i, j) += cfg.class_effect;
                    cov(j, i) = cov(i, j);
                }
            const Tensor corr = nearest_correlation(cov);

            Eigen::MatrixXd m(r, r);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < r; ++j) m(i, j) = corr(i, j);
            Eigen::LLT<Eigen::MatrixXd> llt(m);
            if (llt.info() != Eigen::Success) throw GenerationError("covariance projection: Cholesky failed");
            const Eigen::MatrixXd l = llt.matrixL();

            SynthSubject subject;
            const std::string id = site.site_id + "_s" + std::to_string(n);
            subject.timeseries.subject_id = id;
            subject.timeseries.samples = Tensor({cfg.t_points, r});
            Eigen::VectorXd z(r);
            for (std::size_t t = 0; t < cfg.t_points; ++t) {
                for (std::size_t i = 0; i < r; ++i) z(i) = rng.normal();
                const Eigen::VectorXd x = l * z;
                for (std::size_t i = 0; i < r; ++i) subject.timeseries.samples(t, i) = x(i);
            }
            FcResult fc = pearson_fc(subject.timeseries);

            auto& rec = subject.record;
            rec.subject_id = id;
            rec.site_id = site.site_id;
            rec.label = label;
            rec.fc = std::move(fc.fc);
            rec.zero_variance = std::move(fc.zero_variance);
            rec.scales[ScaleVariable::gender] = rng.bernoulli(male_rate) ? 1.0 : 0.0;
            rec.scales[ScaleVariable::age] = std::round(10.0 * rng.normal(age_mean, 3.0)) / 10.0;
            const double iq = rng.normal(105.0 + iq_offset, 12.0);
            rec.scales[ScaleVariable::full_iq] = std::round(iq);
            rec.scales[ScaleVariable::verbal_iq] = std::round(iq + rng.normal(0.0, 6.0));
            rec.scales[ScaleVariable::performance_iq] = std::round(iq + rng.normal(0.0, 6.0));

            truth.subject_ids.push_back(id);
            truth.subject_sites.push_back(site.site_id);
            truth.labels.push_back(label);
            out.subjects.push_back(std::move(subject));
        }
    }
    return out;
}

FcMatrix inject_site_effect(const FcMatrix& fc, const FcMatrix& perturbation, double strength) {
    if (fc.r != perturbation.r) throw DimensionError("inject_site_effect: matrix sizes differ");
    const std::size_t r = fc.r;
    FcMatrix out(Tensor({r, r}));
    for (std::size_t i = 0; i < r; ++i) {
        out(i, i) = 1.0;
        for (std::size_t j = i + 1; j < r; ++j) {
            const double a = fc(i, j) + strength * perturbation(i, j);
            const double b = fc(j, i) + strength * perturbation(j, i);
            out(i, j) = out(j, i) = std::clamp(0.5 * (a + b), -1.0, 1.0);
        }
    }
    return out;
}

fs::path write_synth_dataset(const fs::path& out_dir, const SynthDataset& data, bool write_timeseries) {
    fs::create_directories(out_dir / "fc");
    if (write_timeseries) fs::create_directories(out_dir / "timeseries");
    DatasetManifest manifest;
    manifest.r = data.subjects.empty() ? 0 : data.subjects.front().record.fc.r;
    for (const auto& s : data.subjects) {
        const auto& rec = s.record;
        ManifestEntry e;
        e.subject_id = rec.subject_id;
        e.site_id = rec.site_id;
        e.label = rec.label;
        e.scales = rec.scales;
        e.fc_path = "fc/" + rec.subject_id + ".csv";
        write_fc_csv(out_dir / *e.fc_path, rec.fc);
        if (write_timeseries) {
            e.timeseries_path = "timeseries/" + rec.subject_id + ".csv";
            write_timeseries_csv(out_dir / *e.timeseries_path, s.timeseries);
        }
        manifest.subjects.push_back(std::move(e));
    }
    const fs::path manifest_path = out_dir / "manifest.json";
    save_manifest(manifest_path, manifest);
    write_text_file(out_dir / "ground_truth.json", canonical_dump(to_json(data.truth)));
    return manifest_path;
}

}  // namespace msalnet
