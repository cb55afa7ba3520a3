#include "msalnet/crossval.hpp"

#include "msalnet/error.hpp"
#include "msalnet/log.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace msalnet {

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) { return RngStream(seed).split(1000 + fold).next_u64(); }

SiteFeatureModel build_site_features(const Dataset& data, std::span<const std::size_t> train,
                                     const PipelineConfig& cfg, std::uint64_t seed) {
    if (train.empty()) throw InputError("site features: empty training set");
    std::vector<std::size_t> everyone;
    if (cfg.ae.full_dataset) {
        for (std::size_t i = 0; i < data.size(); ++i) everyone.push_back(i);
        train = everyone;
    }
    SiteFeatureModel model;
    std::vector<Tensor> vectors;
    vectors.reserve(train.size());
    for (auto i : train) vectors.push_back(vectorize_upper(data[i].fc));

    std::vector<std::pair<std::string, Tensor>> encodings;
    encodings.reserve(train.size());
    if (cfg.ae.enabled) {
        AeFitConfig ae_cfg;
        ae_cfg.d = cfg.ae.d;
        ae_cfg.lr = cfg.ae.lr;
        ae_cfg.l2 = cfg.ae.l2;
        ae_cfg.epochs = cfg.ae.epochs;
        ae_cfg.patience = cfg.ae.patience;
        ae_cfg.batch_size = cfg.train.batch_size;
        RngStream rng(seed);
        model.ae = ae_fit(vectors, ae_cfg, rng);
        for (std::size_t n = 0; n < train.size(); ++n)
            encodings.emplace_back(data[train[n]].site_id, ae_encode(vectors[n], model.ae->params));
    } else {
        for (std::size_t n = 0; n < train.size(); ++n) encodings.emplace_back(data[train[n]].site_id, vectors[n]);
    }
    model.sites = site_average_pool(encodings);
    model.raw_dim = model.sites.front().values.size();

    if (cfg.selection.enabled) {
        if (model.sites.size() < 2) {
            model.warnings.push_back("feature selection skipped: fewer than two training sites");
            log::warn(model.warnings.back());
        } else {
            ScaleTable scales;
            for (auto i : train) scales.push_back({data[i].site_id, data[i].scales});
            SelectionConfig sel;
            sel.fraction = cfg.selection.fraction;
            SelectionResult result = select_site_features(model.sites, scales, sel);
            model.warnings.insert(model.warnings.end(), result.warnings.begin(), result.warnings.end());
            model.sites = result.reduced;
            model.selection = std::move(result);
        }
    }
    return model;
}

ExtractorParams make_extractor(const PipelineConfig& cfg, std::size_t r, RngStream& rng) {
    if (cfg.backbone == BackboneKind::nia) {
        NiaHyper h = cfg.nia;
        h.r = r;
        h.dropout_rate = cfg.train.dropout;
        return NiaParams::init(h, rng);
    }
    return MlpParams::init(MlpHyper::for_rois(r, cfg.mlp_hidden, cfg.train.dropout), rng);
}

std::vector<LabelledEmbedding> embed_subjects(const ExtractorParams& extractor, const Dataset& data,
                                              std::span<const std::size_t> subjects) {
    RngStream unused(0);
    std::vector<LabelledEmbedding> out;
    out.reserve(subjects.size());
    for (auto i : subjects)
        out.push_back({extractor_forward(extractor, data[i].fc, Mode::eval, unused).embedding, data[i].site_id});
    return out;
}

EvalReport evaluate_subjects(const ExtractorParams& extractor, const Dataset& data,
                             std::span<const std::size_t> subjects) {
    RngStream unused(0);
    std::vector<int> labels;
    std::vector<double> scores;
    for (auto i : subjects) {
        if (!data[i].label) throw InputError("evaluation: subject " + data[i].subject_id + " has no label");
        labels.push_back(*data[i].label);
        scores.push_back(extractor_forward(extractor, data[i].fc, Mode::eval, unused).probs[1]);
    }
    return evaluate_scores(labels, scores);
}

std::optional<ProbeResult> probe_sites(const ExtractorParams& extractor, const Dataset& data,
                                       std::span<const std::size_t> subjects, const PipelineConfig& cfg,
                                       std::vector<std::string>* warnings) {
    if (distinct_sites(data, subjects).size() < 2) {
        const std::string msg = "site probe skipped: fewer than two sites";
        log::warn(msg);
        if (warnings) warnings->push_back(msg);
        return std::nullopt;
    }
    const auto embeddings = embed_subjects(extractor, data, subjects);
    return site_probe_accuracy(embeddings, cfg.probe_folds, cfg.probe);
}

std::optional<double> regressor_site_accuracy(const ModelState& state, const Dataset& data,
                                              std::span<const std::size_t> subjects,
                                              std::span<const SiteFeatureVector> sites) {
    if (sites.size() < 2 || subjects.empty()) return std::nullopt;
    RngStream unused(0);
    std::size_t correct = 0, counted = 0;
    for (auto i : subjects) {
        const Tensor emb = extractor_forward(state.extractor, data[i].fc, Mode::eval, unused).embedding;
        const Tensor pred = regressor_forward(emb, state.regressor);
        double best = std::numeric_limits<double>::infinity();
        const SiteFeatureVector* nearest = nullptr;
        for (const auto& s : sites) {
            double d = 0.0;
            for (std::size_t j = 0; j < pred.size(); ++j) d += (pred[j] - s.values[j]) * (pred[j] - s.values[j]);
            if (d < best) best = d, nearest = &s;
        }
        bool known = false;
        for (const auto& s : sites) known = known || s.site_id == data[i].site_id;
        if (!known) continue;
        ++counted;
        if (nearest->site_id == data[i].site_id) ++correct;
    }
    if (counted == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(counted);
}

TrainOutcome train_and_evaluate(const Dataset& data, std::span<const std::size_t> train,
                                std::span<const std::size_t> test, const PipelineConfig& cfg, std::uint64_t seed) {
    cfg.train.validate();
    for (auto i : train)
        if (!data[i].label) throw InputError("training: subject " + data[i].subject_id + " has no label");
    if (data.empty()) throw InputError("training: empty dataset");

    RngStream root(seed);
    TrainOutcome out;
    out.site_features = build_site_features(data, train, cfg, root.split(1).next_u64());
    out.warnings = out.site_features.warnings;

    // Validation: fold 0 of a site-stratified split of the training subjects.
    std::vector<std::string> train_sites;
    for (auto i : train) train_sites.push_back(data[i].site_id);
    std::vector<std::size_t> fit_idx;
    if (cfg.validation_folds >= 2 && train.size() >= cfg.validation_folds) {
        const FoldPlan vplan = site_stratified_kfold(train_sites, cfg.validation_folds, root.split(2).next_u64());
        for (auto j : vplan.test[0]) out.validation.push_back(train[j]);
        for (auto j : vplan.train[0]) fit_idx.push_back(train[j]);
    } else {
        fit_idx.assign(train.begin(), train.end());
    }

    std::map<std::string, const Tensor*> target_of;
    for (const auto& s : out.site_features.sites) target_of[s.site_id] = &s.values;
    auto samples_for = [&](std::span<const std::size_t> idx) {
        std::vector<TrainSample> v;
        for (auto i : idx) v.push_back({&data[i].fc, *data[i].label, target_of.at(data[i].site_id)});
        return v;
    };
    const auto fit_samples = samples_for(fit_idx);
    const auto val_samples = samples_for(out.validation);

    RngStream init_rng = root.split(3);
    ExtractorParams extractor = make_extractor(cfg, data.front().fc.r, init_rng);
    ModelState state = make_model_state(std::move(extractor), out.site_features.sites.front().values.size(), init_rng,
                                        cfg.regressor_hidden);
    TrainConfig tc = cfg.train;
    tc.seed = root.split(4).next_u64();
    out.fit = fit(std::move(state), fit_samples, val_samples, tc);
    out.warnings.insert(out.warnings.end(), out.fit.warnings.begin(), out.fit.warnings.end());

    const auto& trained = out.fit.state.extractor;
    if (!test.empty()) out.test = evaluate_subjects(trained, data, test);
    std::vector<std::size_t> everyone(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) everyone[i] = i;
    if (auto probe = probe_sites(trained, data, everyone, cfg, &out.warnings)) out.test.site_probe_accuracy = probe->accuracy;
    if (out.fit.adversarial_used)
        out.regressor_site_accuracy = regressor_site_accuracy(out.fit.state, data, everyone, out.site_features.sites);
    return out;
}

CrossvalResult run_crossval(const Dataset& data, const PipelineConfig& cfg, std::size_t jobs) {
    if (data.empty()) throw InputError("crossval: empty dataset");
    CrossvalResult result;
    result.plan = site_stratified_kfold(data, cfg.cv_k, cfg.cv_seed);
    result.folds.resize(cfg.cv_k);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t f; (f = next++) < cfg.cv_k;) {
            {
                std::lock_guard lock(failure_mutex);
                if (failure) return;
            }
            try {
                log::info("fold " + std::to_string(f));
                result.folds[f] = train_and_evaluate(data, result.plan.train[f], result.plan.test[f], cfg,
                                                     fold_seed(cfg.train.seed, f));
                if (result.plan.test[f].empty()) result.folds[f].test.flags.push_back("empty_test_fold");
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    jobs = std::clamp<std::size_t>(jobs, 1, cfg.cv_k);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return result;
}

nlohmann::json crossval_summary(const CrossvalResult& result) {
    std::map<std::string, std::vector<double>> columns;
    for (const auto& f : result.folds) {
        if (std::find(f.test.flags.begin(), f.test.flags.end(), "empty_test_fold") != f.test.flags.end()) continue;
        columns["ACC"].push_back(f.test.accuracy);
        columns["AUC"].push_back(f.test.auc);
        columns["Precision"].push_back(f.test.precision);
        columns["Recall"].push_back(f.test.recall);
        columns["F1Score"].push_back(f.test.f1);
        if (f.test.site_probe_accuracy) columns["SiteACC"].push_back(*f.test.site_probe_accuracy);
    }
    nlohmann::json out = nlohmann::json::object();
    for (const char* key : {"ACC", "AUC", "Precision", "Recall", "F1Score", "SiteACC"}) {
        const auto& v = columns[key];
        if (v.empty()) {
            out[key] = nullptr;
            continue;
        }
        const MetricSummary s = summarize(v);
        out[key] = {{"mean", s.mean}, {"std", s.std}};
    }
    return out;
}

nlohmann::json crossval_report(const CrossvalResult& result) {
    nlohmann::json folds = nlohmann::json::array();
    for (std::size_t f = 0; f < result.folds.size(); ++f) {
        const auto& o = result.folds[f];
        nlohmann::json j = to_json(o.test);
        j["fold"] = f;
        j["n_train"] = result.plan.train[f].size();
        j["n_test"] = result.plan.test[f].size();
        j["best_epoch"] = o.fit.best_epoch;
        j["epochs_run"] = o.fit.epochs.size();
        j["adversarial_used"] = o.fit.adversarial_used;
        j["regressor_site_accuracy"] = o.regressor_site_accuracy ? nlohmann::json(*o.regressor_site_accuracy) : nlohmann::json(nullptr);
        j["site_feature_dim"] = o.site_features.sites.front().values.size();
        j["warnings"] = o.warnings;
        folds.push_back(j);
    }
    return {{"folds", folds}, {"summary", crossval_summary(result)}};
}

}  // namespace msalnet
