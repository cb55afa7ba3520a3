#include "msalnet/checkpoint.hpp"
#include "msalnet/config.hpp"
#include "msalnet/crossval.hpp"
#include "msalnet/error.hpp"
#include "msalnet/fc.hpp"
#include "msalnet/interpret.hpp"
#include "msalnet/io.hpp"
#include "msalnet/log.hpp"
#include "msalnet/synth.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace msalnet;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct Inputs {
    DatasetManifest manifest;
    Dataset data;
    std::string hash;
};

Inputs load_inputs(const fs::path& manifest_path) {
    Inputs in;
    in.manifest = load_manifest(manifest_path);
    in.data = load_dataset(in.manifest, manifest_path.parent_path());
    in.hash = dataset_content_hash(manifest_path, in.manifest);
    return in;
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg = path.empty() ? profile_config("abide-like") : load_run_config(path);
    if (auto seed = apply_seed_override(cfg)) log::info("MSALNET_SEED override: " + std::to_string(*seed));
    return cfg;
}

json echo_block(const RunConfig& cfg, const std::string& input_hash) {
    return {{"config", to_json(cfg)}, {"seed", cfg.pipeline.train.seed}, {"input_hash", input_hash},
            {"rng", std::string(RngStream::algorithm)}};
}

std::vector<std::size_t> all_indices(const Dataset& data) {
    std::vector<std::size_t> v(data.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
}

// ---- subcommands ----------------------------------------------------------

int cmd_generate(const std::string& config_path, const std::string& out, bool timeseries) {
    SynthConfig cfg = default_synth_config();
    if (!config_path.empty()) {
        json doc;
        try {
            doc = json::parse(read_text_file(config_path));
        } catch (const json::parse_error& e) {
            throw InputError("config " + config_path + ": " + e.what());
        }
        cfg = synth_config_from_json(doc);
    }
    if (const char* env = std::getenv("MSALNET_SEED"); env && *env) {
        RunConfig dummy;
        apply_seed_override(dummy);
        cfg.seed = dummy.pipeline.train.seed;
    }
    const SynthDataset data = generate_dataset(cfg);
    const fs::path manifest = write_synth_dataset(out, data, timeseries);
    write_text_file(fs::path(out) / "synth_config.json", canonical_dump(to_json(cfg)));
    std::cout << "wrote " << data.subjects.size() << " subjects to " << manifest.string() << '\n';
    return 0;
}

int cmd_fc(const std::string& input, const std::string& out) {
    const TimeSeries ts = read_timeseries_csv(input);
    const FcResult res = pearson_fc(ts);
    for (auto roi : res.zero_variance) log::warn("roi " + std::to_string(roi) + " has zero variance");
    write_fc_csv(out, res.fc);
    return 0;
}

int cmd_sitefeat(const std::string& manifest, const std::string& config, const std::string& out) {
    RunConfig cfg = load_config(config);
    const Inputs in = load_inputs(manifest);
    check_config_against_data(cfg, in.data);
    const auto idx = all_indices(in.data);
    const SiteFeatureModel model = build_site_features(in.data, idx, cfg.pipeline, cfg.pipeline.train.seed);
    fs::create_directories(out);
    write_site_features_csv(fs::path(out) / "site_features.csv", model.sites);
    json report = echo_block(cfg, in.hash);
    report["raw_dim"] = model.raw_dim;
    report["dim"] = model.sites.front().values.size();
    report["sites"] = model.sites.size();
    report["warnings"] = model.warnings;
    report["ae_loss_trace"] = model.ae ? json(model.ae->loss_trace) : json(nullptr);
    report["selection"] = model.selection ? selection_report(*model.selection) : json(nullptr);
    write_text_file(fs::path(out) / "sitefeat_report.json", canonical_dump(report));
    return 0;
}

int cmd_train(const std::string& manifest, const std::string& config, const std::string& out) {
    RunConfig cfg = load_config(config);
    const Inputs in = load_inputs(manifest);
    check_config_against_data(cfg, in.data);
    const auto& p = cfg.pipeline;
    const FoldPlan plan = site_stratified_kfold(in.data, p.cv_k, p.cv_seed);
    const TrainOutcome o = train_and_evaluate(in.data, plan.train[0], plan.test[0], p, p.train.seed);

    fs::create_directories(out);
    {
        std::ofstream log_file(fs::path(out) / "train_log.jsonl");
        for (const auto& e : o.fit.epochs) log_file << to_json(e).dump() << '\n';
    }
    Checkpoint ckpt{o.fit.state.extractor, o.fit.state.regressor, p.train.seed, to_json(cfg)};
    save_checkpoint(fs::path(out) / "model.json", ckpt);

    json report = echo_block(cfg, in.hash);
    report["command"] = "train";
    report["metrics"] = to_json(o.test);
    report["n_train"] = plan.train[0].size() - o.validation.size();
    report["n_validation"] = o.validation.size();
    report["n_test"] = plan.test[0].size();
    report["best_epoch"] = o.fit.best_epoch;
    report["epochs_run"] = o.fit.epochs.size();
    report["adversarial_used"] = o.fit.adversarial_used;
    report["regressor_site_accuracy"] = o.regressor_site_accuracy ? json(*o.regressor_site_accuracy) : json(nullptr);
    report["site_feature_dim"] = o.site_features.sites.front().values.size();
    report["selection"] = o.site_features.selection ? selection_report(*o.site_features.selection) : json(nullptr);
    report["warnings"] = o.warnings;
    write_text_file(fs::path(out) / "report.json", canonical_dump(report));
    std::cout << canonical_dump(report["metrics"]) << '\n';
    return 0;
}

int cmd_crossval(const std::string& manifest, const std::string& config, const std::string& out, std::size_t jobs) {
    RunConfig cfg = load_config(config);
    const Inputs in = load_inputs(manifest);
    check_config_against_data(cfg, in.data);
    const CrossvalResult result = run_crossval(in.data, cfg.pipeline, jobs);
    json report = echo_block(cfg, in.hash);
    report["command"] = "crossval";
    const json cv = crossval_report(result);
    report["folds"] = cv["folds"];
    report["summary"] = cv["summary"];
    fs::create_directories(out);
    write_text_file(fs::path(out) / "crossval_report.json", canonical_dump(report));
    std::cout << canonical_dump(report["summary"]) << '\n';
    return 0;
}

int cmd_interpret(const std::string& checkpoint, const std::string& manifest, const std::string& out, double threshold,
                  double p_threshold, double density) {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    if (backbone_kind(ckpt.extractor) != BackboneKind::nia) throw InputError("importance requires NIA backbone");
    const auto& nia = std::get<NiaParams>(ckpt.extractor);
    const Inputs in = load_inputs(manifest);
    if (in.manifest.r != nia.hyper.r) throw DimensionError("interpret: manifest r differs from the checkpoint");
    fs::create_directories(out);

    const ImportanceMap map = roi_importance(nia);
    write_importance_csv(fs::path(out) / "importance.csv", map, threshold);

    std::vector<FcMatrix> group0, group1;
    for (const auto& s : in.data) {
        if (!s.label) continue;
        (*s.label == 1 ? group1 : group0).push_back(s.fc);
    }
    json summary{{"input_hash", in.hash},
                 {"selected_rois", threshold_importance(map, threshold)},
                 {"threshold", threshold}};
    if (group0.size() >= 2 && group1.size() >= 2) {
        const EdgeTTestResult tt = edge_ttest(group1, group0, p_threshold);
        write_ttest_csv(fs::path(out) / "edges.csv", tt);
        summary["significant_edges"] = tt.significant_count();

        auto mean_fc = [](const std::vector<FcMatrix>& g) {
            FcMatrix m(Tensor({g.front().r, g.front().r}));
            for (const auto& fc : g)
                for (std::size_t k = 0; k < m.values.size(); ++k) m.values[k] += fc.values[k] / static_cast<double>(g.size());
            return m;
        };
        const Tensor c0 = clustering_coefficients(mean_fc(group0), density);
        const Tensor c1 = clustering_coefficients(mean_fc(group1), density);
        std::ofstream cc(fs::path(out) / "clustering.csv");
        cc << "roi_index,class0,class1\n";
        for (std::size_t r = 0; r < c0.size(); ++r) cc << r << ',' << format_double(c0[r]) << ',' << format_double(c1[r]) << '\n';
    } else {
        log::warn("edge t-test skipped: need at least two labelled subjects per class");
    }

    const auto emb = embed_subjects(ckpt.extractor, in.data, all_indices(in.data));
    std::ofstream e(fs::path(out) / "embeddings.csv");
    e << "subject_id,site_id,label";
    for (std::size_t k = 0; k < nia.hyper.n_pre; ++k) e << ",e_" << k;
    e << '\n';
    for (std::size_t i = 0; i < emb.size(); ++i) {
        const auto& s = in.data[i];
        e << s.subject_id << ',' << s.site_id << ',' << (s.label ? std::to_string(*s.label) : "");
        for (double v : emb[i].embedding.values()) e << ',' << format_double(v);
        e << '\n';
    }
    write_text_file(fs::path(out) / "interpret_summary.json", canonical_dump(summary));
    return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& manifest, const std::string& out) {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const Inputs in = load_inputs(manifest);
    RunConfig cfg;
    try {
        cfg = run_config_from_json(ckpt.config);
    } catch (const InputError&) {
        log::warn("checkpoint config echo unreadable; using default probe settings");
    }
    std::vector<std::size_t> labelled;
    for (std::size_t i = 0; i < in.data.size(); ++i)
        if (in.data[i].label) labelled.push_back(i);
    if (labelled.empty()) throw InputError("evaluate: no labelled subjects");
    EvalReport report = evaluate_subjects(ckpt.extractor, in.data, labelled);
    std::vector<std::string> warnings;
    if (auto probe = probe_sites(ckpt.extractor, in.data, all_indices(in.data), cfg.pipeline, &warnings))
        report.site_probe_accuracy = probe->accuracy;
    json doc{{"command", "evaluate"}, {"input_hash", in.hash}, {"metrics", to_json(report)}, {"warnings", warnings},
             {"checkpoint_seed", ckpt.seed}};
    if (!out.empty()) write_text_file(out, canonical_dump(doc));
    std::cout << canonical_dump(doc["metrics"]) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"msalnet: multi-site adversarial connectivity classifier"};
    app.require_subcommand(1);
    bool quiet = false, verbose = false;
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");
    app.add_flag("-v,--verbose", verbose, "Progress messages");

    std::string config, manifest, out, input, checkpoint;
    bool no_timeseries = false;
    std::size_t jobs = 1;
    double threshold = 0.5, p_threshold = 0.05, density = 0.2;

    auto* gen = app.add_subcommand("generate", "Generate a synthetic multi-site dataset");
    gen->add_option("-c,--config", config, "Synthetic dataset config (JSON)");
    gen->add_option("-o,--out", out, "Output directory")->required();
    gen->add_flag("--no-timeseries", no_timeseries, "Write FC matrices only");

    auto* fc = app.add_subcommand("fc", "Pearson FC from a time-series CSV");
    fc->add_option("-i,--input", input, "Time-series CSV")->required();
    fc->add_option("-o,--out", out, "FC CSV")->required();

    auto* site = app.add_subcommand("sitefeat", "Extract site feature vectors");
    auto* train = app.add_subcommand("train", "Train on a held-out split");
    auto* cv = app.add_subcommand("crossval", "Site-stratified k-fold cross-validation");
    for (auto* sub : {site, train, cv}) {
        sub->add_option("-m,--manifest", manifest, "Dataset manifest")->required();
        sub->add_option("-c,--config", config, "Run config (JSON)");
        sub->add_option("-o,--out", out, "Output directory")->required();
    }
    cv->add_option("-j,--jobs", jobs, "Parallel folds")->check(CLI::PositiveNumber);

    auto* interp = app.add_subcommand("interpret", "ROI importance, edge t-tests and embeddings");
    interp->add_option("--checkpoint", checkpoint, "model.json")->required();
    interp->add_option("-m,--manifest", manifest, "Dataset manifest")->required();
    interp->add_option("-o,--out", out, "Output directory")->required();
    interp->add_option("--threshold", threshold, "Importance threshold")->check(CLI::Range(0.0, 1.0));
    interp->add_option("--p", p_threshold, "Corrected p threshold");
    interp->add_option("--density", density, "Edge density for clustering")->check(CLI::Range(0.0, 1.0));

    auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
    eval->add_option("--checkpoint", checkpoint, "model.json")->required();
    eval->add_option("-m,--manifest", manifest, "Dataset manifest")->required();
    eval->add_option("-o,--out", out, "Report JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }
    log::set_level(quiet ? log::Level::quiet : verbose ? log::Level::info : log::Level::warn);

    try {
        if (*gen) return cmd_generate(config, out, !no_timeseries);
        if (*fc) return cmd_fc(input, out);
        if (*site) return cmd_sitefeat(manifest, config, out);
        if (*train) return cmd_train(manifest, config, out);
        if (*cv) return cmd_crossval(manifest, config, out, jobs);
        if (*interp) return cmd_interpret(checkpoint, manifest, out, threshold, p_threshold, density);
        if (*eval) return cmd_evaluate(checkpoint, manifest, out);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const GenerationError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const SelectionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const EvaluationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
