#include "msalnet/config.hpp"

#include "msalnet/error.hpp"

#include <cstdlib>
#include <set>

namespace msalnet {

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    if (!obj.is_object()) throw InputError("config field " + where + ": expected an object");
    for (const auto& [key, _] : obj.items())
        if (!known.count(key)) throw InputError("config field " + (where.empty() ? key : where + "." + key) + ": unknown");
}

template <typename T>
void read(const json& obj, const char* key, T& target, const std::string& where) {
    if (!obj.contains(key)) return;
    const std::string name = where.empty() ? key : where + "." + key;
    try {
        const json& v = obj.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw InputError("config field " + name + ": expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw InputError("config field " + name + ": expected an integer");
            if constexpr (std::is_unsigned_v<T>)
                if (v.is_number_integer() && v.get<long long>() < 0 && !v.is_number_unsigned())
                    throw InputError("config field " + name + ": must be non-negative");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw InputError("config field " + name + ": expected a number");
        }
        target = v.get<T>();
    } catch (const json::exception&) {
        throw InputError("config field " + name + ": wrong type");
    }
}

std::string optimizer_name(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

}  // namespace

void RunConfig::validate() const {
    const auto& p = pipeline;
    p.train.validate();
    if (p.nia.c1 < 1) throw InputError("config field nia.c1: must be positive");
    if (p.nia.c2 < 1) throw InputError("config field nia.c2: must be positive");
    if (p.nia.n_pre < 1) throw InputError("config field nia.n_pre: must be positive");
    if (!(p.nia.norm_eps > 0.0)) throw InputError("config field nia.norm_eps: must be positive");
    if (p.mlp_hidden.empty()) throw InputError("config field mlp.hidden: must not be empty");
    for (auto h : p.mlp_hidden)
        if (h < 1) throw InputError("config field mlp.hidden: entries must be positive");
    if (p.regressor_hidden < 1) throw InputError("config field regressor_hidden: must be positive");
    if (p.ae.d < 1) throw InputError("config field ae.d: must be positive");
    if (!(p.ae.lr > 0.0)) throw InputError("config field ae.lr: must be positive");
    if (!(p.ae.l2 >= 0.0)) throw InputError("config field ae.l2: must be non-negative");
    if (!(p.selection.fraction > 0.0 && p.selection.fraction <= 1.0))
        throw InputError("config field selection.fraction: must be in (0, 1]");
    if (p.probe.epochs < 1) throw InputError("config field probe.epochs: must be positive");
    if (!(p.probe.lr > 0.0)) throw InputError("config field probe.lr: must be positive");
    if (p.probe_folds < 2) throw InputError("config field probe.folds: must be at least 2");
    if (p.validation_folds == 1) throw InputError("config field validation_folds: must be 0 or at least 2");
    if (p.cv_k < 2) throw InputError("config field cv.k: must be at least 2");
    if (profile != "abide-like" && profile != "adhd-like" && profile != "custom")
        throw InputError("config field profile: unknown profile " + profile);
}

RunConfig profile_config(std::string_view name) {
    RunConfig cfg;
    cfg.profile = std::string(name);
    if (name == "abide-like") {
        cfg.pipeline.train.alpha = 0.006;
        cfg.pipeline.ae.d = 512;
        cfg.pipeline.selection.enabled = true;
    } else if (name == "adhd-like") {
        cfg.pipeline.train.alpha = 0.008;
        cfg.pipeline.ae.d = 256;
        cfg.pipeline.selection.enabled = false;
    } else if (name != "custom") {
        throw InputError("config field profile: unknown profile " + std::string(name));
    }
    return cfg;
}

RunConfig run_config_from_json(const json& doc) {
    reject_unknown(doc,
                   {"profile", "seed", "backbone", "train", "nia", "mlp", "regressor_hidden", "ae", "selection", "probe",
                    "validation_folds", "cv", "paths"},
                   "");
    std::string profile = "abide-like";
    read(doc, "profile", profile, "");
    RunConfig cfg = profile_config(profile);
    auto& p = cfg.pipeline;

    read(doc, "seed", p.train.seed, "");
    p.cv_seed = p.train.seed;
    if (doc.contains("backbone")) {
        std::string b;
        read(doc, "backbone", b, "");
        if (b == "nia") p.backbone = BackboneKind::nia;
        else if (b == "mlp") p.backbone = BackboneKind::mlp;
        else throw InputError("config field backbone: expected nia or mlp");
    }
    if (doc.contains("train")) {
        const auto& t = doc["train"];
        reject_unknown(t,
                       {"alpha", "lr_main", "l2", "batch_size", "dropout", "max_epochs", "patience", "epsilon_guard",
                        "adversarial", "optimizer"},
                       "train");
        read(t, "alpha", p.train.alpha, "train");
        read(t, "lr_main", p.train.lr_main, "train");
        read(t, "l2", p.train.l2, "train");
        read(t, "batch_size", p.train.batch_size, "train");
        read(t, "dropout", p.train.dropout, "train");
        read(t, "max_epochs", p.train.max_epochs, "train");
        read(t, "patience", p.train.patience, "train");
        read(t, "epsilon_guard", p.train.epsilon_guard, "train");
        read(t, "adversarial", p.train.adversarial, "train");
        if (t.contains("optimizer")) {
            std::string o;
            read(t, "optimizer", o, "train");
            if (o == "adam") p.train.optimizer = OptimizerKind::adam;
            else if (o == "sgd") p.train.optimizer = OptimizerKind::sgd;
            else throw InputError("config field train.optimizer: expected adam or sgd");
        }
    }
    if (doc.contains("nia")) {
        const auto& n = doc["nia"];
        reject_unknown(n, {"c1", "c2", "n_pre", "norm_eps"}, "nia");
        read(n, "c1", p.nia.c1, "nia");
        read(n, "c2", p.nia.c2, "nia");
        read(n, "n_pre", p.nia.n_pre, "nia");
        read(n, "norm_eps", p.nia.norm_eps, "nia");
    }
    if (doc.contains("mlp")) {
        reject_unknown(doc["mlp"], {"hidden"}, "mlp");
        read(doc["mlp"], "hidden", p.mlp_hidden, "mlp");
    }
    read(doc, "regressor_hidden", p.regressor_hidden, "");
    if (doc.contains("ae")) {
        const auto& a = doc["ae"];
        reject_unknown(a, {"enabled", "d", "lr", "l2", "epochs", "patience", "full_dataset"}, "ae");
        read(a, "full_dataset", p.ae.full_dataset, "ae");
        read(a, "enabled", p.ae.enabled, "ae");
        read(a, "d", p.ae.d, "ae");
        read(a, "lr", p.ae.lr, "ae");
        read(a, "l2", p.ae.l2, "ae");
        read(a, "epochs", p.ae.epochs, "ae");
        read(a, "patience", p.ae.patience, "ae");
    }
    if (doc.contains("selection")) {
        const auto& s = doc["selection"];
        reject_unknown(s, {"enabled", "fraction"}, "selection");
        read(s, "enabled", p.selection.enabled, "selection");
        read(s, "fraction", p.selection.fraction, "selection");
    }
    if (doc.contains("probe")) {
        const auto& s = doc["probe"];
        reject_unknown(s, {"epochs", "lr", "folds"}, "probe");
        read(s, "epochs", p.probe.epochs, "probe");
        read(s, "lr", p.probe.lr, "probe");
        read(s, "folds", p.probe_folds, "probe");
    }
    read(doc, "validation_folds", p.validation_folds, "");
    if (doc.contains("cv")) {
        const auto& c = doc["cv"];
        reject_unknown(c, {"k", "seed"}, "cv");
        read(c, "k", p.cv_k, "cv");
        read(c, "seed", p.cv_seed, "cv");
    }
    if (doc.contains("paths")) {
        const auto& s = doc["paths"];
        reject_unknown(s, {"manifest", "out"}, "paths");
        read(s, "manifest", cfg.paths.manifest, "paths");
        read(s, "out", cfg.paths.out, "paths");
    }
    p.train.lr_ae = p.ae.lr;
    p.probe.seed = p.cv_seed;
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw InputError("config " + path.string() + ": " + e.what());
    }
    return run_config_from_json(doc);
}

json to_json(const RunConfig& cfg) {
    const auto& p = cfg.pipeline;
    const auto& t = p.train;
    return {{"profile", cfg.profile},
            {"seed", t.seed},
            {"backbone", std::string(backbone_name(p.backbone))},
            {"train",
             {{"alpha", t.alpha},
              {"lr_main", t.lr_main},
              {"l2", t.l2},
              {"batch_size", t.batch_size},
              {"dropout", t.dropout},
              {"max_epochs", t.max_epochs},
              {"patience", t.patience},
              {"epsilon_guard", t.epsilon_guard},
              {"adversarial", t.adversarial},
              {"optimizer", optimizer_name(t.optimizer)}}},
            {"nia", {{"c1", p.nia.c1}, {"c2", p.nia.c2}, {"n_pre", p.nia.n_pre}, {"norm_eps", p.nia.norm_eps}}},
            {"mlp", {{"hidden", p.mlp_hidden}}},
            {"regressor_hidden", p.regressor_hidden},
            {"ae",
             {{"enabled", p.ae.enabled},
              {"d", p.ae.d},
              {"lr", p.ae.lr},
              {"l2", p.ae.l2},
              {"epochs", p.ae.epochs},
              {"patience", p.ae.patience},
              {"full_dataset", p.ae.full_dataset}}},
            {"selection", {{"enabled", p.selection.enabled}, {"fraction", p.selection.fraction}}},
            {"probe", {{"epochs", p.probe.epochs}, {"lr", p.probe.lr}, {"folds", p.probe_folds}}},
            {"validation_folds", p.validation_folds},
            {"cv", {{"k", p.cv_k}, {"seed", p.cv_seed}}},
            {"paths", {{"manifest", cfg.paths.manifest}, {"out", cfg.paths.out}}}};
}

std::optional<std::uint64_t> apply_seed_override(RunConfig& cfg) {
    const char* env = std::getenv("MSALNET_SEED");
    if (!env || !*env) return std::nullopt;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') throw InputError("MSALNET_SEED: expected a non-negative integer");
    cfg.pipeline.train.seed = v;
    cfg.pipeline.cv_seed = v;
    cfg.pipeline.probe.seed = v;
    return v;
}

void check_config_against_data(const RunConfig& cfg, const Dataset& data) {
    if (!cfg.pipeline.selection.enabled) return;
    for (auto var : kScaleVariables)
        for (const auto& s : data)
            if (s.scales[var]) return;
    throw InputError("config field selection.enabled: requires scale values for at least one variable");
}

}  // namespace msalnet
