#include "msalnet/metrics.hpp"

#include "msalnet/error.hpp"
#include "msalnet/log.hpp"
#include "msalnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <numeric>

namespace msalnet {

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j{{"accuracy", r.accuracy},
                     {"precision", r.precision},
                     {"recall", r.recall},
                     {"f1", r.f1},
                     {"auc", r.auc},
                     {"confusion", {{"tp", r.confusion.tp}, {"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}}},
                     {"flags", r.flags}};
    j["site_probe_accuracy"] = r.site_probe_accuracy ? nlohmann::json(*r.site_probe_accuracy) : nlohmann::json(nullptr);
    return j;
}

EvalReport confusion_and_metrics(std::span<const int> labels, std::span<const int> predictions) {
    if (labels.empty() || labels.size() != predictions.size())
        throw InputError("confusion_and_metrics: labels and predictions must have equal non-zero length");
    EvalReport r;
    auto& c = r.confusion;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if ((labels[i] != 0 && labels[i] != 1) || (predictions[i] != 0 && predictions[i] != 1))
            throw InputError("confusion_and_metrics: values must be 0 or 1");
        if (labels[i] == 1) (predictions[i] == 1 ? c.tp : c.fn)++;
        else (predictions[i] == 1 ? c.fp : c.tn)++;
    }
    const double tp = static_cast<double>(c.tp);
    r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(labels.size());
    if (c.tp + c.fp > 0) r.precision = tp / static_cast<double>(c.tp + c.fp);
    else r.flags.push_back("precision_undefined");
    if (c.tp + c.fn > 0) r.recall = tp / static_cast<double>(c.tp + c.fn);
    else r.flags.push_back("recall_undefined");
    if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    else r.flags.push_back("f1_undefined");
    return r;
}

double auc_roc(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) throw InputError("auc_roc: labels and scores differ in length");
    const std::size_t n = labels.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] == 1) rank_sum += avg_rank;
        i = j;
    }
    for (int l : labels) pos += l == 1 ? 1 : 0;
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) throw EvaluationError("auc_roc: both classes must be present");
    const double np = static_cast<double>(pos);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(neg));
}

EvalReport evaluate_scores(std::span<const int> labels, std::span<const double> scores) {
    std::vector<int> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] >= 0.5 ? 1 : 0;
    EvalReport r = confusion_and_metrics(labels, preds);
    const bool both = std::count(labels.begin(), labels.end(), 1) > 0 && std::count(labels.begin(), labels.end(), 0) > 0;
    if (both) {
        r.auc = auc_roc(labels, scores);
    } else {
        r.auc = 0.5;
        r.flags.push_back("auc_undefined");
    }
    return r;
}

FoldPlan site_stratified_kfold(std::span<const std::string> site_ids, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw InputError("site_stratified_kfold: k must be at least 2");
    std::map<std::string, std::vector<std::size_t>> by_site;
    for (std::size_t i = 0; i < site_ids.size(); ++i) by_site[site_ids[i]].push_back(i);

    FoldPlan plan;
    plan.k = k;
    plan.test.assign(k, {});
    RngStream root(seed);
    std::uint64_t site_index = 0;
    for (auto& [site, members] : by_site) {
        RngStream rng = root.split(site_index++);
        rng.shuffle(std::span<std::size_t>(members));
        const std::size_t n = members.size();
        if (n < k) log::info("site " + site + " has fewer subjects than folds; some test slices are empty");
        for (std::size_t f = 0; f < k; ++f) {
            const std::size_t begin = f * n / k;
            const std::size_t end = (f + 1) * n / k;
            plan.test[f].insert(plan.test[f].end(), members.begin() + static_cast<std::ptrdiff_t>(begin),
                                members.begin() + static_cast<std::ptrdiff_t>(end));
        }
    }
    plan.train.assign(k, {});
    for (std::size_t f = 0; f < k; ++f) {
        std::sort(plan.test[f].begin(), plan.test[f].end());
        for (std::size_t g = 0; g < k; ++g)
            if (g != f) plan.train[f].insert(plan.train[f].end(), plan.test[g].begin(), plan.test[g].end());
    }
    for (auto& t : plan.train) std::sort(t.begin(), t.end());
    return plan;
}

FoldPlan site_stratified_kfold(const Dataset& data, std::size_t k, std::uint64_t seed) {
    std::vector<std::string> sites;
    sites.reserve(data.size());
    for (const auto& s : data) sites.push_back(s.site_id);
    return site_stratified_kfold(sites, k, seed);
}

ProbeResult site_probe(std::span<const LabelledEmbedding> train, std::span<const LabelledEmbedding> test,
                       const ProbeConfig& cfg) {
    if (train.empty()) throw InputError("site_probe: empty training split");
    std::map<std::string, std::size_t> classes;
    for (const auto& s : train) classes.emplace(s.site_id, 0);
    std::size_t next = 0;
    for (auto& [site, idx] : classes) idx = next++;
    const std::size_t m = classes.size();
    const std::size_t n = train.front().embedding.size();

    ProbeResult result;
    std::map<std::string, bool> missing;
    for (const auto& s : test)
        if (!classes.count(s.site_id)) missing[s.site_id] = true;
    for (const auto& [site, _] : missing) {
        result.excluded_sites.push_back(site);
        log::warn("site probe: site " + site + " absent from the training split; excluded");
    }

    std::vector<double> w(n * m, 0.0);
    std::vector<double> b(m, 0.0);
    std::vector<double> logits(m);
    auto scores = [&](const Tensor& x) {
        for (std::size_t c = 0; c < m; ++c) logits[c] = b[c];
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = x[i];
            if (xi == 0.0) continue;
            const double* wr = &w[i * m];
            for (std::size_t c = 0; c < m; ++c) logits[c] += xi * wr[c];
        }
    };

    if (m >= 2) {
        RngStream rng(cfg.seed);
        std::vector<std::size_t> order(train.size());
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> p(m);
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            rng.shuffle(std::span<std::size_t>(order));
            for (std::size_t idx : order) {
                const auto& s = train[idx];
                if (s.embedding.size() != n) throw DimensionError("site_probe: embeddings differ in length");
                scores(s.embedding);
                const double mx = *std::max_element(logits.begin(), logits.end());
                double z = 0.0;
                for (std::size_t c = 0; c < m; ++c) z += p[c] = std::exp(logits[c] - mx);
                const std::size_t y = classes.at(s.site_id);
                for (std::size_t c = 0; c < m; ++c) p[c] = p[c] / z - (c == y ? 1.0 : 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const double xi = s.embedding[i];
                    if (xi == 0.0) continue;
                    double* wr = &w[i * m];
                    for (std::size_t c = 0; c < m; ++c) wr[c] -= cfg.lr * xi * p[c];
                }
                for (std::size_t c = 0; c < m; ++c) b[c] -= cfg.lr * p[c];
            }
        }
    }

    std::size_t correct = 0;
    std::map<std::string, std::size_t> counts;
    for (const auto& s : test) {
        auto it = classes.find(s.site_id);
        if (it == classes.end()) continue;
        ++result.evaluated;
        ++counts[s.site_id];
        std::size_t pred = 0;
        if (m >= 2) {
            scores(s.embedding);
            pred = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        }
        if (pred == it->second) ++correct;
    }
    if (result.evaluated > 0) {
        result.accuracy = static_cast<double>(correct) / static_cast<double>(result.evaluated);
        std::size_t top = 0;
        for (const auto& [_, c] : counts) top = std::max(top, c);
        result.chance = static_cast<double>(top) / static_cast<double>(result.evaluated);
    }
    return result;
}

ProbeResult site_probe_accuracy(std::span<const LabelledEmbedding> samples, std::size_t k, const ProbeConfig& cfg) {
    std::vector<std::string> sites;
    for (const auto& s : samples) sites.push_back(s.site_id);
    if (std::set<std::string>(sites.begin(), sites.end()).size() < 2)
        throw InputError("site_probe_accuracy: at least 2 sites are required");
    const FoldPlan plan = site_stratified_kfold(sites, k, cfg.seed);
    ProbeResult total;
    std::size_t correct = 0;
    std::map<std::string, std::size_t> counts;
    std::set<std::string> excluded;
    for (std::size_t f = 0; f < k; ++f) {
        if (plan.test[f].empty()) continue;
        std::vector<LabelledEmbedding> tr, te;
        for (auto i : plan.train[f]) tr.push_back(samples[i]);
        for (auto i : plan.test[f]) te.push_back(samples[i]);
        ProbeConfig fold_cfg = cfg;
        fold_cfg.seed = RngStream(cfg.seed).split(f).next_u64();
        const ProbeResult r = site_probe(tr, te, fold_cfg);
        correct += static_cast<std::size_t>(std::llround(r.accuracy * static_cast<double>(r.evaluated)));
        total.evaluated += r.evaluated;
        excluded.insert(r.excluded_sites.begin(), r.excluded_sites.end());
        for (const auto& s : te) ++counts[s.site_id];
    }
    if (total.evaluated > 0) total.accuracy = static_cast<double>(correct) / static_cast<double>(total.evaluated);
    std::size_t top = 0, all = 0;
    for (const auto& [_, c] : counts) top = std::max(top, c), all += c;
    total.chance = all ? static_cast<double>(top) / static_cast<double>(all) : 0.0;
    total.excluded_sites.assign(excluded.begin(), excluded.end());
    return total;
}

MetricSummary summarize(std::span<const double> values) {
    MetricSummary s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

}  // namespace msalnet
