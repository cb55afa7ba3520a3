#include "msalnet/site_features.hpp"

#include "msalnet/error.hpp"
#include "msalnet/io.hpp"
#include "msalnet/log.hpp"
#include "msalnet/optim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace msalnet {

// ---- autoencoder ----------------------------------------------------------

AeParams::AeParams(std::size_t in, std::size_t hidden)
    : encoder({in, hidden}, {hidden}), decoder({hidden, in}, {in}), input_dim(in), d(hidden) {}

AeParams AeParams::init(std::size_t in, std::size_t hidden, RngStream& rng) {
    if (in == 0 || hidden == 0) throw InputError("autoencoder dimensions must be positive");
    AeParams p(in, hidden);
    glorot_uniform(p.encoder, in, hidden, rng);
    glorot_uniform(p.decoder, hidden, in, rng);
    return p;
}

AeForward ae_forward(const Tensor& x, const AeParams& params) {
    AeForward f;
    f.h_pre = dense_forward(x, params.encoder);
    f.h = activation(f.h_pre, Activation::relu);
    f.x_hat = activation(dense_forward(f.h, params.decoder), Activation::tanh);
    return f;
}

Tensor ae_encode(const Tensor& x, const AeParams& params) {
    return activation(dense_forward(x, params.encoder), Activation::relu);
}

namespace {
double euclidean_error(const Tensor& x, const Tensor& x_hat) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - x_hat[i]) * (x[i] - x_hat[i]);
    return std::sqrt(s);
}
}  // namespace

double ae_reconstruction_loss(const AeParams& params, std::span<const Tensor> data) {
    double total = 0.0;
    for (const auto& x : data) total += euclidean_error(x, ae_forward(x, params).x_hat);
    return total / static_cast<double>(data.size());
}

double ae_reconstruction_mse(const AeParams& params, std::span<const Tensor> data) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& x : data) {
        const Tensor x_hat = ae_forward(x, params).x_hat;
        for (std::size_t i = 0; i < x.size(); ++i) total += (x[i] - x_hat[i]) * (x[i] - x_hat[i]);
        count += x.size();
    }
    return total / static_cast<double>(count);
}

AeFitResult ae_fit(std::span<const Tensor> data, const AeFitConfig& cfg, RngStream& rng) {
    if (data.empty()) throw InputError("ae_fit: empty dataset");
    if (cfg.d == 0) throw InputError("ae_fit: hidden dimension d must be >= 1");
    const std::size_t n = data.front().size();
    for (const auto& x : data)
        if (x.size() != n) throw DimensionError("ae_fit: samples have differing lengths");

    AeFitResult result;
    RngStream init_rng = rng.split(0);
    RngStream order_rng = rng.split(1);
    AeParams params = AeParams::init(n, cfg.d, init_rng);
    OptimizerState opt;
    // The penalty l2*|W|^2 contributes 2*l2*W to the weight gradient.
    const OptimizerConfig ocfg{OptimizerKind::adam, cfg.lr, 0.9, 0.999, 1e-8, 2.0 * cfg.l2};
    std::vector<LayerParams*> layers{&params.encoder, &params.decoder};

    double best = ae_reconstruction_loss(params, data);
    result.loss_trace.push_back(best);
    result.params = params;
    std::size_t since_best = 0;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        order_rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (auto* l : layers) l->zero_grad();
            for (std::size_t b = start; b < stop; ++b) {
                const Tensor& x = data[order[b]];
                const AeForward f = ae_forward(x, params);
                const double err = euclidean_error(x, f.x_hat);
                Tensor g_xhat({n});
                if (err > 0.0)
                    for (std::size_t i = 0; i < n; ++i) g_xhat[i] = scale * (f.x_hat[i] - x[i]) / err;
                const Tensor g_out = activation_backward(Activation::tanh, Tensor{}, f.x_hat, g_xhat);
                Tensor g_h;
                dense_backward(f.h, g_out, params.decoder, &g_h);
                const Tensor g_pre = activation_backward(Activation::relu, f.h_pre, f.h, g_h);
                dense_backward(x, g_pre, params.encoder);
            }
            opt.step(layers, ocfg);
        }
        const double loss = ae_reconstruction_loss(params, data);
        if (!std::isfinite(loss)) throw NumericError("ae_fit: non-finite reconstruction loss");
        result.loss_trace.push_back(loss);
        if (loss < best) {
            best = loss;
            result.params = params;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
        if (cfg.loss_epsilon && loss < *cfg.loss_epsilon) break;
    }
    return result;
}

// ---- pooling --------------------------------------------------------------

std::vector<SiteFeatureVector> site_average_pool(std::span<const std::pair<std::string, Tensor>> encodings) {
    std::map<std::string, std::pair<Tensor, std::size_t>> sums;
    for (const auto& [site, h] : encodings) {
        if (site.empty()) throw InputError("site_average_pool: subject without a site label");
        if (h.size() != encodings.front().second.size())
            throw DimensionError("site_average_pool: encodings differ in length");
        auto it = sums.find(site);
        if (it == sums.end()) {
            sums.emplace(site, std::make_pair(h, std::size_t{1}));
            continue;
        }
        for (std::size_t i = 0; i < h.size(); ++i) it->second.first[i] += h[i];
        ++it->second.second;
    }
    std::vector<SiteFeatureVector> out;
    for (auto& [site, acc] : sums) {
        Tensor mean = acc.first;
        for (double& v : mean.data()) v /= static_cast<double>(acc.second);
        out.push_back({site, std::move(mean)});
    }
    return out;
}

std::vector<SiteFeatureVector> site_average_pool(std::span<const std::pair<std::string, Tensor>> encodings,
                                                 std::span<const std::string> known_sites) {
    for (const auto& e : encodings)
        if (std::find(known_sites.begin(), known_sites.end(), e.first) == known_sites.end())
            throw InputError("site_average_pool: unknown site label '" + e.first + "'");
    return site_average_pool(encodings);
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) throw DimensionError("cosine_similarity: lengths differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw InputError("cosine_similarity: zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// ---- selection ------------------------------------------------------------

namespace {
// Returns false when the vector has no spread.
bool zscore_in_place(std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return false;
    for (double& x : v) x = (x - mean) / sd;
    return true;
}

double abs_cosine_or_zero(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::min(1.0, std::abs(dot) / (std::sqrt(na) * std::sqrt(nb)));
}
}  // namespace

SelectionResult select_site_features(std::span<const SiteFeatureVector> z, const ScaleTable& scales,
                                     const SelectionConfig& cfg) {
    if (z.size() < 2) throw InputError("select_site_features: needs at least 2 sites");
    if (!(cfg.fraction > 0.0 && cfg.fraction <= 1.0)) throw InputError("select_site_features: fraction must be in (0, 1]");
    const std::size_t d = z.front().values.size();
    for (const auto& s : z)
        if (s.values.size() != d) throw DimensionError("select_site_features: site vectors differ in length");
    const auto budget = static_cast<std::size_t>(std::floor(cfg.fraction * static_cast<double>(d)));
    if (budget == 0) throw InputError("select_site_features: fraction * d rounds down to zero features");

    // Feature columns across sites, normalised once.
    std::vector<std::vector<double>> columns(d, std::vector<double>(z.size()));
    for (std::size_t f = 0; f < d; ++f) {
        for (std::size_t k = 0; k < z.size(); ++k) columns[f][k] = z[k].values[f];
        if (cfg.zscore && !zscore_in_place(columns[f])) std::fill(columns[f].begin(), columns[f].end(), 0.0);
    }

    SelectionResult result;
    result.votes.assign(d, 0);
    result.mean_similarity.assign(d, 0.0);
    std::size_t used = 0;
    for (ScaleVariable var : kScaleVariables) {
        VariableSimilarity vs;
        vs.variable = var;
        for (const auto& site : z) {
            double sum = 0.0;
            std::size_t count = 0;
            for (const auto& subj : scales) {
                if (subj.site_id != site.site_id || !subj.values[var]) continue;
                sum += *subj.values[var];
                ++count;
            }
            if (count == 0) {
                vs.skipped = true;
                vs.skip_reason = "no values at site " + site.site_id;
                break;
            }
            vs.site_values.push_back(sum / static_cast<double>(count));
        }
        std::vector<double> target = vs.site_values;
        if (!vs.skipped && cfg.zscore && !zscore_in_place(target)) {
            vs.skipped = true;
            vs.skip_reason = "constant across sites";
        }
        if (vs.skipped) {
            result.warnings.push_back("scale variable " + std::string(scale_name(var)) + " skipped: " + vs.skip_reason);
            log::warn(result.warnings.back());
            result.variables.push_back(std::move(vs));
            continue;
        }
        ++used;
        vs.abs_similarity.resize(d);
        for (std::size_t f = 0; f < d; ++f) vs.abs_similarity[f] = abs_cosine_or_zero(columns[f], target);
        std::vector<std::size_t> rank(d);
        std::iota(rank.begin(), rank.end(), 0);
        std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
            return vs.abs_similarity[a] > vs.abs_similarity[b];
        });
        for (std::size_t i = 0; i < budget; ++i) ++result.votes[rank[i]];
        for (std::size_t f = 0; f < d; ++f) result.mean_similarity[f] += vs.abs_similarity[f];
        result.variables.push_back(std::move(vs));
    }
    if (used == 0) throw SelectionError("select_site_features: every scale variable was skipped");
    for (double& m : result.mean_similarity) m /= static_cast<double>(used);

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (result.votes[a] != result.votes[b]) return result.votes[a] > result.votes[b];
        return result.mean_similarity[a] > result.mean_similarity[b];
    });
    result.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(budget));
    for (const auto& site : z) {
        Tensor reduced({budget});
        for (std::size_t i = 0; i < budget; ++i) reduced[i] = site.values[result.selected[i]];
        result.reduced.push_back({site.site_id, std::move(reduced)});
    }
    return result;
}

nlohmann::json selection_report(const SelectionResult& result) {
    json vars = json::array();
    for (const auto& v : result.variables) {
        json entry{{"variable", std::string(scale_name(v.variable))}, {"skipped", v.skipped}};
        if (v.skipped) {
            entry["reason"] = v.skip_reason;
        } else {
            entry["site_values"] = v.site_values;
            entry["abs_similarity"] = v.abs_similarity;
        }
        vars.push_back(std::move(entry));
    }
    json votes = json::array();
    for (std::size_t idx : result.selected) votes.push_back(result.votes[idx]);
    return json{{"selected", result.selected},
                {"selected_votes", votes},
                {"votes", result.votes},
                {"mean_abs_similarity", result.mean_similarity},
                {"variables", vars},
                {"warnings", result.warnings}};
}

std::vector<Tensor> assign_targets(std::span<const std::string> subject_sites,
                                   std::span<const SiteFeatureVector> site_vectors) {
    std::vector<Tensor> targets;
    targets.reserve(subject_sites.size());
    for (const auto& site : subject_sites) {
        auto it = std::find_if(site_vectors.begin(), site_vectors.end(),
                               [&](const SiteFeatureVector& v) { return v.site_id == site; });
        if (it == site_vectors.end()) throw InputError("assign_targets: no site vector for site '" + site + "'");
        targets.push_back(it->values);
    }
    return targets;
}

void write_site_features_csv(const std::filesystem::path& path, std::span<const SiteFeatureVector> sites) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    const std::size_t m = sites.empty() ? 0 : sites.front().values.size();
    out << "site_id";
    for (std::size_t f = 0; f < m; ++f) out << ",f_" << f;
    out << '\n';
    for (const auto& s : sites) {
        out << s.site_id;
        for (double v : s.values.data()) out << ',' << format_double(v);
        out << '\n';
    }
}

std::vector<SiteFeatureVector> read_site_features_csv(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    if (table.header.empty() || table.header[0] != "site_id")
        throw InputError(path.string() + ": site-feature CSV must start with site_id");
    const std::size_t m = table.header.size() - 1;
    std::vector<SiteFeatureVector> out;
    for (const auto& row : table.rows) {
        if (row.size() != m + 1) throw InputError(path.string() + ": ragged row");
        Tensor v({m});
        for (std::size_t f = 0; f < m; ++f) v[f] = parse_double(row[f + 1], path.string());
        out.push_back({row[0], std::move(v)});
    }
    return out;
}

}  // namespace msalnet
