#include "msalnet/interpret.hpp"

#include "msalnet/error.hpp"
#include "msalnet/io.hpp"
#include "msalnet/log.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace msalnet {

ImportanceMap roi_importance(const NiaParams& params, ClassWeightMode mode) {
    const auto& h = params.hyper;
    for (const auto* layer : params.layers()) require_finite(layer->weights, "roi_importance parameters");

    // (N_pre, 2) -> (N_pre)
    std::vector<double> w0(h.n_pre);
    for (std::size_t k = 0; k < h.n_pre; ++k) {
        const double c0 = params.classifier.weights(k, 0);
        const double c1 = params.classifier.weights(k, 1);
        w0[k] = mode == ClassWeightMode::average ? 0.5 * (c0 + c1) : c1 - c0;
    }
    // (C2, N_pre) x (N_pre) -> (C2)
    std::vector<double> w1(h.c2, 0.0);
    for (std::size_t d = 0; d < h.c2; ++d) {
        const auto row = params.fc_hidden.weights.row(d);
        for (std::size_t k = 0; k < h.n_pre; ++k) w1[d] += row[k] * w0[k];
    }
    // (R, C1, C2) x (C2) -> (R, C1), then mean over C1 -> (R)
    Tensor v({h.r});
    const double* w = params.conv2.weights.data().data();
    for (std::size_t r = 0; r < h.r; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < h.c1; ++c) {
            const double* kernel = w + (r * h.c1 + c) * h.c2;
            for (std::size_t d = 0; d < h.c2; ++d) acc += kernel[d] * w1[d];
        }
        v[r] = std::abs(acc / static_cast<double>(h.c1));
    }
    const auto [lo_it, hi_it] = std::minmax_element(v.data().begin(), v.data().end());
    const double lo = *lo_it;
    const double span = *hi_it - lo;
    ImportanceMap map{Tensor({h.r})};
    if (span > 0.0)
        for (std::size_t r = 0; r < h.r; ++r) map.importance[r] = (v[r] - lo) / span;
    // Exact endpoints regardless of rounding.
    if (span > 0.0) {
        map.importance[static_cast<std::size_t>(hi_it - v.data().begin())] = 1.0;
        map.importance[static_cast<std::size_t>(lo_it - v.data().begin())] = 0.0;
    }
    return map;
}

std::vector<std::size_t> threshold_importance(const ImportanceMap& map, double lo) {
    if (!(lo >= 0.0 && lo <= 1.0)) throw InputError("threshold_importance: lo must be in [0, 1]");
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < map.importance.size(); ++r)
        if (map.importance[r] >= lo) out.push_back(r);
    return out;
}

std::vector<std::size_t> rank_importance(const ImportanceMap& map) {
    std::vector<std::size_t> order(map.importance.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return map.importance[a] > map.importance[b]; });
    return order;
}

void write_importance_csv(const std::filesystem::path& path, const ImportanceMap& map, double lo) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "roi_index,importance,selected\n";
    for (std::size_t r : rank_importance(map))
        out << r << ',' << format_double(map.importance[r]) << ',' << (map.importance[r] >= lo ? 1 : 0) << '\n';
}

// ---- t-test ---------------------------------------------------------------

double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

std::size_t EdgeTTestResult::significant_count() const {
    return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const EdgeStat& e) { return e.significant; }));
}

EdgeTTestResult edge_ttest(std::span<const FcMatrix> group_a, std::span<const FcMatrix> group_b, double p_threshold) {
    if (group_a.size() < 2 || group_b.size() < 2) throw InputError("edge_ttest: each group needs at least 2 subjects");
    const std::size_t r = group_a.front().r;
    for (const auto* group : {&group_a, &group_b})
        for (const auto& fc : *group)
            if (fc.r != r) throw DimensionError("edge_ttest: FC matrices differ in size");

    const double na = static_cast<double>(group_a.size());
    const double nb = static_cast<double>(group_b.size());
    const double tests = static_cast<double>(upper_length(r));
    auto moments = [](std::span<const FcMatrix> g, std::size_t i, std::size_t j) {
        double mean = 0.0;
        for (const auto& fc : g) mean += fc(i, j);
        mean /= static_cast<double>(g.size());
        double ss = 0.0;
        for (const auto& fc : g) ss += (fc(i, j) - mean) * (fc(i, j) - mean);
        return std::make_pair(mean, ss / static_cast<double>(g.size() - 1));
    };

    EdgeTTestResult result;
    std::size_t degenerate = 0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = i + 1; j < r; ++j) {
            EdgeStat e;
            e.i = i;
            e.j = j;
            const auto [ma, va] = moments(group_a, i, j);
            const auto [mb, vb] = moments(group_b, i, j);
            const double sa = va / na;
            const double sb = vb / nb;
            const double se2 = sa + sb;
            if (se2 > 0.0) {
                e.t = (ma - mb) / std::sqrt(se2);
                e.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
                e.p = student_t_two_sided_p(e.t, e.df);
            } else {
                ++degenerate;
                e.df = na + nb - 2.0;
            }
            e.p_corrected = std::min(1.0, e.p * tests);
            e.significant = e.p_corrected < p_threshold;
            result.edges.push_back(e);
        }
    }
    if (degenerate > 0) {
        result.warnings.push_back(std::to_string(degenerate) + " edge(s) with zero within-group variance; t set to 0");
        log::warn(result.warnings.back());
    }
    return result;
}

void write_ttest_csv(const std::filesystem::path& path, const EdgeTTestResult& result) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "i,j,t,p_corrected,significant\n";
    for (const auto& e : result.edges)
        out << e.i << ',' << e.j << ',' << format_double(e.t) << ',' << format_double(e.p_corrected) << ','
            << (e.significant ? 1 : 0) << '\n';
}

// ---- clustering -----------------------------------------------------------

std::vector<std::vector<bool>> binarize_by_density(const FcMatrix& fc, double density) {
    if (!(density > 0.0 && density <= 1.0)) throw InputError("clustering: density must be in (0, 1]");
    const std::size_t r = fc.r;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = i + 1; j < r; ++j) edges.emplace_back(i, j);
    std::stable_sort(edges.begin(), edges.end(), [&](const auto& a, const auto& b) {
        return std::abs(fc(a.first, a.second)) > std::abs(fc(b.first, b.second));
    });
    const auto keep = static_cast<std::size_t>(std::floor(density * static_cast<double>(edges.size()) + 1e-9));
    std::vector<std::vector<bool>> adj(r, std::vector<bool>(r, false));
    for (std::size_t e = 0; e < keep; ++e) {
        adj[edges[e].first][edges[e].second] = true;
        adj[edges[e].second][edges[e].first] = true;
    }
    return adj;
}

Tensor clustering_coefficients(const std::vector<std::vector<bool>>& adj) {
    const std::size_t r = adj.size();
    Tensor out({std::max<std::size_t>(r, 1)});
    for (std::size_t v = 0; v < r; ++v) {
        std::vector<std::size_t> nbrs;
        for (std::size_t u = 0; u < r; ++u)
            if (u != v && adj[v][u]) nbrs.push_back(u);
        const std::size_t k = nbrs.size();
        if (k < 2) continue;
        std::size_t links = 0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b)
                if (adj[nbrs[a]][nbrs[b]]) ++links;
        out[v] = 2.0 * static_cast<double>(links) / static_cast<double>(k * (k - 1));
    }
    return out;
}

Tensor clustering_coefficients(const FcMatrix& fc, double density) {
    return clustering_coefficients(binarize_by_density(fc, density));
}

}  // namespace msalnet
