#include "msalnet/gradcheck.hpp"

#include "msalnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace msalnet {

GradCheckResult grad_check(const std::function<double()>& loss, const std::function<void()>& compute_gradients,
                           std::span<const ParamView> params, double h) {
    if (!(h >= 1e-7 && h <= 1e-3)) throw InputError("grad_check: step h must lie in [1e-7, 1e-3]");
    compute_gradients();
    // Copy analytic partials first: loss() may reuse the gradient buffers.
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& view : params) {
        analytic.emplace_back(view.grads.begin(), view.grads.end());
        for (double g : analytic.back())
            if (!std::isfinite(g)) throw NumericError("grad_check: non-finite analytic gradient in " + view.name);
    }

    // Central differences carry roundoff of order |loss| * eps / h.
    const double floor = kGradCheckFloor * std::max(1.0, std::abs(loss()));
    GradCheckResult result;
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto values = params[p].values;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + h;
            const double up = loss();
            values[i] = saved - h;
            const double down = loss();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[p][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), floor});
            const double err = std::abs(a - numeric) / denom;
            ++result.checked;
            if (err > result.max_relative_error || !std::isfinite(err)) {
                result.max_relative_error = err;
                result.worst_entry = params[p].name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return result;
}

}  // namespace msalnet
