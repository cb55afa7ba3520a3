#pragma once

#include <functional>
#include <span>
#include <string>

namespace msalnet {

// A block of differentiable values and the buffer its analytic gradient is written to.
struct ParamView {
    std::string name;
    std::span<double> values;
    std::span<const double> grads;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_entry;
    std::size_t checked = 0;
};

// Partials with magnitude below this (times max(1, |loss|)) compare on an
// absolute scale.
inline constexpr double kGradCheckFloor = 1e-6;

// Central-difference check of a scalar loss. `compute_gradients` must fill
// every view's `grads` span with the analytic partials at the current point;
// `loss` is re-evaluated with each entry perturbed by +-h in turn.
// Relative error per entry is |a - n| / max(|a|, |n|, kGradCheckFloor * max(1, |loss|)).
GradCheckResult grad_check(const std::function<double()>& loss, const std::function<void()>& compute_gradients,
                           std::span<const ParamView> params, double h = 1e-5);

}  // namespace msalnet
