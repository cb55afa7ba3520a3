#pragma once

#include "msalnet/crossval.hpp"
#include "msalnet/fc.hpp"
#include "msalnet/rng.hpp"
#include "msalnet/tensor.hpp"

#include <vector>

namespace testing {

inline msalnet::Tensor random_tensor(std::vector<std::size_t> shape, msalnet::RngStream& rng, double scale = 1.0) {
    msalnet::Tensor t(std::move(shape));
    for (auto& v : t.values()) v = scale * rng.normal();
    return t;
}

inline msalnet::TimeSeries random_timeseries(std::size_t t, std::size_t r, msalnet::RngStream& rng) {
    return {random_tensor({t, r}, rng), "s"};
}

inline msalnet::FcMatrix random_fc(std::size_t r, msalnet::RngStream& rng, std::size_t t = 40) {
    return msalnet::pearson_fc(random_timeseries(t, r, rng)).fc;
}

// Tiny NIA so finite-difference checks stay fast.
inline msalnet::NiaHyper toy_hyper(std::size_t r = 6) {
    msalnet::NiaHyper h;
    h.r = r;
    h.c1 = 3;
    h.c2 = 4;
    h.n_pre = 5;
    h.dropout_rate = 0.5;
    return h;
}

// Training setup used for the synthetic end-to-end checks.
inline msalnet::PipelineConfig desk_pipeline(bool adversarial) {
    msalnet::PipelineConfig p;
    p.train.alpha = 0.006;
    p.train.lr_main = 1e-3;
    p.train.max_epochs = 40;
    p.train.patience = 20;
    p.train.adversarial = adversarial;
    p.ae.enabled = true;
    p.ae.d = 64;
    p.ae.lr = 1e-3;
    p.ae.epochs = 50;
    p.selection.enabled = false;
    return p;
}

}  // namespace testing
