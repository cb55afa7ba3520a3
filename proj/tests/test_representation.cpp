#include <doctest.h>

#include "support.hpp"

#include "msalnet/checkpoint.hpp"
#include "msalnet/error.hpp"
#include "msalnet/gradcheck.hpp"
#include "msalnet/representation.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace msalnet;

namespace {

FcMatrix permute(const FcMatrix& fc, const std::vector<std::size_t>& perm) {
    Tensor out({fc.r, fc.r});
    for (std::size_t i = 0; i < fc.r; ++i)
        for (std::size_t j = 0; j < fc.r; ++j) out(i, j) = fc(perm[i], perm[j]);
    return FcMatrix(out);
}

std::vector<ParamView> views_of(std::vector<LayerParams*> layers) {
    std::vector<ParamView> v;
    for (auto* l : layers) {
        v.push_back({"w", l->weights.data(), l->grad_weights.data()});
        v.push_back({"b", l->bias.data(), l->grad_bias.data()});
    }
    return v;
}

}  // namespace

TEST_CASE("nia shapes") {
    RngStream rng(1);
    const NiaHyper h = testing::toy_hyper(7);
    const NiaParams p = NiaParams::init(h, rng);
    CHECK(p.conv1.weights.shape() == std::vector<std::size_t>{3, 7});
    CHECK(p.conv2.weights.shape() == std::vector<std::size_t>{7, 1, 3, 4});
    CHECK(p.fc_hidden.weights.shape() == std::vector<std::size_t>{4, 5});
    CHECK(p.classifier.weights.shape() == std::vector<std::size_t>{5, 2});
    NiaCache cache;
    const ForwardResult out = nia_forward(testing::random_fc(7, rng), p, Mode::train, rng, &cache);
    CHECK(out.embedding.size() == 5);
    CHECK(out.probs.size() == 2);
    CHECK(out.probs[0] + out.probs[1] == doctest::Approx(1.0));
    CHECK(NiaParams::layer_names() == std::vector<std::string_view>{"conv1", "conv2", "fc_hidden", "classifier"});
    CHECK(embedding_dim(ExtractorParams(p)) == 5);
    CHECK(roi_count(ExtractorParams(p)) == 7);

    CHECK_THROWS_AS(nia_forward(testing::random_fc(6, rng), p, Mode::eval, rng), DimensionError);
}

TEST_CASE("zero weights give uniform class probabilities") {
    RngStream rng(2);
    const NiaParams nia(testing::toy_hyper(5));
    const ForwardResult a = nia_forward(testing::random_fc(5, rng), nia, Mode::eval, rng);
    CHECK(a.probs[0] == 0.5);
    CHECK(a.probs[1] == 0.5);
    const MlpParams mlp(MlpHyper::for_rois(5, {4, 3}));
    const ForwardResult b = mlp_forward(vectorize_upper(testing::random_fc(5, rng)), mlp, Mode::eval, rng);
    CHECK(b.probs[0] == 0.5);
    CHECK(MlpHyper::for_rois(200).input_dim == 19900);
}

TEST_CASE("there is no pooling stage") {
    const auto stages = nia_pipeline_stages();
    CHECK(!stages.empty());
    for (auto s : stages) CHECK(s.find("pool") == std::string_view::npos);
}

TEST_CASE("relabelling ROIs together with the kernels leaves the output unchanged") {
    RngStream rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t r = 4 + rng.below(6);
        const NiaParams p = NiaParams::init(testing::toy_hyper(r), rng);
        const FcMatrix fc = testing::random_fc(r, rng);
        std::vector<std::size_t> perm(r);
        for (std::size_t i = 0; i < r; ++i) perm[i] = i;
        rng.shuffle(std::span<std::size_t>(perm));

        NiaParams q = p;
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t j = 0; j < r; ++j) q.conv1.weights(c, j) = p.conv1.weights(c, perm[j]);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t c1 = 0; c1 < 3; ++c1)
                for (std::size_t c2 = 0; c2 < 4; ++c2)
                    q.conv2.weights[(i * 3 + c1) * 4 + c2] = p.conv2.weights[(perm[i] * 3 + c1) * 4 + c2];

        const ForwardResult a = nia_forward(fc, p, Mode::eval, rng);
        const ForwardResult b = nia_forward(permute(fc, perm), q, Mode::eval, rng);
        for (std::size_t k = 0; k < a.embedding.size(); ++k) CHECK(std::abs(a.embedding[k] - b.embedding[k]) < 1e-12);
        CHECK(std::abs(a.probs[1] - b.probs[1]) < 1e-12);
    }
}

TEST_CASE("eval mode is deterministic, train mode applies dropout") {
    RngStream rng(4);
    const NiaParams p = NiaParams::init(testing::toy_hyper(6), rng);
    const FcMatrix fc = testing::random_fc(6, rng);
    RngStream a(9), b(10);
    CHECK(nia_forward(fc, p, Mode::eval, a).embedding == nia_forward(fc, p, Mode::eval, b).embedding);
    RngStream c(9), d(9);
    CHECK(nia_forward(fc, p, Mode::train, c).embedding == nia_forward(fc, p, Mode::train, d).embedding);
}

TEST_CASE("nia gradients at R=8") {
    RngStream rng(5);
    NiaParams p = NiaParams::init(testing::toy_hyper(8), rng);
    for (auto* l : p.layers())
        for (auto& b : l->bias.values()) b = 0.1 * rng.normal();
    const FcMatrix fc = testing::random_fc(8, rng);
    const Tensor g_probs = testing::random_tensor({2}, rng);
    const Tensor g_emb = testing::random_tensor({5}, rng);
    const RngStream start = rng.split(1);

    auto loss = [&] {
        RngStream d = start;
        const ForwardResult out = nia_forward(fc, p, Mode::train, d);
        double s = 0.0;
        for (std::size_t i = 0; i < 2; ++i) s += out.probs[i] * g_probs[i];
        for (std::size_t i = 0; i < 5; ++i) s += out.embedding[i] * g_emb[i];
        return s;
    };
    auto grads = [&] {
        RngStream d = start;
        NiaCache cache;
        nia_forward(fc, p, Mode::train, d, &cache);
        for (auto* l : p.layers()) l->zero_grad();
        nia_backward(fc, cache, p, g_probs, g_emb);
    };
    auto views = views_of(p.layers());
    views.erase(views.begin() + 1);  // conv1 bias: identically zero under instance norm
    const GradCheckResult res = grad_check(loss, grads, views);
    CHECK(res.max_relative_error < 1e-4);
    CHECK(res.checked > 0);
}

TEST_CASE("mlp gradients") {
    RngStream rng(6);
    MlpParams p = MlpParams::init(MlpHyper::for_rois(6, {7, 4}), rng);
    const Tensor x = vectorize_upper(testing::random_fc(6, rng));
    const Tensor g_probs = testing::random_tensor({2}, rng);
    const RngStream start = rng.split(1);
    auto loss = [&] {
        RngStream d = start;
        const ForwardResult out = mlp_forward(x, p, Mode::train, d);
        return out.probs[0] * g_probs[0] + out.probs[1] * g_probs[1];
    };
    auto grads = [&] {
        RngStream d = start;
        MlpCache cache;
        mlp_forward(x, p, Mode::train, d, &cache);
        for (auto& l : p.layers) l.zero_grad();
        mlp_backward(cache, p, g_probs, Tensor());
    };
    std::vector<LayerParams*> layers;
    for (auto& l : p.layers) layers.push_back(&l);
    CHECK(grad_check(loss, grads, views_of(layers)).max_relative_error < 1e-4);
}

TEST_CASE("checkpoint round trip is bit exact") {
    const auto dir = std::filesystem::temp_directory_path() / "msalnet_test_ckpt";
    std::filesystem::create_directories(dir);
    RngStream rng(7);
    for (bool mlp : {false, true}) {
        ExtractorParams ex = mlp ? ExtractorParams(MlpParams::init(MlpHyper::for_rois(6, {5, 4}), rng))
                                 : ExtractorParams(NiaParams::init(testing::toy_hyper(6), rng));
        Checkpoint ck{ex, RegressorParams::init(embedding_dim(ex), 3, rng, 6), 77, json{{"note", "x"}}};
        save_checkpoint(dir / "model.json", ck);
        const Checkpoint back = load_checkpoint(dir / "model.json");
        CHECK(back.seed == 77);
        CHECK(back.config == ck.config);
        CHECK(backbone_kind(back.extractor) == backbone_kind(ex));
        const auto a = extractor_layers(ck.extractor);
        const auto b = extractor_layers(back.extractor);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i]->weights == b[i]->weights);
            CHECK(a[i]->bias == b[i]->bias);
        }
        REQUIRE(back.regressor.has_value());
        CHECK(back.regressor->layer2.weights == ck.regressor->layer2.weights);

        const FcMatrix fc = testing::random_fc(6, rng);
        RngStream u(0);
        CHECK(extractor_forward(ex, fc, Mode::eval, u).probs == extractor_forward(back.extractor, fc, Mode::eval, u).probs);
    }

    // A flipped byte in the blob is caught by the hash.
    {
        std::fstream f(dir / "model.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(3);
        f.put('\x7f');
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "model.json"), InputError);
    std::filesystem::resize_file(dir / "model.bin", 8);
    CHECK_THROWS_AS(load_checkpoint(dir / "model.json"), InputError);
    std::filesystem::remove_all(dir);
}
