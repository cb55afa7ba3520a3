#include "msalnet/checkpoint.hpp"

#include "msalnet/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace msalnet {

namespace fs = std::filesystem;

namespace {

struct NamedLayer {
    std::string name;
    LayerParams* layer;
};

std::vector<NamedLayer> named_layers(ExtractorParams& extractor, std::optional<RegressorParams>& regressor) {
    std::vector<NamedLayer> out;
    if (auto* nia = std::get_if<NiaParams>(&extractor)) {
        const auto names = NiaParams::layer_names();
        const auto layers = nia->layers();
        for (std::size_t i = 0; i < layers.size(); ++i) out.push_back({std::string(names[i]), layers[i]});
    } else {
        auto& mlp = std::get<MlpParams>(extractor);
        for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
            const bool last = i + 1 == mlp.layers.size();
            out.push_back({last ? "classifier" : "hidden" + std::to_string(i), &mlp.layers[i]});
        }
    }
    if (regressor) {
        out.push_back({"regressor.layer1", &regressor->layer1});
        out.push_back({"regressor.layer2", &regressor->layer2});
    }
    return out;
}

void put_f64(std::string& blob, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) blob.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double get_f64(const std::string& blob, std::size_t offset) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[offset + static_cast<std::size_t>(b)])) << (8 * b);
    return std::bit_cast<double>(bits);
}

json tensor_shape(const Tensor& t) { return t.shape(); }

fs::path blob_path(const fs::path& manifest) {
    fs::path p = manifest;
    return p.replace_extension(".bin");
}

}  // namespace

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
    Checkpoint copy = ckpt;
    const auto layers = named_layers(copy.extractor, copy.regressor);

    json doc;
    doc["format"] = "msalnet-checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["seed"] = ckpt.seed;
    doc["config"] = ckpt.config;
    const BackboneKind kind = backbone_kind(ckpt.extractor);
    doc["backbone"] = std::string(backbone_name(kind));
    if (kind == BackboneKind::nia) {
        const auto& h = std::get<NiaParams>(ckpt.extractor).hyper;
        doc["hyper"] = {{"r", h.r}, {"c1", h.c1}, {"c2", h.c2}, {"n_pre", h.n_pre},
                        {"dropout_rate", h.dropout_rate}, {"norm_eps", h.norm_eps}};
    } else {
        const auto& h = std::get<MlpParams>(ckpt.extractor).hyper;
        doc["hyper"] = {{"input_dim", h.input_dim}, {"hidden", h.hidden}, {"dropout_rate", h.dropout_rate}};
    }
    if (ckpt.regressor)
        doc["regressor"] = {{"input_dim", ckpt.regressor->input_dim()},
                            {"hidden", ckpt.regressor->layer1.weights.extent(1)},
                            {"output_dim", ckpt.regressor->output_dim()}};
    else
        doc["regressor"] = nullptr;

    std::string blob;
    json entries = json::array();
    for (const auto& [name, layer] : layers) {
        json e;
        e["name"] = name;
        e["weight_shape"] = tensor_shape(layer->weights);
        e["bias_shape"] = tensor_shape(layer->bias);
        e["offset"] = blob.size();
        for (double v : layer->weights.values()) put_f64(blob, v);
        for (double v : layer->bias.values()) put_f64(blob, v);
        e["count"] = layer->parameter_count();
        entries.push_back(e);
    }
    doc["layers"] = entries;
    doc["blob"] = {{"path", blob_path(path).filename().string()}, {"bytes", blob.size()}, {"sha1", git_blob_hash(blob)}};

    write_text_file(blob_path(path), blob);
    write_text_file(path, canonical_dump(doc));
}

Checkpoint load_checkpoint(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw InputError("checkpoint " + path.string() + ": " + e.what());
    }
    try {
        if (doc.at("format") != "msalnet-checkpoint") throw InputError("checkpoint: unknown format");
        if (doc.at("version").get<int>() != kCheckpointVersion) throw InputError("checkpoint: unsupported version");
        Checkpoint ckpt;
        ckpt.seed = doc.at("seed").get<std::uint64_t>();
        ckpt.config = doc.value("config", json::object());
        const auto& h = doc.at("hyper");
        const std::string backbone = doc.at("backbone").get<std::string>();
        if (backbone == "nia") {
            NiaHyper hyper;
            hyper.r = h.at("r");
            hyper.c1 = h.at("c1");
            hyper.c2 = h.at("c2");
            hyper.n_pre = h.at("n_pre");
            hyper.dropout_rate = h.at("dropout_rate");
            hyper.norm_eps = h.at("norm_eps");
            ckpt.extractor = NiaParams(hyper);
        } else if (backbone == "mlp") {
            MlpHyper hyper;
            hyper.input_dim = h.at("input_dim");
            hyper.hidden = h.at("hidden").get<std::vector<std::size_t>>();
            hyper.dropout_rate = h.at("dropout_rate");
            ckpt.extractor = MlpParams(hyper);
        } else {
            throw InputError("checkpoint: unknown backbone " + backbone);
        }
        if (!doc.at("regressor").is_null()) {
            const auto& r = doc["regressor"];
            ckpt.regressor = RegressorParams(r.at("input_dim"), r.at("output_dim"), r.at("hidden"));
        }

        const fs::path bin = path.parent_path() / doc.at("blob").at("path").get<std::string>();
        const std::string blob = read_text_file(bin);
        if (blob.size() != doc["blob"].at("bytes").get<std::size_t>())
            throw InputError("checkpoint: blob size mismatch");
        if (git_blob_hash(blob) != doc["blob"].at("sha1").get<std::string>())
            throw InputError("checkpoint: blob hash mismatch");

        const auto layers = named_layers(ckpt.extractor, ckpt.regressor);
        const auto& entries = doc.at("layers");
        if (entries.size() != layers.size()) throw InputError("checkpoint: layer count mismatch");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& e = entries[i];
            auto* layer = layers[i].layer;
            if (e.at("name") != layers[i].name ||
                e.at("weight_shape").get<std::vector<std::size_t>>() != layer->weights.shape() ||
                e.at("bias_shape").get<std::vector<std::size_t>>() != layer->bias.shape())
                throw InputError("checkpoint: layer " + layers[i].name + " does not match the hyperparameters");
            std::size_t offset = e.at("offset");
            if (offset + 8 * layer->parameter_count() > blob.size()) throw InputError("checkpoint: blob too short");
            for (auto& v : layer->weights.values()) v = get_f64(blob, offset), offset += 8;
            for (auto& v : layer->bias.values()) v = get_f64(blob, offset), offset += 8;
        }
        return ckpt;
    } catch (const json::exception& e) {
        throw InputError("checkpoint " + path.string() + ": " + e.what());
    }
}

}  // namespace msalnet
