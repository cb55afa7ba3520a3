#pragma once

#include "msalnet/adversarial.hpp"
#include "msalnet/io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace msalnet {

struct Checkpoint {
    ExtractorParams extractor;
    std::optional<RegressorParams> regressor;
    std::uint64_t seed = 0;
    json config = json::object();  // free-form echo of the producing run
};

inline constexpr int kCheckpointVersion = 1;

// Writes `path` (JSON manifest) and a sibling `<stem>.bin` holding every
// parameter as little-endian float64, layer by layer, weights then bias.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws InputError on a malformed manifest, a blob of the wrong size or a
// blob whose hash differs from the one recorded in the manifest.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace msalnet
