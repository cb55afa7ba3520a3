#pragma once

#include "msalnet/crossval.hpp"
#include "msalnet/io.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace msalnet {

struct RunPaths {
    std::string manifest;
    std::string out;
};

struct RunConfig {
    std::string profile = "abide-like";
    PipelineConfig pipeline;
    RunPaths paths;

    // Throws InputError naming the offending field.
    void validate() const;
};

// "abide-like": alpha 0.006, d 512, selection on.
// "adhd-like":  alpha 0.008, d 256, selection off.
RunConfig profile_config(std::string_view name);

// Starts from the named profile (field "profile", default abide-like) and
// overrides any field present. Unknown fields are rejected.
RunConfig run_config_from_json(const json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// Complete echo: feeding it back to run_config_from_json reproduces the run.
json to_json(const RunConfig& cfg);

// Applies MSALNET_SEED, if set, to the training and cross-validation seeds.
// Returns the value applied.
std::optional<std::uint64_t> apply_seed_override(RunConfig& cfg);

// Selection needs at least one scale variable with values.
void check_config_against_data(const RunConfig& cfg, const Dataset& data);

}  // namespace msalnet
