#pragma once

#include "msalnet/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace msalnet {

using json = nlohmann::json;

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Plain comma-separated values without quoting; blank lines are skipped.
CsvTable read_csv(const std::filesystem::path& path);
double parse_double(std::string_view text, std::string_view context);

// 17 significant digits: round-trips every double exactly.
std::string format_double(double v);

// Deterministic JSON text: keys sorted, floats with 17 significant digits,
// non-finite floats written as null, two-space indentation.
std::string canonical_dump(const json& value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

// Git blob object id: SHA-1 of "blob <size>\0" followed by the bytes.
std::string git_blob_hash(std::string_view bytes);
std::string file_content_hash(const std::filesystem::path& path);

// ---- dataset manifest -----------------------------------------------------

struct ManifestEntry {
    std::string subject_id;
    std::string site_id;
    std::optional<int> label;
    std::optional<std::string> fc_path;
    std::optional<std::string> timeseries_path;
    ScaleValues scales;
};

struct DatasetManifest {
    int version = 1;
    std::size_t r = 0;
    std::vector<ManifestEntry> subjects;
};

json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const json& doc);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Reads every referenced FC (or time series, converted with pearson_fc).
// Relative paths resolve against base_dir.
Dataset load_dataset(const DatasetManifest& manifest, const std::filesystem::path& base_dir);

// Hash over the manifest bytes and every referenced file, in manifest order.
std::string dataset_content_hash(const std::filesystem::path& manifest_path, const DatasetManifest& manifest);

}  // namespace msalnet
