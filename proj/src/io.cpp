#include "msalnet/io.hpp"

#include "msalnet/error.hpp"

#include <openssl/evp.h>

#include <memory>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace msalnet {

namespace fs = std::filesystem;

namespace {
std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t start = cell.find_first_not_of(' ');
        out.push_back(start == std::string::npos ? std::string{} : cell.substr(start));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void dump_into(std::string& out, const json& v, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (v.type()) {
        case json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += inner + json(it.key()).dump() + ": ";
                dump_into(out, it.value(), indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            bool scalars = true;
            for (const auto& e : v) scalars = scalars && !e.is_structured();
            if (scalars) {
                out += "[";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ", ";
                    dump_into(out, v[i], indent + 1);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ",\n";
                out += inner;
                dump_into(out, v[i], indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case json::value_t::number_float: {
            const double d = v.get<double>();
            out += std::isfinite(d) ? format_double(d) : "null";
            return;
        }
        default:
            out += v.dump();
    }
}
}  // namespace

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (!have_header) {
            table.header = split_line(line);
            have_header = true;
        } else {
            table.rows.push_back(split_line(line));
        }
    }
    if (!have_header) throw InputError(path.string() + ": empty CSV");
    return table;
}

double parse_double(std::string_view text, std::string_view context) {
    // strtod accepts the full range of %.17g output including exponents.
    std::string s(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw InputError(std::string(context) + ": cannot parse number '" + s + "'");
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string canonical_dump(const json& value) {
    std::string out;
    dump_into(out, value, 0);
    out += '\n';
    return out;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

std::string git_blob_hash(std::string_view bytes) {
    const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1)
        throw std::runtime_error("SHA-1 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        const unsigned char b = digest[i];
        out += hex[b >> 4];
        out += hex[b & 0xF];
    }
    return out;
}

std::string file_content_hash(const fs::path& path) { return git_blob_hash(read_text_file(path)); }

// ---- manifest -------------------------------------------------------------

json manifest_to_json(const DatasetManifest& manifest) {
    json subjects = json::array();
    for (const auto& e : manifest.subjects) {
        json scales = json::object();
        for (ScaleVariable v : kScaleVariables) {
            const auto& value = e.scales[v];
            scales[std::string(scale_name(v))] = value ? json(*value) : json(nullptr);
        }
        subjects.push_back({{"subject_id", e.subject_id},
                            {"site_id", e.site_id},
                            {"label", e.label ? json(*e.label) : json(nullptr)},
                            {"fc_path", e.fc_path ? json(*e.fc_path) : json(nullptr)},
                            {"timeseries_path", e.timeseries_path ? json(*e.timeseries_path) : json(nullptr)},
                            {"scales", scales}});
    }
    return json{{"version", manifest.version}, {"r", manifest.r}, {"subjects", subjects}};
}

namespace {
template <typename T>
std::optional<T> optional_field(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(where + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
T required_field(const json& obj, const char* key, const std::string& where) {
    auto v = optional_field<T>(obj, key, where);
    if (!v) throw InputError(where + ": missing field '" + key + "'");
    return *v;
}
}  // namespace

DatasetManifest manifest_from_json(const json& doc) {
    if (!doc.is_object()) throw InputError("manifest: top level must be an object");
    DatasetManifest m;
    m.version = required_field<int>(doc, "version", "manifest");
    if (m.version != 1) throw InputError("manifest: unsupported version " + std::to_string(m.version));
    m.r = required_field<std::size_t>(doc, "r", "manifest");
    if (!doc.contains("subjects") || !doc.at("subjects").is_array())
        throw InputError("manifest: missing field 'subjects'");
    std::set<std::string> ids;
    for (const auto& s : doc.at("subjects")) {
        ManifestEntry e;
        e.subject_id = required_field<std::string>(s, "subject_id", "manifest subject");
        const std::string where = "manifest subject " + e.subject_id;
        e.site_id = required_field<std::string>(s, "site_id", where);
        e.label = optional_field<int>(s, "label", where);
        if (e.label && *e.label != 0 && *e.label != 1) throw InputError(where + ": label must be 0, 1 or null");
        e.fc_path = optional_field<std::string>(s, "fc_path", where);
        e.timeseries_path = optional_field<std::string>(s, "timeseries_path", where);
        if (!e.fc_path && !e.timeseries_path) throw InputError(where + ": needs fc_path or timeseries_path");
        if (s.contains("scales") && !s.at("scales").is_null()) {
            for (ScaleVariable v : kScaleVariables)
                e.scales[v] = optional_field<double>(s.at("scales"), std::string(scale_name(v)).c_str(), where);
        }
        if (!ids.insert(e.subject_id).second) throw InputError("manifest: duplicate subject_id " + e.subject_id);
        m.subjects.push_back(std::move(e));
    }
    return m;
}

DatasetManifest load_manifest(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    return manifest_from_json(doc);
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
    write_text_file(path, canonical_dump(manifest_to_json(manifest)));
}

Dataset load_dataset(const DatasetManifest& manifest, const fs::path& base_dir) {
    Dataset data;
    data.reserve(manifest.subjects.size());
    for (const auto& e : manifest.subjects) {
        SubjectRecord rec;
        rec.subject_id = e.subject_id;
        rec.site_id = e.site_id;
        rec.label = e.label;
        rec.scales = e.scales;
        auto resolve = [&](const std::string& p) {
            const fs::path path(p);
            return path.is_absolute() ? path : base_dir / path;
        };
        if (e.fc_path) {
            const fs::path path = resolve(*e.fc_path);
            if (!fs::exists(path)) throw InputError("subject " + e.subject_id + ": missing file " + path.string());
            rec.fc = read_fc_csv(path);
            validate_fc(rec.fc);
            for (std::size_t i = 0; i < rec.fc.r; ++i)
                if (rec.fc(i, i) == 0.0) rec.zero_variance.insert(i);
        } else {
            const fs::path path = resolve(*e.timeseries_path);
            if (!fs::exists(path)) throw InputError("subject " + e.subject_id + ": missing file " + path.string());
            FcResult fc = pearson_fc(read_timeseries_csv(path, e.subject_id));
            rec.fc = std::move(fc.fc);
            rec.zero_variance = std::move(fc.zero_variance);
        }
        if (rec.fc.r != manifest.r)
            throw InputError("subject " + e.subject_id + ": FC has r=" + std::to_string(rec.fc.r) +
                             " but manifest declares r=" + std::to_string(manifest.r));
        data.push_back(std::move(rec));
    }
    return data;
}

std::string dataset_content_hash(const fs::path& manifest_path, const DatasetManifest& manifest) {
    std::string all = file_content_hash(manifest_path);
    const fs::path base = manifest_path.parent_path();
    for (const auto& e : manifest.subjects) {
        const std::string rel = e.fc_path ? *e.fc_path : *e.timeseries_path;
        const fs::path p(rel);
        all += '\n' + file_content_hash(p.is_absolute() ? p : base / p);
    }
    return git_blob_hash(all);
}

}  // namespace msalnet
