#include "msalnet/dataset.hpp"

#include <algorithm>

namespace msalnet {

std::string_view scale_name(ScaleVariable v) {
    switch (v) {
        case ScaleVariable::gender: return "gender";
        case ScaleVariable::age: return "age";
        case ScaleVariable::full_iq: return "fiq";
        case ScaleVariable::verbal_iq: return "viq";
        case ScaleVariable::performance_iq: return "piq";
    }
    return "unknown";
}

bool ScaleValues::any() const {
    return std::any_of(values.begin(), values.end(), [](const auto& v) { return v.has_value(); });
}

std::vector<std::string> distinct_sites(const Dataset& data) {
    std::vector<std::string> sites;
    for (const auto& s : data) sites.push_back(s.site_id);
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    return sites;
}

std::vector<std::string> distinct_sites(const Dataset& data, std::span<const std::size_t> subset) {
    std::vector<std::string> sites;
    for (std::size_t i : subset) sites.push_back(data[i].site_id);
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    return sites;
}

}  // namespace msalnet
