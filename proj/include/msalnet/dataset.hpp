#pragma once

#include "msalnet/fc.hpp"

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace msalnet {

enum class ScaleVariable { gender, age, full_iq, verbal_iq, performance_iq };

inline constexpr std::array<ScaleVariable, 5> kScaleVariables{ScaleVariable::gender, ScaleVariable::age,
                                                               ScaleVariable::full_iq, ScaleVariable::verbal_iq,
                                                               ScaleVariable::performance_iq};

// Names used in manifests and reports.
std::string_view scale_name(ScaleVariable v);

// Gender is coded 1 = male, 0 = female.
struct ScaleValues {
    std::array<std::optional<double>, 5> values{};

    std::optional<double>& operator[](ScaleVariable v) { return values[static_cast<std::size_t>(v)]; }
    const std::optional<double>& operator[](ScaleVariable v) const { return values[static_cast<std::size_t>(v)]; }
    bool any() const;
};

struct SubjectRecord {
    std::string subject_id;
    std::string site_id;
    std::optional<int> label;  // 0 = control, 1 = patient
    FcMatrix fc;
    std::set<std::size_t> zero_variance;
    ScaleValues scales;
};

using Dataset = std::vector<SubjectRecord>;

// Sorted, de-duplicated site ids.
std::vector<std::string> distinct_sites(const Dataset& data);
std::vector<std::string> distinct_sites(const Dataset& data, std::span<const std::size_t> subset);

}  // namespace msalnet
