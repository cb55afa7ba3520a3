#pragma once

#include "msalnet/tensor.hpp"

#include <filesystem>
#include <set>
#include <string>

namespace msalnet {

// T x R samples: T time points, R regions.
struct TimeSeries {
    Tensor samples;
    std::string subject_id;

    std::size_t time_points() const { return samples.extent(0); }
    std::size_t regions() const { return samples.extent(1); }
};

// Symmetric R x R correlation matrix.
struct FcMatrix {
    std::size_t r = 0;
    Tensor values;

    FcMatrix() = default;
    explicit FcMatrix(Tensor matrix);

    double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
    double& operator()(std::size_t i, std::size_t j) { return values(i, j); }
};

struct FcResult {
    FcMatrix fc;
    // Regions whose time series has zero variance; their rows/columns are 0.
    std::set<std::size_t> zero_variance;
};

// Pearson correlation between every pair of region time series.
FcResult pearson_fc(const TimeSeries& ts);

// Throws InputError unless fc is symmetric with entries in [-1, 1] and a
// unit diagonal (0 allowed for flagged zero-variance regions).
void validate_fc(const FcMatrix& fc);

std::size_t upper_length(std::size_t r);

// Strict upper triangle, row-major (i < j).
Tensor vectorize_upper(const FcMatrix& fc);
FcMatrix devectorize_upper(const Tensor& v, std::size_t r);

// CSV header `t,roi_0,...,roi_{R-1}`, one row per time point.
TimeSeries read_timeseries_csv(const std::filesystem::path& path, std::string subject_id = {});
void write_timeseries_csv(const std::filesystem::path& path, const TimeSeries& ts);

// CSV header `roi_0,...,roi_{R-1}` followed by R rows.
FcMatrix read_fc_csv(const std::filesystem::path& path);
void write_fc_csv(const std::filesystem::path& path, const FcMatrix& fc);

}  // namespace msalnet
