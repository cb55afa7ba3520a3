#include "msalnet/fc.hpp"

#include "msalnet/error.hpp"
#include "msalnet/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace msalnet {

FcMatrix::FcMatrix(Tensor matrix) : values(std::move(matrix)) {
    if (values.rank() != 2 || values.extent(0) != values.extent(1))
        throw DimensionError("FC matrix must be square, got " + values.shape_string());
    r = values.extent(0);
}

FcResult pearson_fc(const TimeSeries& ts) {
    if (ts.samples.rank() != 2) throw InputError("time series must be a T x R matrix");
    const std::size_t t = ts.time_points();
    const std::size_t r = ts.regions();
    if (t < 3) throw InputError("time series " + ts.subject_id + " has " + std::to_string(t) + " time points; need >= 3");
    require_finite(ts.samples, "time series " + ts.subject_id);

    // Column-major copy of the centered series for contiguous dot products.
    std::vector<double> centered(r * t);
    std::vector<double> sum_sq(r, 0.0);
    FcResult result;
    for (std::size_t j = 0; j < r; ++j) {
        double mean = 0.0;
        double raw_sq = 0.0;
        for (std::size_t k = 0; k < t; ++k) {
            mean += ts.samples(k, j);
            raw_sq += ts.samples(k, j) * ts.samples(k, j);
        }
        mean /= static_cast<double>(t);
        double* col = centered.data() + j * t;
        for (std::size_t k = 0; k < t; ++k) {
            col[k] = ts.samples(k, j) - mean;
            sum_sq[j] += col[k] * col[k];
        }
        if (sum_sq[j] <= 1e-24 * std::max(1.0, raw_sq)) result.zero_variance.insert(j);
    }

    Tensor m({r, r});
    for (std::size_t i = 0; i < r; ++i) {
        const bool flat_i = result.zero_variance.count(i) > 0;
        m(i, i) = flat_i ? 0.0 : 1.0;
        if (flat_i) continue;
        const double* xi = centered.data() + i * t;
        for (std::size_t j = i + 1; j < r; ++j) {
            if (result.zero_variance.count(j)) continue;
            const double* xj = centered.data() + j * t;
            double cross = 0.0;
            for (std::size_t k = 0; k < t; ++k) cross += xi[k] * xj[k];
            const double corr = std::clamp(cross / (std::sqrt(sum_sq[i]) * std::sqrt(sum_sq[j])), -1.0, 1.0);
            m(i, j) = corr;
            m(j, i) = corr;
        }
    }
    result.fc = FcMatrix(std::move(m));
    return result;
}

void validate_fc(const FcMatrix& fc) {
    if (fc.values.rank() != 2 || fc.values.extent(0) != fc.r || fc.values.extent(1) != fc.r)
        throw InputError("FC matrix shape does not match r=" + std::to_string(fc.r));
    for (std::size_t i = 0; i < fc.r; ++i) {
        const double d = fc(i, i);
        if (d != 1.0 && d != 0.0) throw InputError("FC diagonal entry " + std::to_string(i) + " is not 1");
        for (std::size_t j = 0; j < fc.r; ++j) {
            const double v = fc(i, j);
            if (!std::isfinite(v) || v < -1.0 || v > 1.0)
                throw InputError("FC entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside [-1, 1]");
            if (v != fc(j, i))
                throw InputError("FC matrix not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
}

std::size_t upper_length(std::size_t r) { return r * (r - 1) / 2; }

Tensor vectorize_upper(const FcMatrix& fc) {
    if (fc.r < 2) throw InputError("vectorize_upper requires r >= 2");
    std::vector<double> out;
    out.reserve(upper_length(fc.r));
    for (std::size_t i = 0; i < fc.r; ++i)
        for (std::size_t j = i + 1; j < fc.r; ++j) out.push_back(fc(i, j));
    return Tensor::vector(std::move(out));
}

FcMatrix devectorize_upper(const Tensor& v, std::size_t r) {
    if (r < 2 || v.size() != upper_length(r))
        throw InputError("devectorize_upper: length " + std::to_string(v.size()) + " does not equal r(r-1)/2 for r=" +
                         std::to_string(r));
    Tensor m({r, r});
    std::size_t k = 0;
    for (std::size_t i = 0; i < r; ++i) {
        m(i, i) = 1.0;
        for (std::size_t j = i + 1; j < r; ++j) {
            m(i, j) = v[k];
            m(j, i) = v[k];
            ++k;
        }
    }
    return FcMatrix(std::move(m));
}

TimeSeries read_timeseries_csv(const std::filesystem::path& path, std::string subject_id) {
    const CsvTable table = read_csv(path);
    if (table.header.empty() || table.header[0] != "t")
        throw InputError(path.string() + ": time-series header must start with 't'");
    const std::size_t r = table.header.size() - 1;
    for (std::size_t j = 0; j < r; ++j)
        if (table.header[j + 1] != "roi_" + std::to_string(j))
            throw InputError(path.string() + ": expected column roi_" + std::to_string(j));
    if (r == 0 || table.rows.empty()) throw InputError(path.string() + ": empty time series");
    Tensor samples({table.rows.size(), r});
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        const auto& row = table.rows[k];
        if (row.size() != r + 1) throw InputError(path.string() + ": row " + std::to_string(k + 2) + " has wrong width");
        for (std::size_t j = 0; j < r; ++j) samples(k, j) = parse_double(row[j + 1], path.string());
    }
    return TimeSeries{std::move(samples), std::move(subject_id)};
}

void write_timeseries_csv(const std::filesystem::path& path, const TimeSeries& ts) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << 't';
    for (std::size_t j = 0; j < ts.regions(); ++j) out << ",roi_" << j;
    out << '\n';
    for (std::size_t k = 0; k < ts.time_points(); ++k) {
        out << k;
        for (std::size_t j = 0; j < ts.regions(); ++j) out << ',' << format_double(ts.samples(k, j));
        out << '\n';
    }
}

FcMatrix read_fc_csv(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    const std::size_t r = table.header.size();
    if (r == 0 || table.rows.size() != r)
        throw InputError(path.string() + ": FC CSV must have R header columns and R rows");
    Tensor m({r, r});
    for (std::size_t i = 0; i < r; ++i) {
        if (table.rows[i].size() != r) throw InputError(path.string() + ": row " + std::to_string(i + 2) + " has wrong width");
        for (std::size_t j = 0; j < r; ++j) m(i, j) = parse_double(table.rows[i][j], path.string());
    }
    return FcMatrix(std::move(m));
}

void write_fc_csv(const std::filesystem::path& path, const FcMatrix& fc) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (std::size_t j = 0; j < fc.r; ++j) out << (j ? "," : "") << "roi_" << j;
    out << '\n';
    for (std::size_t i = 0; i < fc.r; ++i) {
        for (std::size_t j = 0; j < fc.r; ++j) out << (j ? "," : "") << format_double(fc(i, j));
        out << '\n';
    }
}

}  // namespace msalnet
