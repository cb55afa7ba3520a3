#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msalnet {

// Dense row-major tensor of doubles. Rank is small (at most 4 here).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const;
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    // Two-index access for rank-2 tensors.
    double& operator()(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }

    std::span<double> data() { return values_; }
    std::span<const double> data() const { return values_; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    std::span<const double> row(std::size_t i) const;
    std::span<double> row(std::size_t i);

    void fill(double v);
    bool all_finite() const;
    std::string shape_string() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

std::size_t shape_product(std::span<const std::size_t> shape);

// Throws DimensionError naming `what` and the first mismatching axis.
void require_shape(const Tensor& t, std::initializer_list<std::size_t> expected, std::string_view what);

// Throws NumericError if any entry is NaN or infinite.
void require_finite(const Tensor& t, std::string_view what);

}  // namespace msalnet
