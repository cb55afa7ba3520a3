#include "msalnet/tensor.hpp"

#include "msalnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace msalnet {

std::size_t shape_product(std::span<const std::size_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(shape_product(shape_), fill) {
    if (std::find(shape_.begin(), shape_.end(), std::size_t{0}) != shape_.end())
        throw DimensionError("tensor extents must be positive, got " + shape_string());
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (std::find(shape_.begin(), shape_.end(), std::size_t{0}) != shape_.end())
        throw DimensionError("tensor extents must be positive, got " + shape_string());
    if (shape_product(shape_) != values_.size())
        throw DimensionError("tensor of shape " + shape_string() + " given " +
                             std::to_string(values_.size()) + " values");
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size())
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_string());
    return shape_[axis];
}

std::span<const double> Tensor::row(std::size_t i) const {
    const std::size_t stride = values_.size() / shape_[0];
    return std::span<const double>(values_).subspan(i * stride, stride);
}

std::span<double> Tensor::row(std::size_t i) {
    const std::size_t stride = values_.size() / shape_[0];
    return std::span<double>(values_).subspan(i * stride, stride);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ')';
    return os.str();
}

void require_shape(const Tensor& t, std::initializer_list<std::size_t> expected, std::string_view what) {
    if (t.rank() != expected.size())
        throw DimensionError(std::string(what) + ": expected rank " + std::to_string(expected.size()) +
                             ", got shape " + t.shape_string());
    std::size_t axis = 0;
    for (std::size_t e : expected) {
        if (t.shape()[axis] != e)
            throw DimensionError(std::string(what) + ": axis " + std::to_string(axis) + " has extent " +
                                 std::to_string(t.shape()[axis]) + ", expected " + std::to_string(e));
        ++axis;
    }
}

void require_finite(const Tensor& t, std::string_view what) {
    if (!t.all_finite()) throw NumericError(std::string(what) + ": non-finite value");
}

}  // namespace msalnet
