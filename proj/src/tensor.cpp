#include "amdnet/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "amdnet/errors.hpp"

namespace amdnet {

namespace {

void validate_shape(const std::vector<int>& shape) {
    if (shape.empty() || shape.size() > 4) {
        throw ShapeError("tensor rank must be 1..4, got " + std::to_string(shape.size()));
    }
    for (int d : shape) {
        if (d < 1) throw ShapeError("tensor extent must be >= 1, got " + std::to_string(d));
    }
}

}  // namespace

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape[i]);
    }
    return s;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_numel(shape_), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != shape_numel(shape_)) {
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(std::vector<int> shape) const {
    validate_shape(shape);
    if (shape_numel(shape) != data_.size()) {
        throw ShapeError("reshape " + shape_str() + " -> " + shape_to_string(shape) +
                         " changes element count");
    }
    return Tensor(std::move(shape), data_);
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

}  // namespace amdnet
