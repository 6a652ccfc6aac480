#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace amdnet {

/// Dense row-major float64 array, rank 1-4. Activations are laid out
/// N x H x W x C; convolution kernels Kh x Kw x Cin x Cout.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<int> shape);

    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor full(std::vector<int> shape, double value);

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(int a) { return data_[static_cast<std::size_t>(a)]; }
    double& at(int a, int b) { return data_[static_cast<std::size_t>(a) * shape_[1] + b]; }
    double& at(int a, int b, int c) {
        return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }
    double& at(int a, int b, int c, int d) {
        return data_[((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }
    double at(int a) const { return data_[static_cast<std::size_t>(a)]; }
    double at(int a, int b) const { return data_[static_cast<std::size_t>(a) * shape_[1] + b]; }
    double at(int a, int b, int c) const {
        return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }
    double at(int a, int b, int c, int d) const {
        return data_[((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    void fill(double v);

    /// Reinterprets the buffer under a new shape with the same element count.
    Tensor reshaped(std::vector<int> shape) const;

    std::string shape_str() const;  // e.g. "2x256x256x3"

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace amdnet
