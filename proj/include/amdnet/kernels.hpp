#pragma once

#include <cstdint>
#include <vector>

#include "amdnet/rng.hpp"
#include "amdnet/tensor.hpp"

namespace amdnet {

/// Gradients of a kernel w.r.t. its input and parameters, shaped like the primals.
struct KernelGrads {
    Tensor d_input;
    Tensor d_weights;
    Tensor d_bias;
};

/// 3x3 cross-correlation, stride 1, zero "same" padding. Input N x H x W x Cin,
/// weights 3 x 3 x Cin x Cout, bias Cout; output keeps H and W.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
KernelGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& d_out);

/// 2x2 stride-2 max pooling. argmax stores the winning in-window position
/// (0..3, row-major, ties to the first) for gradient routing.
struct PoolCache {
    std::vector<int> input_shape;
    std::vector<std::uint8_t> argmax;
};
Tensor maxpool2d_forward(const Tensor& input, PoolCache& cache);
Tensor maxpool2d_backward(const Tensor& d_out, const PoolCache& cache);

/// Per-channel batch norm over N,H,W. Biased variance in the normalizer.
struct BatchNormCache {
    Tensor x_hat;     // normalized input, shaped like x
    Tensor inv_std;   // [C]
    std::size_t m = 0;  // samples per channel
};
struct BatchNormGrads {
    Tensor d_input;
    Tensor d_gamma;
    Tensor d_beta;
};

Tensor batch_norm_forward_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                                Tensor& running_mean, Tensor& running_var,
                                BatchNormCache& cache,
                                double eps = 1e-5, double momentum = 0.9);
Tensor batch_norm_forward_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                                const Tensor& running_mean, const Tensor& running_var,
                                double eps = 1e-5);
BatchNormGrads batch_norm_backward(const Tensor& d_out, const BatchNormCache& cache,
                                   const Tensor& gamma);

/// Affine map x.W + b for x of shape N x D, W of shape D x U.
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);
KernelGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& d_out);

enum class Activation { Relu, Sigmoid, Tanh, Softmax };

/// Softmax applies over the final axis with max-subtraction for stability.
Tensor activation_forward(const Tensor& x, Activation kind);
/// Backward from cached outputs y (all four kinds are expressible in y).
Tensor activation_backward(const Tensor& d_out, const Tensor& y, Activation kind);

/// Inverted dropout: train-phase survivors are scaled by 1/(1-rate) so
/// inference is the identity. Mask entries are 0 or the survivor scale.
struct DropoutResult {
    Tensor output;
    Tensor mask;
};
DropoutResult dropout_forward(const Tensor& x, double rate, Rng& rng, bool train);
Tensor dropout_backward(const Tensor& d_out, const Tensor& mask);

/// Mean softmax cross-entropy over the batch plus its logits gradient
/// (softmax - labels) / N. Labels must be exact one-hot rows.
struct LossResult {
    double loss = 0.0;
    Tensor d_logits;
};
LossResult softmax_cross_entropy(const Tensor& logits, const Tensor& labels);

}  // namespace amdnet
