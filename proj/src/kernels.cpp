#include "amdnet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "amdnet/errors.hpp"
#include "amdnet/parallel.hpp"

namespace amdnet {

namespace {

void require_rank(const Tensor& t, int rank, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(what) + " must have rank " + std::to_string(rank) +
                         ", got " + t.shape_str());
    }
}

}  // namespace

// ---------------------------------------------------------------- conv2d

namespace {

void check_conv_shapes(const Tensor& input, const Tensor& weights, const Tensor* bias) {
    require_rank(input, 4, "conv2d input");
    require_rank(weights, 4, "conv2d weights");
    if (weights.dim(0) != 3 || weights.dim(1) != 3) {
        throw ShapeError("conv2d kernel must be 3x3, got " + weights.shape_str());
    }
    if (weights.dim(2) != input.dim(3)) {
        throw ShapeError("conv2d channel mismatch: input has " + std::to_string(input.dim(3)) +
                         ", weights expect " + std::to_string(weights.dim(2)));
    }
    if (bias && (bias->rank() != 1 || bias->dim(0) != weights.dim(3))) {
        throw ShapeError("conv2d bias must have one entry per output channel");
    }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    check_conv_shapes(input, weights, &bias);
    const int n = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int cin = input.dim(3), cout = weights.dim(3);

    Tensor out({n, h, w, cout});
    const double* in = input.data();
    const double* wt = weights.data();
    const double* bs = bias.data();

    parallel_for(static_cast<std::size_t>(n), [&](std::size_t b0, std::size_t b1) {
        std::vector<double> acc(static_cast<std::size_t>(cout));
        for (std::size_t bi = b0; bi < b1; ++bi) {
            const double* in_img = in + bi * static_cast<std::size_t>(h) * w * cin;
            double* out_img = out.data() + bi * static_cast<std::size_t>(h) * w * cout;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    for (int co = 0; co < cout; ++co) acc[co] = bs[co];
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = y + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = x + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            const double* px = in_img + (static_cast<std::size_t>(iy) * w + ix) * cin;
                            const double* wk = wt + (static_cast<std::size_t>(ky) * 3 + kx) * cin * cout;
                            for (int ci = 0; ci < cin; ++ci) {
                                const double v = px[ci];
                                const double* wrow = wk + static_cast<std::size_t>(ci) * cout;
                                for (int co = 0; co < cout; ++co) acc[co] += v * wrow[co];
                            }
                        }
                    }
                    double* orow = out_img + (static_cast<std::size_t>(y) * w + x) * cout;
                    for (int co = 0; co < cout; ++co) orow[co] = acc[co];
                }
            }
        }
    });
    return out;
}

KernelGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& d_out) {
    check_conv_shapes(input, weights, nullptr);
    const int n = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int cin = input.dim(3), cout = weights.dim(3);
    if (d_out.shape() != std::vector<int>{n, h, w, cout}) {
        throw ShapeError("conv2d d_out shape " + d_out.shape_str() + " does not match forward output");
    }

    KernelGrads g;
    g.d_input = Tensor(input.shape());
    g.d_weights = Tensor(weights.shape());
    g.d_bias = Tensor({cout});

    const double* in = input.data();
    const double* wt = weights.data();
    const double* dout = d_out.data();

    // d_input: each batch image is independent.
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t b0, std::size_t b1) {
        for (std::size_t bi = b0; bi < b1; ++bi) {
            const double* dout_img = dout + bi * static_cast<std::size_t>(h) * w * cout;
            double* din_img = g.d_input.data() + bi * static_cast<std::size_t>(h) * w * cin;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const double* drow = dout_img + (static_cast<std::size_t>(y) * w + x) * cout;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = y + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = x + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            double* dpx = din_img + (static_cast<std::size_t>(iy) * w + ix) * cin;
                            const double* wk = wt + (static_cast<std::size_t>(ky) * 3 + kx) * cin * cout;
                            for (int ci = 0; ci < cin; ++ci) {
                                const double* wrow = wk + static_cast<std::size_t>(ci) * cout;
                                double s = 0.0;
                                for (int co = 0; co < cout; ++co) s += drow[co] * wrow[co];
                                dpx[ci] += s;
                            }
                        }
                    }
                }
            }
        }
    });

    // d_weights and d_bias: split the output-channel range so every
    // accumulator has one owner and keeps the sequential n,y,x order.
    parallel_for(static_cast<std::size_t>(cout), [&](std::size_t c0, std::size_t c1) {
        for (std::size_t bi = 0; bi < static_cast<std::size_t>(n); ++bi) {
            const double* in_img = in + bi * static_cast<std::size_t>(h) * w * cin;
            const double* dout_img = dout + bi * static_cast<std::size_t>(h) * w * cout;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const double* drow = dout_img + (static_cast<std::size_t>(y) * w + x) * cout;
                    for (std::size_t co = c0; co < c1; ++co) g.d_bias[co] += drow[co];
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = y + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = x + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            const double* px = in_img + (static_cast<std::size_t>(iy) * w + ix) * cin;
                            double* dwk = g.d_weights.data() +
                                          (static_cast<std::size_t>(ky) * 3 + kx) * cin * cout;
                            for (int ci = 0; ci < cin; ++ci) {
                                const double v = px[ci];
                                double* dwrow = dwk + static_cast<std::size_t>(ci) * cout;
                                for (std::size_t co = c0; co < c1; ++co) dwrow[co] += v * drow[co];
                            }
                        }
                    }
                }
            }
        }
    });

    return g;
}

// ---------------------------------------------------------------- maxpool2d

Tensor maxpool2d_forward(const Tensor& input, PoolCache& cache) {
    require_rank(input, 4, "maxpool2d input");
    const int n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2d requires even H and W, got " + input.shape_str());
    }
    const int oh = h / 2, ow = w / 2;
    Tensor out({n, oh, ow, c});
    cache.input_shape = input.shape();
    cache.argmax.assign(out.size(), 0);

    const double* in = input.data();
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t b0, std::size_t b1) {
        for (std::size_t bi = b0; bi < b1; ++bi) {
            const double* in_img = in + bi * static_cast<std::size_t>(h) * w * c;
            double* out_img = out.data() + bi * static_cast<std::size_t>(oh) * ow * c;
            std::uint8_t* am_img = cache.argmax.data() + bi * static_cast<std::size_t>(oh) * ow * c;
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) {
                    for (int ch = 0; ch < c; ++ch) {
                        double best = -1.0;
                        std::uint8_t best_pos = 0;
                        bool first = true;
                        for (int dy = 0; dy < 2; ++dy) {
                            for (int dx = 0; dx < 2; ++dx) {
                                const double v = in_img[((static_cast<std::size_t>(2 * y + dy)) * w +
                                                         (2 * x + dx)) * c + ch];
                                if (first || v > best) {
                                    best = v;
                                    best_pos = static_cast<std::uint8_t>(dy * 2 + dx);
                                    first = false;
                                }
                            }
                        }
                        const std::size_t oi = (static_cast<std::size_t>(y) * ow + x) * c + ch;
                        out_img[oi] = best;
                        am_img[oi] = best_pos;
                    }
                }
            }
        }
    });
    return out;
}

Tensor maxpool2d_backward(const Tensor& d_out, const PoolCache& cache) {
    if (cache.input_shape.size() != 4) throw ValidationError("maxpool2d cache is empty or stale");
    const int n = cache.input_shape[0], h = cache.input_shape[1];
    const int w = cache.input_shape[2], c = cache.input_shape[3];
    const int oh = h / 2, ow = w / 2;
    if (d_out.shape() != std::vector<int>{n, oh, ow, c}) {
        throw ShapeError("maxpool2d d_out shape " + d_out.shape_str() + " does not match cache");
    }
    if (cache.argmax.size() != d_out.size()) throw ValidationError("maxpool2d argmax size mismatch");

    Tensor d_in(cache.input_shape);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t b0, std::size_t b1) {
        for (std::size_t bi = b0; bi < b1; ++bi) {
            const double* dout_img = d_out.data() + bi * static_cast<std::size_t>(oh) * ow * c;
            const std::uint8_t* am_img = cache.argmax.data() + bi * static_cast<std::size_t>(oh) * ow * c;
            double* din_img = d_in.data() + bi * static_cast<std::size_t>(h) * w * c;
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) {
                    for (int ch = 0; ch < c; ++ch) {
                        const std::size_t oi = (static_cast<std::size_t>(y) * ow + x) * c + ch;
                        const int dy = am_img[oi] / 2, dx = am_img[oi] % 2;
                        din_img[((static_cast<std::size_t>(2 * y + dy)) * w + (2 * x + dx)) * c + ch] +=
                            dout_img[oi];
                    }
                }
            }
        }
    });
    return d_in;
}

// ---------------------------------------------------------------- batch norm

namespace {

void check_bn_shapes(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
    require_rank(x, 4, "batch_norm input");
    const int c = x.dim(3);
    if (gamma.rank() != 1 || gamma.dim(0) != c || beta.rank() != 1 || beta.dim(0) != c) {
        throw ShapeError("batch_norm gamma/beta must be [C] with C=" + std::to_string(c));
    }
}

}  // namespace

Tensor batch_norm_forward_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                                Tensor& running_mean, Tensor& running_var,
                                BatchNormCache& cache, double eps, double momentum) {
    check_bn_shapes(x, gamma, beta);
    const int c = x.dim(3);
    const std::size_t m = x.size() / static_cast<std::size_t>(c);
    if (m < 2) {
        throw PreconditionError("batch_norm train phase needs N*H*W >= 2 per channel");
    }

    std::vector<double> mean(c, 0.0), var(c, 0.0);
    const double* xd = x.data();
    const std::size_t total = x.size();
    for (std::size_t i = 0; i < total; i += c) {
        for (int ch = 0; ch < c; ++ch) mean[ch] += xd[i + ch];
    }
    for (int ch = 0; ch < c; ++ch) mean[ch] /= static_cast<double>(m);
    for (std::size_t i = 0; i < total; i += c) {
        for (int ch = 0; ch < c; ++ch) {
            const double d = xd[i + ch] - mean[ch];
            var[ch] += d * d;
        }
    }
    for (int ch = 0; ch < c; ++ch) var[ch] /= static_cast<double>(m);

    cache.inv_std = Tensor({c});
    for (int ch = 0; ch < c; ++ch) cache.inv_std[ch] = 1.0 / std::sqrt(var[ch] + eps);
    cache.m = m;
    cache.x_hat = Tensor(x.shape());

    Tensor out(x.shape());
    const double* g = gamma.data();
    const double* b = beta.data();
    for (std::size_t i = 0; i < total; i += c) {
        for (int ch = 0; ch < c; ++ch) {
            const double xh = (xd[i + ch] - mean[ch]) * cache.inv_std[ch];
            cache.x_hat[i + ch] = xh;
            out[i + ch] = g[ch] * xh + b[ch];
        }
    }

    for (int ch = 0; ch < c; ++ch) {
        running_mean[ch] = momentum * running_mean[ch] + (1.0 - momentum) * mean[ch];
        running_var[ch] = momentum * running_var[ch] + (1.0 - momentum) * var[ch];
    }
    return out;
}

Tensor batch_norm_forward_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                                const Tensor& running_mean, const Tensor& running_var, double eps) {
    check_bn_shapes(x, gamma, beta);
    const int c = x.dim(3);
    std::vector<double> scale(c), shift(c);
    for (int ch = 0; ch < c; ++ch) {
        const double inv = 1.0 / std::sqrt(running_var[ch] + eps);
        scale[ch] = gamma[ch] * inv;
        shift[ch] = beta[ch] - running_mean[ch] * scale[ch];
    }
    Tensor out(x.shape());
    const double* xd = x.data();
    for (std::size_t i = 0; i < x.size(); i += c) {
        for (int ch = 0; ch < c; ++ch) out[i + ch] = xd[i + ch] * scale[ch] + shift[ch];
    }
    return out;
}

BatchNormGrads batch_norm_backward(const Tensor& d_out, const BatchNormCache& cache,
                                   const Tensor& gamma) {
    if (cache.m == 0) throw ValidationError("batch_norm cache is empty or stale");
    if (!d_out.same_shape(cache.x_hat)) {
        throw ShapeError("batch_norm d_out shape " + d_out.shape_str() + " does not match cache");
    }
    const int c = d_out.dim(3);
    const double m = static_cast<double>(cache.m);

    BatchNormGrads g;
    g.d_gamma = Tensor({c});
    g.d_beta = Tensor({c});
    g.d_input = Tensor(d_out.shape());

    const double* dy = d_out.data();
    const double* xh = cache.x_hat.data();
    for (std::size_t i = 0; i < d_out.size(); i += c) {
        for (int ch = 0; ch < c; ++ch) {
            g.d_beta[ch] += dy[i + ch];
            g.d_gamma[ch] += dy[i + ch] * xh[i + ch];
        }
    }
    // dx = gamma*inv_std/m * (m*dy - sum(dy) - x_hat*sum(dy*x_hat))
    for (std::size_t i = 0; i < d_out.size(); i += c) {
        for (int ch = 0; ch < c; ++ch) {
            const double k = gamma[ch] * cache.inv_std[ch] / m;
            g.d_input[i + ch] =
                k * (m * dy[i + ch] - g.d_beta[ch] - xh[i + ch] * g.d_gamma[ch]);
        }
    }
    return g;
}

// ---------------------------------------------------------------- dense

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_rank(x, 2, "dense input");
    require_rank(w, 2, "dense weights");
    const int n = x.dim(0), d = x.dim(1), u = w.dim(1);
    if (w.dim(0) != d) {
        throw ShapeError("dense dimension mismatch: input D=" + std::to_string(d) +
                         ", weights expect D=" + std::to_string(w.dim(0)));
    }
    if (b.rank() != 1 || b.dim(0) != u) throw ShapeError("dense bias must be [U]");

    Tensor out({n, u});
    const double* xd = x.data();
    const double* wd = w.data();
    for (int i = 0; i < n; ++i) {
        double* orow = out.data() + static_cast<std::size_t>(i) * u;
        for (int j = 0; j < u; ++j) orow[j] = b[j];
        const double* xrow = xd + static_cast<std::size_t>(i) * d;
        for (int k = 0; k < d; ++k) {
            const double v = xrow[k];
            const double* wrow = wd + static_cast<std::size_t>(k) * u;
            for (int j = 0; j < u; ++j) orow[j] += v * wrow[j];
        }
    }
    return out;
}

KernelGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& d_out) {
    const int n = x.dim(0), d = x.dim(1), u = w.dim(1);
    if (d_out.shape() != std::vector<int>{n, u}) {
        throw ShapeError("dense d_out shape " + d_out.shape_str() + " does not match forward output");
    }
    KernelGrads g;
    g.d_input = Tensor({n, d});
    g.d_weights = Tensor({d, u});
    g.d_bias = Tensor({u});

    const double* xd = x.data();
    const double* wd = w.data();
    const double* dy = d_out.data();
    for (int i = 0; i < n; ++i) {
        const double* drow = dy + static_cast<std::size_t>(i) * u;
        const double* xrow = xd + static_cast<std::size_t>(i) * d;
        double* dxrow = g.d_input.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < u; ++j) g.d_bias[j] += drow[j];
        for (int k = 0; k < d; ++k) {
            const double* wrow = wd + static_cast<std::size_t>(k) * u;
            double* dwrow = g.d_weights.data() + static_cast<std::size_t>(k) * u;
            const double xv = xrow[k];
            double s = 0.0;
            for (int j = 0; j < u; ++j) {
                s += drow[j] * wrow[j];
                dwrow[j] += xv * drow[j];
            }
            dxrow[k] = s;
        }
    }
    return g;
}

// ---------------------------------------------------------------- activations

Tensor activation_forward(const Tensor& x, Activation kind) {
    Tensor out(x.shape());
    const double* xd = x.data();
    switch (kind) {
        case Activation::Relu:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = xd[i] > 0.0 ? xd[i] : 0.0;
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xd[i]));
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(xd[i]);
            break;
        case Activation::Softmax: {
            const int k = x.dim(x.rank() - 1);
            for (std::size_t row = 0; row < x.size(); row += k) {
                double mx = xd[row];
                for (int j = 1; j < k; ++j) mx = std::max(mx, xd[row + j]);
                double sum = 0.0;
                for (int j = 0; j < k; ++j) {
                    const double e = std::exp(xd[row + j] - mx);
                    out[row + j] = e;
                    sum += e;
                }
                for (int j = 0; j < k; ++j) out[row + j] /= sum;
            }
            break;
        }
    }
    return out;
}

Tensor activation_backward(const Tensor& d_out, const Tensor& y, Activation kind) {
    if (!d_out.same_shape(y)) throw ShapeError("activation backward shape mismatch");
    Tensor d_in(y.shape());
    const double* dy = d_out.data();
    const double* yd = y.data();
    switch (kind) {
        case Activation::Relu:
            for (std::size_t i = 0; i < y.size(); ++i) d_in[i] = yd[i] > 0.0 ? dy[i] : 0.0;
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < y.size(); ++i) d_in[i] = dy[i] * yd[i] * (1.0 - yd[i]);
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < y.size(); ++i) d_in[i] = dy[i] * (1.0 - yd[i] * yd[i]);
            break;
        case Activation::Softmax: {
            const int k = y.dim(y.rank() - 1);
            for (std::size_t row = 0; row < y.size(); row += k) {
                double dot = 0.0;
                for (int j = 0; j < k; ++j) dot += dy[row + j] * yd[row + j];
                for (int j = 0; j < k; ++j) d_in[row + j] = yd[row + j] * (dy[row + j] - dot);
            }
            break;
        }
    }
    return d_in;
}

// ---------------------------------------------------------------- dropout

DropoutResult dropout_forward(const Tensor& x, double rate, Rng& rng, bool train) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
    }
    DropoutResult r;
    if (!train) {
        r.output = x;
        r.mask = Tensor::full(x.shape(), 1.0);
        return r;
    }
    const double scale = 1.0 / (1.0 - rate);
    r.mask = Tensor(x.shape());
    r.output = Tensor(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = rng.uniform() >= rate ? scale : 0.0;
        r.mask[i] = keep;
        r.output[i] = x[i] * keep;
    }
    return r;
}

Tensor dropout_backward(const Tensor& d_out, const Tensor& mask) {
    if (!d_out.same_shape(mask)) throw ShapeError("dropout backward shape mismatch");
    Tensor d_in(d_out.shape());
    for (std::size_t i = 0; i < d_out.size(); ++i) d_in[i] = d_out[i] * mask[i];
    return d_in;
}

// ---------------------------------------------------------------- loss

LossResult softmax_cross_entropy(const Tensor& logits, const Tensor& labels) {
    require_rank(logits, 2, "loss logits");
    if (!labels.same_shape(logits)) {
        throw ShapeError("labels shape " + labels.shape_str() + " does not match logits " +
                         logits.shape_str());
    }
    const int n = logits.dim(0), k = logits.dim(1);
    for (int i = 0; i < n; ++i) {
        int ones = 0;
        for (int j = 0; j < k; ++j) {
            const double v = labels.at(i, j);
            if (v == 1.0) {
                ++ones;
            } else if (v != 0.0) {
                throw ValidationError("labels must be one-hot; row " + std::to_string(i) +
                                      " has entry " + std::to_string(v));
            }
        }
        if (ones != 1) {
            throw ValidationError("labels must be one-hot; row " + std::to_string(i) + " has " +
                                  std::to_string(ones) + " ones");
        }
    }

    LossResult r;
    r.d_logits = Tensor({n, k});
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* lrow = logits.data() + static_cast<std::size_t>(i) * k;
        double mx = lrow[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, lrow[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(lrow[j] - mx);
        const double log_sum = mx + std::log(sum);
        for (int j = 0; j < k; ++j) {
            const double p = std::exp(lrow[j] - mx) / sum;
            r.d_logits.at(i, j) = (p - labels.at(i, j)) / n;
            if (labels.at(i, j) == 1.0) total += log_sum - lrow[j];
        }
    }
    r.loss = total / n;
    return r;
}

}  // namespace amdnet
