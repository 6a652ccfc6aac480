#include "amdnet/lstm.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "amdnet/errors.hpp"
#include "amdnet/kernels.hpp"

namespace amdnet {

LstmParams make_lstm_params(int input_width, int hidden_width, Rng& rng) {
    if (input_width < 1 || hidden_width < 1) {
        throw ShapeError("lstm widths must be >= 1");
    }
    LstmParams p;
    p.input_width = input_width;
    p.hidden_width = hidden_width;
    const int rows = input_width + hidden_width;
    const double bound = std::sqrt(6.0 / (input_width + 2.0 * hidden_width));
    auto init_w = [&] {
        Tensor w({rows, hidden_width});
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
        return w;
    };
    p.w_i = init_w();
    p.w_c = init_w();
    p.w_f = init_w();
    p.w_o = init_w();
    p.b_i = Tensor({hidden_width});
    p.b_c = Tensor({hidden_width});
    p.b_f = Tensor::full({hidden_width}, 1.0);
    p.b_o = Tensor({hidden_width});
    return p;
}

LstmState lstm_zero_state(int batch, int hidden_width) {
    return {Tensor({batch, hidden_width}), Tensor({batch, hidden_width})};
}

LstmStepResult lstm_cell_step(const Tensor& x_t, const LstmState& prev, const LstmParams& params) {
    if (x_t.rank() != 2 || x_t.dim(1) != params.input_width) {
        throw ShapeError("lstm step input must be [N," + std::to_string(params.input_width) +
                         "], got " + x_t.shape_str());
    }
    const int n = x_t.dim(0);
    const int d = params.input_width, u = params.hidden_width;
    if (prev.h.shape() != std::vector<int>{n, u} || prev.c.shape() != std::vector<int>{n, u}) {
        throw ShapeError("lstm previous state does not match batch/hidden widths");
    }

    LstmStepResult r;
    r.cache.concat = Tensor({n, d + u});
    for (int i = 0; i < n; ++i) {
        std::memcpy(r.cache.concat.data() + static_cast<std::size_t>(i) * (d + u),
                    x_t.data() + static_cast<std::size_t>(i) * d, sizeof(double) * d);
        std::memcpy(r.cache.concat.data() + static_cast<std::size_t>(i) * (d + u) + d,
                    prev.h.data() + static_cast<std::size_t>(i) * u, sizeof(double) * u);
    }

    r.cache.gate_i = activation_forward(dense_forward(r.cache.concat, params.w_i, params.b_i),
                                        Activation::Sigmoid);
    r.cache.candidate = activation_forward(dense_forward(r.cache.concat, params.w_c, params.b_c),
                                           Activation::Tanh);
    r.cache.gate_f = activation_forward(dense_forward(r.cache.concat, params.w_f, params.b_f),
                                        Activation::Sigmoid);
    r.cache.gate_o = activation_forward(dense_forward(r.cache.concat, params.w_o, params.b_o),
                                        Activation::Sigmoid);
    r.cache.c_prev = prev.c;

    r.state.c = Tensor({n, u});
    r.cache.tanh_c = Tensor({n, u});
    r.state.h = Tensor({n, u});
    for (std::size_t i = 0; i < r.state.c.size(); ++i) {
        r.state.c[i] = r.cache.gate_f[i] * prev.c[i] + r.cache.gate_i[i] * r.cache.candidate[i];
        r.cache.tanh_c[i] = std::tanh(r.state.c[i]);
        r.state.h[i] = r.cache.gate_o[i] * r.cache.tanh_c[i];
    }
    return r;
}

Tensor lstm_sequence_forward(const Tensor& x, const LstmParams& params, LstmSequenceCache* cache) {
    if (x.rank() != 3) {
        throw ShapeError("lstm sequence input must be [N,T,D], got " + x.shape_str());
    }
    const int n = x.dim(0), t = x.dim(1), d = x.dim(2);
    if (t < 1) throw PreconditionError("lstm sequence needs T >= 1");
    if (d != params.input_width) {
        throw ShapeError("lstm sequence input width " + std::to_string(d) + " != params D " +
                         std::to_string(params.input_width));
    }
    const int u = params.hidden_width;

    Tensor out({n, t, u});
    LstmState state = lstm_zero_state(n, u);
    if (cache) {
        cache->steps.clear();
        cache->batch = n;
        cache->time_steps = t;
    }
    Tensor x_t({n, d});
    for (int step = 0; step < t; ++step) {
        for (int i = 0; i < n; ++i) {
            std::memcpy(x_t.data() + static_cast<std::size_t>(i) * d,
                        x.data() + (static_cast<std::size_t>(i) * t + step) * d, sizeof(double) * d);
        }
        LstmStepResult r = lstm_cell_step(x_t, state, params);
        state = std::move(r.state);
        for (int i = 0; i < n; ++i) {
            std::memcpy(out.data() + (static_cast<std::size_t>(i) * t + step) * u,
                        state.h.data() + static_cast<std::size_t>(i) * u, sizeof(double) * u);
        }
        if (cache) cache->steps.push_back(std::move(r.cache));
    }
    return out;
}

LstmBackwardResult lstm_backward(const LstmSequenceCache& cache, const LstmParams& params,
                                 const Tensor& d_out) {
    const int n = cache.batch, t = cache.time_steps;
    const int d = params.input_width, u = params.hidden_width;
    if (cache.steps.empty() || static_cast<int>(cache.steps.size()) != t) {
        throw ValidationError("lstm cache is empty or stale");
    }
    if (d_out.shape() != std::vector<int>{n, t, u}) {
        throw ShapeError("lstm d_out shape " + d_out.shape_str() + " does not match cache");
    }
    if (cache.steps[0].concat.shape() != std::vector<int>{n, d + u}) {
        throw ValidationError("lstm cache does not match params layout");
    }

    LstmBackwardResult r;
    r.d_input = Tensor({n, t, d});
    r.grads.d_w_i = Tensor({d + u, u});
    r.grads.d_w_c = Tensor({d + u, u});
    r.grads.d_w_f = Tensor({d + u, u});
    r.grads.d_w_o = Tensor({d + u, u});
    r.grads.d_b_i = Tensor({u});
    r.grads.d_b_c = Tensor({u});
    r.grads.d_b_f = Tensor({u});
    r.grads.d_b_o = Tensor({u});

    Tensor dh_next({n, u});
    Tensor dc_next({n, u});
    Tensor dh({n, u}), dc({n, u});
    Tensor dz_i({n, u}), dz_c({n, u}), dz_f({n, u}), dz_o({n, u});

    auto accumulate = [](Tensor& into, const Tensor& from) {
        for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
    };

    for (int step = t - 1; step >= 0; --step) {
        const LstmStepCache& sc = cache.steps[static_cast<std::size_t>(step)];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < u; ++j) {
                dh.at(i, j) = d_out.at(i, step, j) + dh_next.at(i, j);
            }
        }
        for (std::size_t i = 0; i < dh.size(); ++i) {
            const double o = sc.gate_o[i];
            const double tc = sc.tanh_c[i];
            const double d_o = dh[i] * tc;
            dz_o[i] = d_o * o * (1.0 - o);
            dc[i] = dh[i] * o * (1.0 - tc * tc) + dc_next[i];

            const double f = sc.gate_f[i];
            const double d_f = dc[i] * sc.c_prev[i];
            dz_f[i] = d_f * f * (1.0 - f);

            const double ig = sc.gate_i[i];
            const double d_i = dc[i] * sc.candidate[i];
            dz_i[i] = d_i * ig * (1.0 - ig);

            const double g = sc.candidate[i];
            dz_c[i] = dc[i] * ig * (1.0 - g * g);

            dc_next[i] = dc[i] * f;
        }

        KernelGrads gi = dense_backward(sc.concat, params.w_i, dz_i);
        KernelGrads gc = dense_backward(sc.concat, params.w_c, dz_c);
        KernelGrads gf = dense_backward(sc.concat, params.w_f, dz_f);
        KernelGrads go = dense_backward(sc.concat, params.w_o, dz_o);
        accumulate(r.grads.d_w_i, gi.d_weights);
        accumulate(r.grads.d_w_c, gc.d_weights);
        accumulate(r.grads.d_w_f, gf.d_weights);
        accumulate(r.grads.d_w_o, go.d_weights);
        accumulate(r.grads.d_b_i, gi.d_bias);
        accumulate(r.grads.d_b_c, gc.d_bias);
        accumulate(r.grads.d_b_f, gf.d_bias);
        accumulate(r.grads.d_b_o, go.d_bias);

        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < d; ++k) {
                r.d_input.at(i, step, k) = gi.d_input.at(i, k) + gc.d_input.at(i, k) +
                                           gf.d_input.at(i, k) + go.d_input.at(i, k);
            }
            for (int j = 0; j < u; ++j) {
                dh_next.at(i, j) = gi.d_input.at(i, d + j) + gc.d_input.at(i, d + j) +
                                   gf.d_input.at(i, d + j) + go.d_input.at(i, d + j);
            }
        }
    }
    return r;
}

}  // namespace amdnet
