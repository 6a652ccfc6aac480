#pragma once

#include <vector>

#include "amdnet/rng.hpp"
#include "amdnet/tensor.hpp"

namespace amdnet {

/// Gate parameters over the concatenated [x_t, h_{t-1}] row: one
/// (D+U) x U matrix and one [U] bias per gate (input, candidate,
/// forget, output).
struct LstmParams {
    int input_width = 0;   // D
    int hidden_width = 0;  // U
    Tensor w_i, w_c, w_f, w_o;
    Tensor b_i, b_c, b_f, b_o;
};

/// Uniform +-sqrt(6/(D+2U)) weights; zero biases except forget bias = 1.
LstmParams make_lstm_params(int input_width, int hidden_width, Rng& rng);

struct LstmState {
    Tensor h;  // [N,U]
    Tensor c;  // [N,U]
};

LstmState lstm_zero_state(int batch, int hidden_width);

/// Gate activations saved for backpropagation through time.
struct LstmStepCache {
    Tensor concat;     // [N, D+U]
    Tensor gate_i, gate_f, gate_o;  // sigmoid outputs [N,U]
    Tensor candidate;  // tanh candidate [N,U]
    Tensor c_prev;     // [N,U]
    Tensor tanh_c;     // tanh of the new cell state [N,U]
};

struct LstmStepResult {
    LstmState state;
    LstmStepCache cache;
};

/// One cell update: i,f,o = sigmoid gates, candidate = tanh layer,
/// c_t = f*c_{t-1} + i*candidate, h_t = o*tanh(c_t).
LstmStepResult lstm_cell_step(const Tensor& x_t, const LstmState& prev, const LstmParams& params);

struct LstmSequenceCache {
    std::vector<LstmStepCache> steps;
    int batch = 0;
    int time_steps = 0;
};

/// Runs the cell over t = 1..T from a zero initial state and emits h_t for
/// every step: input [N,T,D] -> output [N,T,U].
Tensor lstm_sequence_forward(const Tensor& x, const LstmParams& params,
                             LstmSequenceCache* cache = nullptr);

struct LstmGrads {
    Tensor d_w_i, d_w_c, d_w_f, d_w_o;
    Tensor d_b_i, d_b_c, d_b_f, d_b_o;
};

struct LstmBackwardResult {
    Tensor d_input;  // [N,T,D]
    LstmGrads grads;
};

/// Full backpropagation through time for the sequence forward above.
LstmBackwardResult lstm_backward(const LstmSequenceCache& cache, const LstmParams& params,
                                 const Tensor& d_out);

}  // namespace amdnet
