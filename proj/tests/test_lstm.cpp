#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "amdnet/errors.hpp"
#include "amdnet/gradcheck.hpp"
#include "amdnet/lstm.hpp"
#include "support/fixtures.hpp"

using namespace amdnet;

namespace {

LstmParams zero_params(int d, int u) {
    LstmParams p;
    p.input_width = d;
    p.hidden_width = u;
    p.w_i = Tensor({d + u, u});
    p.w_c = Tensor({d + u, u});
    p.w_f = Tensor({d + u, u});
    p.w_o = Tensor({d + u, u});
    p.b_i = Tensor({u});
    p.b_c = Tensor({u});
    p.b_f = Tensor({u});
    p.b_o = Tensor({u});
    return p;
}

LstmParams random_params(int d, int u, std::uint64_t seed) {
    Rng rng(seed);
    return make_lstm_params(d, u, rng);
}

double projected(const Tensor& out, const Tensor& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * r[i];
    return s;
}

}  // namespace

TEST_CASE("cell step with all-zero parameters") {
    LstmParams p = zero_params(3, 2);
    Tensor x = fixtures::random_tensor({2, 3}, 1);
    LstmStepResult r = lstm_cell_step(x, lstm_zero_state(2, 2), p);
    for (std::size_t i = 0; i < r.cache.gate_i.size(); ++i) {
        CHECK(r.cache.gate_i[i] == doctest::Approx(0.5));
        CHECK(r.cache.gate_f[i] == doctest::Approx(0.5));
        CHECK(r.cache.gate_o[i] == doctest::Approx(0.5));
        CHECK(r.cache.candidate[i] == doctest::Approx(0.0));
        CHECK(r.state.c[i] == doctest::Approx(0.0));
        CHECK(r.state.h[i] == doctest::Approx(0.0));
    }
}

TEST_CASE("cell step with zero weights and previous cell state 1") {
    LstmParams p = zero_params(3, 2);
    Tensor x = fixtures::random_tensor({1, 3}, 2);
    LstmState prev = lstm_zero_state(1, 2);
    prev.c.fill(1.0);
    LstmStepResult r = lstm_cell_step(x, prev, p);
    for (std::size_t i = 0; i < r.state.c.size(); ++i) {
        CHECK(r.state.c[i] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(r.state.h[i] == doctest::Approx(0.2310585786300049).epsilon(1e-12));
    }
}

TEST_CASE("saturated forget bias carries the cell state over") {
    LstmParams p = zero_params(2, 2);
    p.b_f.fill(50.0);
    Tensor x = fixtures::random_tensor({1, 2}, 3);
    LstmState prev = lstm_zero_state(1, 2);
    prev.c[0] = 0.8;
    prev.c[1] = -1.7;
    LstmStepResult r = lstm_cell_step(x, prev, p);
    CHECK(r.state.c[0] == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(r.state.c[1] == doctest::Approx(-1.7).epsilon(1e-9));
}

TEST_CASE("cell step shape errors") {
    LstmParams p = zero_params(3, 2);
    CHECK_THROWS_AS(lstm_cell_step(Tensor({2, 4}), lstm_zero_state(2, 2), p), ShapeError);
    CHECK_THROWS_AS(lstm_cell_step(Tensor({2, 3}), lstm_zero_state(3, 2), p), ShapeError);
}

TEST_CASE("sequence forward equals composed single steps bitwise") {
    LstmParams p = random_params(4, 5, 10);
    Tensor x = fixtures::random_tensor({3, 6, 4}, 11);
    Tensor seq = lstm_sequence_forward(x, p);

    LstmState state = lstm_zero_state(3, 5);
    for (int t = 0; t < 6; ++t) {
        Tensor x_t({3, 4});
        for (int i = 0; i < 3; ++i) {
            for (int k = 0; k < 4; ++k) x_t.at(i, k) = x.at(i, t, k);
        }
        state = lstm_cell_step(x_t, state, p).state;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 5; ++j) {
                CHECK(seq.at(i, t, j) == state.h.at(i, j));
            }
        }
    }
}

TEST_CASE("sequence with T=1 reduces to one cell step") {
    LstmParams p = random_params(3, 4, 20);
    Tensor x = fixtures::random_tensor({2, 1, 3}, 21);
    Tensor seq = lstm_sequence_forward(x, p);
    Tensor x0 = x.reshaped({2, 3});
    LstmStepResult r = lstm_cell_step(x0, lstm_zero_state(2, 4), p);
    CHECK(seq.values() == r.state.h.values());
}

TEST_CASE("zero input and zero params give a zero sequence") {
    LstmParams p = zero_params(3, 2);
    Tensor x({2, 4, 3});
    Tensor seq = lstm_sequence_forward(x, p);
    for (std::size_t i = 0; i < seq.size(); ++i) CHECK(seq[i] == 0.0);
}

TEST_CASE("full-scale sequence shape and flattened width") {
    LstmParams p = zero_params(512, 512);
    Tensor x({1, 16, 512});
    Tensor seq = lstm_sequence_forward(x, p);
    CHECK(seq.shape() == std::vector<int>{1, 16, 512});
    CHECK(seq.size() == 8192);  // flattened width feeding the 524352-param FC
}

TEST_CASE("hidden state entries stay inside (-1,1)") {
    LstmParams p = random_params(3, 4, 30);
    p.b_o.fill(25.0);  // push the output gate open
    Tensor x = fixtures::random_tensor({2, 8, 3}, 31, -50.0, 50.0);
    Tensor seq = lstm_sequence_forward(x, p);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        CHECK(seq[i] > -1.0);
        CHECK(seq[i] < 1.0);
    }
}

TEST_CASE("bias saturation freezes the cell state") {
    LstmParams p = random_params(3, 4, 40);
    p.b_f.fill(50.0);   // f ~= 1
    p.b_i.fill(-50.0);  // i ~= 0
    Tensor x = fixtures::random_tensor({1, 5, 3}, 41);
    LstmSequenceCache cache;
    lstm_sequence_forward(x, p, &cache);
    // with f=1, i=0 the cell state stays at its initial zero forever
    for (const auto& step : cache.steps) {
        for (std::size_t i = 0; i < step.c_prev.size(); ++i) {
            CHECK(std::abs(step.c_prev[i]) < 1e-9);
        }
    }
}

TEST_CASE("BPTT gradients match finite differences") {
    LstmParams p = random_params(4, 5, 50);
    Tensor x = fixtures::random_tensor({2, 3, 4}, 51);
    Tensor r = fixtures::random_tensor({2, 3, 5}, 52);

    auto op = [&] { return projected(lstm_sequence_forward(x, p), r); };
    LstmSequenceCache cache;
    lstm_sequence_forward(x, p, &cache);
    LstmBackwardResult g = lstm_backward(cache, p, r);

    std::vector<Tensor*> params = {&x,     &p.w_i, &p.w_c, &p.w_f, &p.w_o,
                                   &p.b_i, &p.b_c, &p.b_f, &p.b_o};
    std::vector<const Tensor*> analytic = {&g.d_input,     &g.grads.d_w_i, &g.grads.d_w_c,
                                           &g.grads.d_w_f, &g.grads.d_w_o, &g.grads.d_b_i,
                                           &g.grads.d_b_c, &g.grads.d_b_f, &g.grads.d_b_o};
    CHECK(finite_difference_check(op, params, analytic) < 1e-4);
}

TEST_CASE("tiny random case matches finite differences") {
    LstmParams p = random_params(2, 2, 60);
    Tensor x = fixtures::random_tensor({1, 2, 2}, 61);
    Tensor r = fixtures::random_tensor({1, 2, 2}, 62);
    auto op = [&] { return projected(lstm_sequence_forward(x, p), r); };
    LstmSequenceCache cache;
    lstm_sequence_forward(x, p, &cache);
    LstmBackwardResult g = lstm_backward(cache, p, r);
    CHECK(finite_difference_check(op, {&x}, {&g.d_input}) < 1e-4);
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
    LstmParams p = random_params(3, 4, 70);
    Tensor x = fixtures::random_tensor({2, 3, 3}, 71);
    LstmSequenceCache cache;
    lstm_sequence_forward(x, p, &cache);
    LstmBackwardResult g = lstm_backward(cache, p, Tensor({2, 3, 4}));
    for (const Tensor* t : {&g.grads.d_w_i, &g.grads.d_w_c, &g.grads.d_w_f, &g.grads.d_w_o,
                            &g.grads.d_b_i, &g.grads.d_b_c, &g.grads.d_b_f, &g.grads.d_b_o,
                            &g.d_input}) {
        for (std::size_t i = 0; i < t->size(); ++i) CHECK((*t)[i] == 0.0);
    }
}

TEST_CASE("saturated forget gate has vanishing bias gradient") {
    LstmParams p = zero_params(2, 1);
    p.b_f.fill(50.0);
    Tensor x = fixtures::random_tensor({1, 4, 2}, 81);
    LstmSequenceCache cache;
    lstm_sequence_forward(x, p, &cache);
    LstmBackwardResult g = lstm_backward(cache, p, Tensor::full({1, 4, 1}, 1.0));
    CHECK(std::abs(g.grads.d_b_f[0]) < 1e-9);
}

TEST_CASE("backward rejects a stale or mismatched cache") {
    LstmParams p = random_params(3, 4, 90);
    LstmSequenceCache empty;
    CHECK_THROWS_AS(lstm_backward(empty, p, Tensor({2, 3, 4})), ValidationError);

    Tensor x = fixtures::random_tensor({2, 3, 3}, 91);
    LstmSequenceCache cache;
    lstm_sequence_forward(x, p, &cache);
    CHECK_THROWS_AS(lstm_backward(cache, p, Tensor({2, 4, 4})), ShapeError);

    LstmParams other = random_params(5, 4, 92);
    CHECK_THROWS_AS(lstm_backward(cache, other, Tensor({2, 3, 4})), ValidationError);
}

TEST_CASE("initialization bounds and forget bias") {
    Rng rng(123);
    LstmParams p = make_lstm_params(8, 16, rng);
    const double bound = std::sqrt(6.0 / (8 + 2.0 * 16));
    for (const Tensor* w : {&p.w_i, &p.w_c, &p.w_f, &p.w_o}) {
        for (std::size_t i = 0; i < w->size(); ++i) {
            CHECK(std::abs((*w)[i]) <= bound);
        }
    }
    for (int j = 0; j < 16; ++j) {
        CHECK(p.b_f[j] == 1.0);
        CHECK(p.b_i[j] == 0.0);
        CHECK(p.b_c[j] == 0.0);
        CHECK(p.b_o[j] == 0.0);
    }
}
