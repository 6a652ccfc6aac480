#include "amdnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "amdnet/errors.hpp"

namespace amdnet {

// ---------------------------------------------------------------- spec / trace

void validate_spec(const ModelSpec& spec) {
    if (spec.block_filters.empty() || spec.block_filters.size() != spec.convs_per_block.size()) {
        throw ConfigError("block_filters and convs_per_block must be non-empty and equal length");
    }
    const int pools = static_cast<int>(spec.block_filters.size());
    const int factor = 1 << pools;
    if (spec.input_size < factor || spec.input_size % factor != 0) {
        throw ConfigError("input_size " + std::to_string(spec.input_size) +
                          " must be divisible by " + std::to_string(factor));
    }
    for (int f : spec.block_filters) {
        if (f < 1) throw ConfigError("block filter counts must be >= 1");
    }
    for (int c : spec.convs_per_block) {
        if (c < 1) throw ConfigError("convs per block must be >= 1");
    }
    if (spec.channels < 1) throw ConfigError("channels must be >= 1");
    if (spec.lstm_hidden < 1) throw ConfigError("lstm_hidden must be >= 1");
    if (spec.fc_units < 1) throw ConfigError("fc_units must be >= 1");
    if (spec.classes < 2) throw ConfigError("classes must be >= 2");
    if (spec.dropout_rate < 0.0 || spec.dropout_rate >= 1.0) {
        throw ConfigError("dropout_rate must be in [0,1)");
    }
}

namespace {

std::string dims3(int h, int w, int c) {
    return std::to_string(h) + " X " + std::to_string(w) + " X " + std::to_string(c);
}

}  // namespace

std::vector<LayerTraceRow> model_shape_trace(const ModelSpec& spec) {
    validate_spec(spec);
    std::vector<LayerTraceRow> rows;
    int h = spec.input_size;
    int c = spec.channels;
    int idx = 1;
    for (std::size_t b = 0; b < spec.block_filters.size(); ++b) {
        const int k = spec.block_filters[b];
        for (int j = 0; j < spec.convs_per_block[b]; ++j) {
            rows.push_back({idx++, "Convolution2D", "3 X 3", std::to_string(k), dims3(h, h, c),
                            9LL * c * k + k});
            c = k;
        }
        rows.push_back({idx++, "Maxpooling2D", "2 X 2", "-", dims3(h, h, c), 0});
        h /= 2;
    }
    const int t = h * h;
    const int d = c;
    const int u = spec.lstm_hidden;
    rows.push_back({idx++, "LSTM", "-", "-", std::to_string(t) + " X " + std::to_string(d),
                    4LL * ((static_cast<long long>(d) + u) * u + u)});
    const long long fc_in = static_cast<long long>(t) * u;
    const long long fc_params = fc_in * spec.fc_units + spec.fc_units;
    rows.push_back({idx++, "FC", "-", std::to_string(spec.fc_units), std::to_string(fc_params),
                    fc_params});
    const long long out_params = static_cast<long long>(spec.fc_units) * spec.classes + spec.classes;
    rows.push_back({idx++, "Output", "-", std::to_string(spec.classes), std::to_string(out_params),
                    out_params});
    return rows;
}

// ---------------------------------------------------------------- build

namespace {

int post_conv_side(const ModelSpec& spec) {
    return spec.input_size >> static_cast<int>(spec.block_filters.size());
}

ModelState allocate_model_state(const ModelSpec& spec) {
    ModelState s;
    s.spec = spec;
    int cin = spec.channels;
    for (std::size_t b = 0; b < spec.block_filters.size(); ++b) {
        ConvBlock block;
        const int cout = spec.block_filters[b];
        for (int j = 0; j < spec.convs_per_block[b]; ++j) {
            ConvLayer layer;
            layer.w = Tensor({3, 3, cin, cout});
            layer.b = Tensor({cout});
            block.convs.push_back(std::move(layer));
            cin = cout;
        }
        block.bn.gamma = Tensor::full({cout}, 1.0);
        block.bn.beta = Tensor({cout});
        block.bn.running_mean = Tensor({cout});
        block.bn.running_var = Tensor::full({cout}, 1.0);
        s.blocks.push_back(std::move(block));
    }
    const int side = post_conv_side(spec);
    const int seq_d = cin;
    s.lstm.input_width = seq_d;
    s.lstm.hidden_width = spec.lstm_hidden;
    const int rows = seq_d + spec.lstm_hidden;
    s.lstm.w_i = Tensor({rows, spec.lstm_hidden});
    s.lstm.w_c = Tensor({rows, spec.lstm_hidden});
    s.lstm.w_f = Tensor({rows, spec.lstm_hidden});
    s.lstm.w_o = Tensor({rows, spec.lstm_hidden});
    s.lstm.b_i = Tensor({spec.lstm_hidden});
    s.lstm.b_c = Tensor({spec.lstm_hidden});
    s.lstm.b_f = Tensor({spec.lstm_hidden});
    s.lstm.b_o = Tensor({spec.lstm_hidden});
    const int fc_in = side * side * spec.lstm_hidden;
    s.fc.w = Tensor({fc_in, spec.fc_units});
    s.fc.b = Tensor({spec.fc_units});
    s.out.w = Tensor({spec.fc_units, spec.classes});
    s.out.b = Tensor({spec.classes});
    return s;
}

void fill_uniform(Tensor& t, double bound, Rng& rng) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
}

void init_weights(ModelState& s, Rng& rng) {
    for (auto& block : s.blocks) {
        for (auto& conv : block.convs) {
            const int fan_in = conv.w.dim(0) * conv.w.dim(1) * conv.w.dim(2);
            fill_uniform(conv.w, std::sqrt(6.0 / fan_in), rng);  // He-uniform
        }
    }
    const double lstm_bound =
        std::sqrt(6.0 / (s.lstm.input_width + 2.0 * s.lstm.hidden_width));
    fill_uniform(s.lstm.w_i, lstm_bound, rng);
    fill_uniform(s.lstm.w_c, lstm_bound, rng);
    fill_uniform(s.lstm.w_f, lstm_bound, rng);
    fill_uniform(s.lstm.w_o, lstm_bound, rng);
    s.lstm.b_f.fill(1.0);  // open forget gate at start
    fill_uniform(s.fc.w, std::sqrt(6.0 / (s.fc.w.dim(0) + s.fc.w.dim(1))), rng);  // Glorot
    fill_uniform(s.out.w, std::sqrt(6.0 / (s.out.w.dim(0) + s.out.w.dim(1))), rng);
}

template <typename StateT, typename Fn>
void visit_trainable(StateT& s, Fn&& fn) {
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
        const std::string prefix = "block" + std::to_string(b);
        for (std::size_t j = 0; j < s.blocks[b].convs.size(); ++j) {
            fn(prefix + ".conv" + std::to_string(j) + ".w", s.blocks[b].convs[j].w);
            fn(prefix + ".conv" + std::to_string(j) + ".b", s.blocks[b].convs[j].b);
        }
        fn(prefix + ".bn.gamma", s.blocks[b].bn.gamma);
        fn(prefix + ".bn.beta", s.blocks[b].bn.beta);
    }
    fn("lstm.w_i", s.lstm.w_i);
    fn("lstm.b_i", s.lstm.b_i);
    fn("lstm.w_c", s.lstm.w_c);
    fn("lstm.b_c", s.lstm.b_c);
    fn("lstm.w_f", s.lstm.w_f);
    fn("lstm.b_f", s.lstm.b_f);
    fn("lstm.w_o", s.lstm.w_o);
    fn("lstm.b_o", s.lstm.b_o);
    fn("fc.w", s.fc.w);
    fn("fc.b", s.fc.b);
    fn("out.w", s.out.w);
    fn("out.b", s.out.b);
}

template <typename StateT, typename Fn>
void visit_running_stats(StateT& s, Fn&& fn) {
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
        const std::string prefix = "block" + std::to_string(b) + ".bn";
        fn(prefix + ".running_mean", s.blocks[b].bn.running_mean);
        fn(prefix + ".running_var", s.blocks[b].bn.running_var);
    }
}

}  // namespace

BuildResult build_model(const ModelSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    BuildResult r;
    r.state = allocate_model_state(spec);
    r.state.seed = seed;
    Rng rng(seed);
    init_weights(r.state, rng);
    r.trace = model_shape_trace(spec);
    return r;
}

std::vector<ParamRef> trainable_parameters(ModelState& state) {
    std::vector<ParamRef> refs;
    visit_trainable(state, [&](const std::string& name, Tensor& t) { refs.push_back({name, &t}); });
    return refs;
}

// ---------------------------------------------------------------- forward

Tensor model_forward(ModelState& state, const Tensor& batch, Phase phase, Rng* rng,
                     ForwardCache* cache) {
    const ModelSpec& spec = state.spec;
    if (batch.rank() != 4) throw ShapeError("model input must be N x H x W x C");
    if (batch.dim(3) != spec.channels) {
        throw ShapeError("model input has " + std::to_string(batch.dim(3)) +
                         " channels, spec expects " + std::to_string(spec.channels));
    }
    if (batch.dim(1) != spec.input_size || batch.dim(2) != spec.input_size) {
        throw ShapeError("model input is " + batch.shape_str() + ", spec expects H=W=" +
                         std::to_string(spec.input_size));
    }
    const bool train = phase == Phase::Train;
    if (train && (!rng || !cache)) {
        throw StateError("train-phase forward needs an rng and a cache");
    }
    if (cache) {
        cache->blocks.clear();
        cache->blocks.resize(state.blocks.size());
    }

    const int n = batch.dim(0);
    Tensor x = batch;
    for (std::size_t b = 0; b < state.blocks.size(); ++b) {
        ConvBlock& block = state.blocks[b];
        BlockCache* bc = cache ? &cache->blocks[b] : nullptr;
        for (std::size_t j = 0; j < block.convs.size(); ++j) {
            Tensor pre = conv2d_forward(x, block.convs[j].w, block.convs[j].b);
            Tensor act = activation_forward(pre, Activation::Relu);
            if (bc) {
                ConvCache cc;
                cc.input = std::move(x);
                cc.relu_out = act;
                bc->convs.push_back(std::move(cc));
            }
            x = std::move(act);
        }
        if (train) {
            x = batch_norm_forward_train(x, block.bn.gamma, block.bn.beta, block.bn.running_mean,
                                         block.bn.running_var, bc->bn);
        } else {
            x = batch_norm_forward_infer(x, block.bn.gamma, block.bn.beta, block.bn.running_mean,
                                         block.bn.running_var);
        }
        PoolCache local_pool;
        x = maxpool2d_forward(x, bc ? bc->pool : local_pool);
        if (train && spec.dropout_rate > 0.0) {
            DropoutResult dr = dropout_forward(x, spec.dropout_rate, *rng, true);
            x = std::move(dr.output);
            bc->dropout_mask = std::move(dr.mask);
        }
    }

    const int side = post_conv_side(spec);
    const int seq_t = side * side;
    const int seq_d = x.dim(3);
    if (cache) {
        cache->post_h = x.dim(1);
        cache->post_w = x.dim(2);
    }
    Tensor seq = x.reshaped({n, seq_t, seq_d});

    LstmSequenceCache local_lstm;
    Tensor lstm_out = lstm_sequence_forward(seq, state.lstm, cache ? &cache->lstm : &local_lstm);
    Tensor flat = lstm_out.reshaped({n, seq_t * spec.lstm_hidden});

    Tensor fc_pre = dense_forward(flat, state.fc.w, state.fc.b);
    Tensor fc_act = activation_forward(fc_pre, Activation::Relu);
    if (cache) {
        cache->fc_input = std::move(flat);
        cache->fc_relu_out = fc_act;
    }
    return dense_forward(fc_act, state.out.w, state.out.b);
}

// ---------------------------------------------------------------- backward

std::vector<Tensor> model_backward(ModelState& state, const ForwardCache& cache,
                                   const Tensor& d_logits) {
    if (cache.blocks.size() != state.blocks.size() || cache.fc_relu_out.empty()) {
        throw ValidationError("forward cache is empty or stale");
    }
    const int n = d_logits.dim(0);
    const ModelSpec& spec = state.spec;

    KernelGrads out_g = dense_backward(cache.fc_relu_out, state.out.w, d_logits);
    Tensor d_fc_pre = activation_backward(out_g.d_input, cache.fc_relu_out, Activation::Relu);
    KernelGrads fc_g = dense_backward(cache.fc_input, state.fc.w, d_fc_pre);

    const int side = post_conv_side(spec);
    const int seq_t = side * side;
    Tensor d_lstm_out = fc_g.d_input.reshaped({n, seq_t, spec.lstm_hidden});
    LstmBackwardResult lstm_g = lstm_backward(cache.lstm, state.lstm, d_lstm_out);

    Tensor d = lstm_g.d_input.reshaped({n, cache.post_h, cache.post_w, state.lstm.input_width});

    std::vector<std::vector<KernelGrads>> conv_grads(state.blocks.size());
    std::vector<BatchNormGrads> bn_grads(state.blocks.size());
    for (int b = static_cast<int>(state.blocks.size()) - 1; b >= 0; --b) {
        ConvBlock& block = state.blocks[static_cast<std::size_t>(b)];
        const BlockCache& bc = cache.blocks[static_cast<std::size_t>(b)];
        if (!bc.dropout_mask.empty()) d = dropout_backward(d, bc.dropout_mask);
        d = maxpool2d_backward(d, bc.pool);
        bn_grads[b] = batch_norm_backward(d, bc.bn, block.bn.gamma);
        d = std::move(bn_grads[b].d_input);
        conv_grads[b].resize(block.convs.size());
        for (int j = static_cast<int>(block.convs.size()) - 1; j >= 0; --j) {
            const ConvCache& cc = bc.convs[static_cast<std::size_t>(j)];
            Tensor d_pre = activation_backward(d, cc.relu_out, Activation::Relu);
            conv_grads[b][j] = conv2d_backward(cc.input, block.convs[j].w, d_pre);
            d = std::move(conv_grads[b][j].d_input);
        }
    }

    // Flatten in the same order as trainable_parameters().
    std::vector<Tensor> grads;
    for (std::size_t b = 0; b < state.blocks.size(); ++b) {
        for (std::size_t j = 0; j < state.blocks[b].convs.size(); ++j) {
            grads.push_back(std::move(conv_grads[b][j].d_weights));
            grads.push_back(std::move(conv_grads[b][j].d_bias));
        }
        grads.push_back(std::move(bn_grads[b].d_gamma));
        grads.push_back(std::move(bn_grads[b].d_beta));
    }
    grads.push_back(std::move(lstm_g.grads.d_w_i));
    grads.push_back(std::move(lstm_g.grads.d_b_i));
    grads.push_back(std::move(lstm_g.grads.d_w_c));
    grads.push_back(std::move(lstm_g.grads.d_b_c));
    grads.push_back(std::move(lstm_g.grads.d_w_f));
    grads.push_back(std::move(lstm_g.grads.d_b_f));
    grads.push_back(std::move(lstm_g.grads.d_w_o));
    grads.push_back(std::move(lstm_g.grads.d_b_o));
    grads.push_back(std::move(fc_g.d_weights));
    grads.push_back(std::move(fc_g.d_bias));
    grads.push_back(std::move(out_g.d_weights));
    grads.push_back(std::move(out_g.d_bias));
    return grads;
}

// ---------------------------------------------------------------- optimizer

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(cfg.lr0 > 0.0)) throw ConfigError("learning rate must be > 0");
    if (!(cfg.decay_rate > 0.0 && cfg.decay_rate <= 1.0)) {
        throw ConfigError("decay_rate must be in (0,1]");
    }
    if (cfg.decay_step < 1) throw ConfigError("decay_step must be >= 1");
}

double lr_for_epoch(const TrainConfig& cfg, int epoch) {
    return cfg.lr0 * std::pow(cfg.decay_rate, static_cast<double>(epoch / cfg.decay_step));
}

void adam_step(ModelState& state, const std::vector<Tensor>& grads, const TrainConfig& cfg,
               int epoch) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    auto params = trainable_parameters(state);
    if (grads.size() != params.size()) {
        throw ShapeError("adam_step got " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
    }
    if (state.adam_m.empty()) {
        for (const auto& p : params) {
            state.adam_m.emplace_back(p.tensor->shape());
            state.adam_v.emplace_back(p.tensor->shape());
        }
    }
    const double lr = lr_for_epoch(cfg, epoch);
    const std::uint64_t t = ++state.adam_t;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));

    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k].tensor;
        const Tensor& g = grads[k];
        if (!g.same_shape(p)) {
            throw ShapeError("gradient for " + params[k].name + " has shape " + g.shape_str());
        }
        Tensor& m = state.adam_m[k];
        Tensor& v = state.adam_v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g[i];
            if (!std::isfinite(gi)) {
                throw NumericError("non-finite gradient in " + params[k].name +
                                   "; training aborted");
            }
            m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
            v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
            p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
        }
    }
}

// ---------------------------------------------------------------- batch source

TensorBatchSource::TensorBatchSource(Tensor x, Tensor y, int batch_size, std::uint64_t seed,
                                     bool shuffle)
    : x_(std::move(x)), y_(std::move(y)), batch_size_(batch_size), seed_(seed), shuffle_(shuffle) {
    if (x_.dim(0) != y_.dim(0)) throw ShapeError("batch source: x and y sample counts differ");
    if (batch_size_ < 1) throw ConfigError("batch_size must be >= 1");
    order_.resize(static_cast<std::size_t>(x_.dim(0)));
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
}

std::size_t TensorBatchSource::sample_count() const { return order_.size(); }

void TensorBatchSource::begin_epoch(int epoch) {
    cursor_ = 0;
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (shuffle_) {
        Rng rng(Rng::derive(seed_, static_cast<std::uint64_t>(epoch), 0));
        for (std::size_t i = order_.size(); i > 1; --i) {
            std::swap(order_[i - 1], order_[static_cast<std::size_t>(rng.uniform_int(i))]);
        }
    }
}

bool TensorBatchSource::next_batch(Tensor& x, Tensor& y) {
    if (cursor_ >= order_.size()) return false;
    const std::size_t take = std::min<std::size_t>(batch_size_, order_.size() - cursor_);
    const std::size_t row_x = x_.size() / static_cast<std::size_t>(x_.dim(0));
    const std::size_t row_y = y_.size() / static_cast<std::size_t>(y_.dim(0));
    std::vector<int> xs = x_.shape();
    xs[0] = static_cast<int>(take);
    x = Tensor(xs);
    y = Tensor({static_cast<int>(take), y_.dim(1)});
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t src = order_[cursor_ + i];
        std::memcpy(x.data() + i * row_x, x_.data() + src * row_x, sizeof(double) * row_x);
        std::memcpy(y.data() + i * row_y, y_.data() + src * row_y, sizeof(double) * row_y);
    }
    cursor_ += take;
    return true;
}

// ---------------------------------------------------------------- fit / predict

namespace {

std::size_t count_correct(const Tensor& logits, const Tensor& labels) {
    const int n = logits.dim(0), k = logits.dim(1);
    std::size_t correct = 0;
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int j = 1; j < k; ++j) {
            if (logits.at(i, j) > logits.at(i, best)) best = j;
        }
        if (labels.at(i, best) == 1.0) ++correct;
    }
    return correct;
}

}  // namespace

History fit(ModelState& state, BatchSource& train, const TrainConfig& cfg, BatchSource* val,
            const EpochCallback& on_epoch) {
    validate_train_config(cfg);
    if (train.sample_count() == 0) throw ConfigError("training set is empty");

    History history;
    Tensor bx, by;
    for (int e = state.epoch; e < cfg.epochs; ++e) {
        const double lr = lr_for_epoch(cfg, e);
        train.begin_epoch(e);
        double loss_sum = 0.0;
        std::size_t seen = 0, correct = 0, batch_idx = 0;
        while (train.next_batch(bx, by)) {
            Rng dropout_rng(Rng::derive(cfg.seed ^ 0xD90977ULL, static_cast<std::uint64_t>(e),
                                        batch_idx));
            ForwardCache cache;
            Tensor logits = model_forward(state, bx, Phase::Train, &dropout_rng, &cache);
            LossResult loss = softmax_cross_entropy(logits, by);
            const std::size_t bn = static_cast<std::size_t>(bx.dim(0));
            loss_sum += loss.loss * static_cast<double>(bn);
            correct += count_correct(logits, by);
            seen += bn;
            std::vector<Tensor> grads = model_backward(state, cache, loss.d_logits);
            adam_step(state, grads, cfg, e);
            ++batch_idx;
        }
        EpochStats stats;
        stats.epoch = e;
        stats.lr = lr;
        stats.train_loss = loss_sum / static_cast<double>(seen);
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
        if (val && val->sample_count() > 0) {
            val->begin_epoch(e);
            double vloss = 0.0;
            std::size_t vseen = 0, vcorrect = 0;
            while (val->next_batch(bx, by)) {
                Tensor logits = model_forward(state, bx, Phase::Infer);
                LossResult loss = softmax_cross_entropy(logits, by);
                vloss += loss.loss * bx.dim(0);
                vcorrect += count_correct(logits, by);
                vseen += static_cast<std::size_t>(bx.dim(0));
            }
            stats.val_loss = vloss / static_cast<double>(vseen);
            stats.val_acc = static_cast<double>(vcorrect) / static_cast<double>(vseen);
        }
        state.epoch = e + 1;
        history.push_back(stats);
        if (on_epoch && !on_epoch(stats)) break;
    }
    return history;
}

Prediction predict(ModelState& state, const Tensor& batch) {
    Prediction p;
    Tensor logits = model_forward(state, batch, Phase::Infer);
    p.probabilities = activation_forward(logits, Activation::Softmax);
    const int n = logits.dim(0), k = logits.dim(1);
    p.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int j = 1; j < k; ++j) {
            if (logits.at(i, j) > logits.at(i, best)) best = j;
        }
        p.labels[static_cast<std::size_t>(i)] = best;
    }
    return p;
}

// ---------------------------------------------------------------- checkpoint

namespace {

constexpr char kMagic[8] = {'A', 'M', 'D', 'N', 'E', 'T', 'C', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

struct HashedWriter {
    std::ofstream f;
    std::uint64_t hash = kFnvOffset;

    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= b[i];
            hash *= kFnvPrime;
        }
        f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void tensor(const std::string& name, const Tensor& t) {
        str(name);
        u32(static_cast<std::uint32_t>(t.rank()));
        for (int d : t.shape()) u32(static_cast<std::uint32_t>(d));
        bytes(t.data(), t.size() * sizeof(double));
    }
};

struct HashedReader {
    std::ifstream f;
    std::uint64_t hash = kFnvOffset;

    void bytes(void* p, std::size_t n) {
        f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(f.gcount()) != n) {
            throw CheckpointError("file is truncated or unreadable");
        }
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= b[i];
            hash *= kFnvPrime;
        }
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, sizeof v);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        if (n > (1u << 20)) throw CheckpointError("implausible string length");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    void tensor_into(const std::string& expected_name, Tensor& t) {
        const std::string name = str();
        if (name != expected_name) {
            throw CheckpointError("expected tensor '" + expected_name + "', found '" + name + "'");
        }
        const std::uint32_t rank = u32();
        if (rank != static_cast<std::uint32_t>(t.rank())) {
            throw CheckpointError("tensor '" + name + "' rank mismatch");
        }
        for (int d : t.shape()) {
            if (u32() != static_cast<std::uint32_t>(d)) {
                throw CheckpointError("tensor '" + name + "' shape mismatch");
            }
        }
        bytes(t.data(), t.size() * sizeof(double));
    }
};

}  // namespace

void save_checkpoint(const ModelState& state, const std::string& path) {
    HashedWriter w;
    w.f.open(path, std::ios::binary | std::ios::trunc);
    if (!w.f) throw IoError("cannot open checkpoint for writing: " + path);

    w.bytes(kMagic, sizeof kMagic);
    w.u32(kVersion);
    const ModelSpec& spec = state.spec;
    w.u32(static_cast<std::uint32_t>(spec.input_size));
    w.u32(static_cast<std::uint32_t>(spec.channels));
    w.u32(static_cast<std::uint32_t>(spec.block_filters.size()));
    for (int v : spec.block_filters) w.u32(static_cast<std::uint32_t>(v));
    for (int v : spec.convs_per_block) w.u32(static_cast<std::uint32_t>(v));
    w.u32(static_cast<std::uint32_t>(spec.lstm_hidden));
    w.u32(static_cast<std::uint32_t>(spec.fc_units));
    w.u32(static_cast<std::uint32_t>(spec.classes));
    w.f64(spec.dropout_rate);
    w.u32(static_cast<std::uint32_t>(state.epoch));
    w.u64(state.adam_t);
    w.u64(state.seed);
    w.u32(state.adam_m.empty() ? 0u : 1u);

    auto& mutable_state = const_cast<ModelState&>(state);  // visited read-only
    std::vector<ParamRef> params = trainable_parameters(mutable_state);
    for (const auto& p : params) w.tensor(p.name, *p.tensor);
    visit_running_stats(state, [&](const std::string& name, const Tensor& t) { w.tensor(name, t); });
    if (!state.adam_m.empty()) {
        for (std::size_t k = 0; k < params.size(); ++k) {
            w.tensor("adam.m." + params[k].name, state.adam_m[k]);
            w.tensor("adam.v." + params[k].name, state.adam_v[k]);
        }
    }
    const std::uint64_t checksum = w.hash;
    w.f.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
    if (!w.f) throw IoError("failed writing checkpoint: " + path);
}

ModelState load_checkpoint(const std::string& path, const std::optional<ModelSpec>& expected_spec) {
    HashedReader r;
    r.f.open(path, std::ios::binary);
    if (!r.f) throw StateError("checkpoint not found: " + path);

    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw CheckpointError("bad magic; not a checkpoint file");
    }
    if (r.u32() != kVersion) throw CheckpointError("unsupported checkpoint version");

    ModelSpec spec;
    spec.input_size = static_cast<int>(r.u32());
    spec.channels = static_cast<int>(r.u32());
    const std::uint32_t n_blocks = r.u32();
    if (n_blocks == 0 || n_blocks > 16) throw CheckpointError("implausible block count");
    spec.block_filters.resize(n_blocks);
    spec.convs_per_block.resize(n_blocks);
    for (auto& v : spec.block_filters) v = static_cast<int>(r.u32());
    for (auto& v : spec.convs_per_block) v = static_cast<int>(r.u32());
    spec.lstm_hidden = static_cast<int>(r.u32());
    spec.fc_units = static_cast<int>(r.u32());
    spec.classes = static_cast<int>(r.u32());
    spec.dropout_rate = r.f64();
    validate_spec(spec);
    if (expected_spec && !(spec == *expected_spec)) {
        throw CheckpointError("checkpoint spec does not match the requested model spec");
    }

    ModelState state = allocate_model_state(spec);
    state.epoch = static_cast<int>(r.u32());
    state.adam_t = r.u64();
    state.seed = r.u64();
    const bool has_moments = r.u32() != 0;

    std::vector<ParamRef> params = trainable_parameters(state);
    for (auto& p : params) r.tensor_into(p.name, *p.tensor);
    visit_running_stats(state, [&](const std::string& name, Tensor& t) { r.tensor_into(name, t); });
    if (has_moments) {
        for (const auto& p : params) {
            state.adam_m.emplace_back(p.tensor->shape());
            state.adam_v.emplace_back(p.tensor->shape());
        }
        for (std::size_t k = 0; k < params.size(); ++k) {
            r.tensor_into("adam.m." + params[k].name, state.adam_m[k]);
            r.tensor_into("adam.v." + params[k].name, state.adam_v[k]);
        }
    }

    const std::uint64_t computed = r.hash;
    std::uint64_t stored;
    r.f.read(reinterpret_cast<char*>(&stored), sizeof stored);
    if (static_cast<std::size_t>(r.f.gcount()) != sizeof stored) {
        throw CheckpointError("file is truncated or unreadable");
    }
    if (stored != computed) throw CheckpointError("checksum mismatch; checkpoint is corrupt");
    r.f.peek();
    if (!r.f.eof()) throw CheckpointError("trailing bytes after checksum");
    return state;
}

}  // namespace amdnet
