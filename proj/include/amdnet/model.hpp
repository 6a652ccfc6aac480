#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "amdnet/kernels.hpp"
#include "amdnet/lstm.hpp"
#include "amdnet/rng.hpp"
#include "amdnet/tensor.hpp"

namespace amdnet {

/// Layer plan for the 23-layer CNN-LSTM: six conv blocks (each a run of
/// 3x3/ReLU convs closed by batch norm, 2x2 max pool and dropout), a
/// sequence reshape, one LSTM layer, one FC layer and the softmax output.
/// Defaults give the full-size network; tests use reduced copies.
struct ModelSpec {
    int input_size = 256;  // H = W, must be divisible by 2^6
    int channels = 3;
    std::vector<int> block_filters = {32, 64, 128, 256, 512, 512};
    std::vector<int> convs_per_block = {2, 2, 2, 2, 3, 3};
    int lstm_hidden = 512;
    int fc_units = 64;
    int classes = 4;
    double dropout_rate = 0.2;

    bool operator==(const ModelSpec&) const = default;
};

void validate_spec(const ModelSpec& spec);

/// One row of the layer table: counted layers only (convs, pools, LSTM, FC,
/// output); batch norm and dropout are not counted.
struct LayerTraceRow {
    int index = 0;
    std::string type;        // Convolution2D | Maxpooling2D | LSTM | FC | Output
    std::string kernel;      // "3 X 3", "2 X 2" or "-"
    std::string filters;     // filter / unit count or "-"
    std::string input_size;  // "256 X 256 X 3" style; FC/Output rows carry the parameter count
    long long params = 0;
};

std::vector<LayerTraceRow> model_shape_trace(const ModelSpec& spec);

struct ConvLayer {
    Tensor w;  // 3 x 3 x Cin x Cout
    Tensor b;  // [Cout]
};

struct BnLayer {
    Tensor gamma, beta;
    Tensor running_mean, running_var;
};

struct DenseLayer {
    Tensor w, b;
};

struct ConvBlock {
    std::vector<ConvLayer> convs;
    BnLayer bn;
};

struct ModelState {
    ModelSpec spec;
    std::vector<ConvBlock> blocks;
    LstmParams lstm;
    DenseLayer fc;
    DenseLayer out;

    // Adam moments aligned with trainable_parameters(); empty until the
    // first optimizer step.
    std::vector<Tensor> adam_m, adam_v;
    std::uint64_t adam_t = 0;

    int epoch = 0;
    std::uint64_t seed = 0;
};

struct BuildResult {
    ModelState state;
    std::vector<LayerTraceRow> trace;
};

/// Allocates and initializes all weights (He-uniform convs, Glorot-uniform
/// dense) and reports the layer table for the spec.
BuildResult build_model(const ModelSpec& spec, std::uint64_t seed);

/// Named views over every trainable tensor, in a stable order shared by the
/// optimizer, the gradient layout and the checkpoint format.
struct ParamRef {
    std::string name;
    Tensor* tensor;
};
std::vector<ParamRef> trainable_parameters(ModelState& state);

struct ConvCache {
    Tensor input;
    Tensor relu_out;
};
struct BlockCache {
    std::vector<ConvCache> convs;
    BatchNormCache bn;
    PoolCache pool;
    Tensor dropout_mask;
};
struct ForwardCache {
    std::vector<BlockCache> blocks;
    LstmSequenceCache lstm;
    Tensor fc_input;     // [N, T*U]
    Tensor fc_relu_out;  // [N, fc_units]
    int post_h = 0, post_w = 0;
};

enum class Phase { Train, Infer };

/// Runs the network on a batch scaled to [0,1], shape N x H x W x C.
/// Train phase updates batch-norm running stats, applies dropout from `rng`
/// and fills `cache` for the backward pass; both must be provided.
Tensor model_forward(ModelState& state, const Tensor& batch, Phase phase, Rng* rng = nullptr,
                     ForwardCache* cache = nullptr);

/// Gradient tensors aligned with trainable_parameters().
std::vector<Tensor> model_backward(ModelState& state, const ForwardCache& cache,
                                   const Tensor& d_logits);

struct TrainConfig {
    int batch_size = 32;
    int epochs = 100;
    double lr0 = 0.001;
    double decay_rate = 0.95;
    int decay_step = 1;  // epochs per decay application
    std::uint64_t seed = 42;
    bool augment = true;
};

void validate_train_config(const TrainConfig& cfg);

/// lr0 * decay_rate^floor(epoch / decay_step).
double lr_for_epoch(const TrainConfig& cfg, int epoch);

/// One Adam update (beta1 0.9, beta2 0.999, eps 1e-8) at the epoch's decayed
/// learning rate. Non-finite gradients abort with a diagnostic.
void adam_step(ModelState& state, const std::vector<Tensor>& grads, const TrainConfig& cfg,
               int epoch);

/// Deterministic batch stream; begin_epoch reshuffles for the given epoch.
class BatchSource {
public:
    virtual ~BatchSource() = default;
    virtual std::size_t sample_count() const = 0;
    virtual void begin_epoch(int epoch) = 0;
    /// Fills the next batch; returns false when the epoch is exhausted.
    virtual bool next_batch(Tensor& x, Tensor& y) = 0;
};

/// In-memory batch source over pre-built tensors (x: N x H x W x C,
/// y: N x K one-hot). Shuffles per epoch from (seed, epoch).
class TensorBatchSource final : public BatchSource {
public:
    TensorBatchSource(Tensor x, Tensor y, int batch_size, std::uint64_t seed, bool shuffle = true);
    std::size_t sample_count() const override;
    void begin_epoch(int epoch) override;
    bool next_batch(Tensor& x, Tensor& y) override;

private:
    Tensor x_, y_;
    int batch_size_;
    std::uint64_t seed_;
    bool shuffle_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    std::optional<double> val_loss;
    std::optional<double> val_acc;
};
using History = std::vector<EpochStats>;

/// Return false from the callback to stop before the epoch budget.
using EpochCallback = std::function<bool(const EpochStats&)>;

/// Full training loop: shuffled batches, forward/backward, Adam with the
/// exponential schedule, per-epoch loss/accuracy (plus held-out metrics when
/// `val` is given). Deterministic for fixed seed.
History fit(ModelState& state, BatchSource& train, const TrainConfig& cfg,
            BatchSource* val = nullptr, const EpochCallback& on_epoch = nullptr);

struct Prediction {
    Tensor probabilities;     // N x K, rows sum to 1
    std::vector<int> labels;  // argmax, lowest index wins ties
};
Prediction predict(ModelState& state, const Tensor& batch);

/// Versioned, checksummed binary snapshot: spec, epoch, optimizer state and
/// every tensor as row-major float64. load(save(s)) reproduces forward
/// outputs bitwise.
void save_checkpoint(const ModelState& state, const std::string& path);
ModelState load_checkpoint(const std::string& path,
                           const std::optional<ModelSpec>& expected_spec = std::nullopt);

}  // namespace amdnet
