#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace fedcarbon {

/// One labeled sample. Features are expected to lie in [0, 1].
struct Sample {
    std::vector<double> features;
    int label = 0;
};

struct LayerShape {
    std::size_t rows = 0;  // output dim
    std::size_t cols = 0;  // input dim
    std::size_t weight_count() const { return rows * cols; }
    std::size_t size() const { return rows * cols + rows; }  // weights + bias
};

/// Flat parameter vector for a fully-connected ReLU network with a linear
/// output layer. Layout per layer: row-major weight matrix, then bias.
struct ModelParams {
    std::vector<double> values;
    std::vector<LayerShape> shapes;

    std::size_t param_count() const { return values.size(); }
    std::size_t input_dim() const { return shapes.front().cols; }
    std::size_t output_dim() const { return shapes.back().rows; }
};

struct OptimizerConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::int64_t step_count = 0;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Per-sample gradient L2 norms for one client, plus their mean square.
struct PerSampleGradStats {
    std::vector<double> norms;
    double mean_square = 0.0;
    std::size_t count = 0;
};

struct LocalTrainResult {
    ModelParams params;
    double mean_loss = 0.0;
    std::vector<double> per_sample_losses;  // post-training, full dataset order
};

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

/// Builds a network from layer_dims (>= 2 entries, all positive). Weights are
/// uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero. Deterministic
/// per seed.
ModelParams init_params(const std::vector<std::size_t>& layer_dims,
                        std::uint64_t seed);

/// Forward pass: ReLU hidden layers, linear output. Returns the logits.
std::vector<double> forward(const ModelParams& params,
                            const std::vector<double>& features);

/// Numerically stable softmax cross-entropy.
double loss(const std::vector<double>& logits, int label);

/// Gradient of loss(forward(params, x), y) with respect to every parameter,
/// via reverse-mode differentiation. Same layout as ModelParams::values.
std::vector<double> per_sample_grad(const ModelParams& params,
                                    const Sample& sample);

AdamState make_adam_state(std::size_t param_count, const OptimizerConfig& cfg);

/// One Adam update with bias correction. Pure: returns the new state/params.
std::pair<AdamState, ModelParams> adam_step(const AdamState& state,
                                            const ModelParams& params,
                                            const std::vector<double>& grad);

/// Mini-batch training: `epochs` passes with per-epoch reshuffling from
/// `seed`, last incomplete batch kept, fresh Adam state. Returns the trained
/// parameters plus post-training per-sample losses over the full dataset.
LocalTrainResult local_train(const ModelParams& params,
                             const std::vector<Sample>& data, int epochs,
                             int batch_size, const OptimizerConfig& opt,
                             std::uint64_t seed);

/// Accuracy (argmax, ties to the lowest class index) and mean loss.
EvalResult evaluate(const ModelParams& params, const std::vector<Sample>& test);

PerSampleGradStats make_grad_stats(std::vector<double> norms);

}  // namespace fedcarbon
