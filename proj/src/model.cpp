#include "fedcarbon/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedcarbon/errors.hpp"
#include "fedcarbon/rng.hpp"

namespace fedcarbon {

namespace {

// Forward pass keeping pre-activations and activations for backprop.
struct ForwardTrace {
    std::vector<std::vector<double>> activations;  // a[0] = input, a[L] = logits
    std::vector<std::vector<double>> pre_acts;     // z per layer
};

ForwardTrace forward_trace(const ModelParams& params,
                           const std::vector<double>& features) {
    if (features.size() != params.input_dim())
        throw ShapeError("forward: feature length " +
                         std::to_string(features.size()) +
                         " does not match model input dim " +
                         std::to_string(params.input_dim()));
    ForwardTrace t;
    t.activations.push_back(features);
    const double* p = params.values.data();
    const std::size_t layers = params.shapes.size();
    for (std::size_t l = 0; l < layers; ++l) {
        const LayerShape& s = params.shapes[l];
        const std::vector<double>& in = t.activations.back();
        const double* w = p;
        const double* b = p + s.weight_count();
        std::vector<double> z(s.rows);
        for (std::size_t r = 0; r < s.rows; ++r) {
            double acc = b[r];
            const double* wr = w + r * s.cols;
            for (std::size_t cidx = 0; cidx < s.cols; ++cidx)
                acc += wr[cidx] * in[cidx];
            z[r] = acc;
        }
        t.pre_acts.push_back(z);
        if (l + 1 < layers) {
            for (auto& v : z) v = std::max(0.0, v);  // ReLU on hidden layers
        }
        t.activations.push_back(std::move(z));
        p += s.size();
    }
    return t;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

// Accumulates scale * d(loss)/d(params) into grad_out. Shared by the public
// per-sample gradient and the mini-batch loop so both follow the same
// arithmetic path.
void backprop_accumulate(const ModelParams& params, const Sample& sample,
                         double scale, std::vector<double>& grad_out) {
    const ForwardTrace trace = forward_trace(params, sample.features);
    const std::vector<double>& logits = trace.activations.back();
    if (sample.label < 0 || static_cast<std::size_t>(sample.label) >= logits.size())
        throw ShapeError("label " + std::to_string(sample.label) +
                         " out of range for " + std::to_string(logits.size()) +
                         " classes");

    // delta at the output: softmax(logits) - onehot(label)
    std::vector<double> delta = softmax(logits);
    delta[static_cast<std::size_t>(sample.label)] -= 1.0;

    const std::size_t layers = params.shapes.size();
    std::vector<std::size_t> offsets(layers);
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        offsets[l] = off;
        off += params.shapes[l].size();
    }

    for (std::size_t li = layers; li-- > 0;) {
        const LayerShape& s = params.shapes[li];
        const std::vector<double>& in = trace.activations[li];
        double* gw = grad_out.data() + offsets[li];
        double* gb = gw + s.weight_count();
        for (std::size_t r = 0; r < s.rows; ++r) {
            const double d = delta[r] * scale;
            double* gwr = gw + r * s.cols;
            for (std::size_t cidx = 0; cidx < s.cols; ++cidx)
                gwr[cidx] += d * in[cidx];
            gb[r] += d;
        }
        if (li == 0) break;
        const double* w = params.values.data() + offsets[li];
        std::vector<double> prev(s.cols, 0.0);
        for (std::size_t r = 0; r < s.rows; ++r) {
            const double d = delta[r];
            const double* wr = w + r * s.cols;
            for (std::size_t cidx = 0; cidx < s.cols; ++cidx)
                prev[cidx] += wr[cidx] * d;
        }
        // ReLU mask from the previous layer's pre-activations
        const std::vector<double>& z = trace.pre_acts[li - 1];
        for (std::size_t cidx = 0; cidx < s.cols; ++cidx)
            if (z[cidx] <= 0.0) prev[cidx] = 0.0;
        delta = std::move(prev);
    }
}

}  // namespace

ModelParams init_params(const std::vector<std::size_t>& layer_dims,
                        std::uint64_t seed) {
    if (layer_dims.size() < 2)
        throw ConfigError("init_params: need at least input and output dims");
    for (std::size_t d : layer_dims)
        if (d == 0) throw ConfigError("init_params: all layer dims must be positive");

    ModelParams params;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l)
        params.shapes.push_back(LayerShape{layer_dims[l + 1], layer_dims[l]});

    std::size_t total = 0;
    for (const auto& s : params.shapes) total += s.size();
    params.values.resize(total, 0.0);

    Rng rng(derive_seed(seed, 0x1217));
    double* p = params.values.data();
    for (const auto& s : params.shapes) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(s.cols));
        for (std::size_t i = 0; i < s.weight_count(); ++i)
            p[i] = rng.uniform(-bound, bound);
        // biases stay zero
        p += s.size();
    }
    return params;
}

std::vector<double> forward(const ModelParams& params,
                            const std::vector<double>& features) {
    return forward_trace(params, features).activations.back();
}

double loss(const std::vector<double>& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw ShapeError("loss: label " + std::to_string(label) +
                         " out of range for " + std::to_string(logits.size()) +
                         " logits");
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - m);
    return m + std::log(sum) - logits[static_cast<std::size_t>(label)];
}

std::vector<double> per_sample_grad(const ModelParams& params,
                                    const Sample& sample) {
    std::vector<double> grad(params.param_count(), 0.0);
    backprop_accumulate(params, sample, 1.0, grad);
    for (double g : grad)
        if (!std::isfinite(g))
            throw NumericError("per_sample_grad: non-finite gradient component");
    return grad;
}

AdamState make_adam_state(std::size_t param_count, const OptimizerConfig& cfg) {
    if (cfg.lr <= 0.0) throw ConfigError("adam: lr must be positive");
    if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0)
        throw ConfigError("adam: betas must lie in [0, 1)");
    AdamState st;
    st.first_moment.assign(param_count, 0.0);
    st.second_moment.assign(param_count, 0.0);
    st.lr = cfg.lr;
    st.beta1 = cfg.beta1;
    st.beta2 = cfg.beta2;
    st.epsilon = cfg.epsilon;
    return st;
}

std::pair<AdamState, ModelParams> adam_step(const AdamState& state,
                                            const ModelParams& params,
                                            const std::vector<double>& grad) {
    if (grad.size() != params.param_count() ||
        state.first_moment.size() != params.param_count())
        throw ShapeError("adam_step: size mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");

    AdamState st = state;
    ModelParams out = params;
    st.step_count += 1;
    const double t = static_cast<double>(st.step_count);
    const double bc1 = 1.0 - std::pow(st.beta1, t);
    const double bc2 = 1.0 - std::pow(st.beta2, t);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        st.first_moment[i] = st.beta1 * st.first_moment[i] + (1.0 - st.beta1) * grad[i];
        st.second_moment[i] =
            st.beta2 * st.second_moment[i] + (1.0 - st.beta2) * grad[i] * grad[i];
        const double mhat = st.first_moment[i] / bc1;
        const double vhat = st.second_moment[i] / bc2;
        out.values[i] -= st.lr * mhat / (std::sqrt(vhat) + st.epsilon);
    }
    return {std::move(st), std::move(out)};
}

LocalTrainResult local_train(const ModelParams& params,
                             const std::vector<Sample>& data, int epochs,
                             int batch_size, const OptimizerConfig& opt,
                             std::uint64_t seed) {
    if (data.empty()) throw ConfigError("local_train: empty dataset");
    if (epochs < 0) throw ConfigError("local_train: negative epoch count");
    if (batch_size <= 0) throw ConfigError("local_train: batch size must be positive");

    LocalTrainResult res;
    res.params = params;
    AdamState adam = make_adam_state(params.param_count(), opt);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(params.param_count());

    for (int e = 0; e < epochs; ++e) {
        Rng rng(derive_seed(seed, 0xE60C, static_cast<std::uint64_t>(e)));
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(batch_size));
            std::fill(grad.begin(), grad.end(), 0.0);
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (std::size_t i = start; i < stop; ++i)
                backprop_accumulate(res.params, data[order[i]], scale, grad);
            auto stepped = adam_step(adam, res.params, grad);
            adam = std::move(stepped.first);
            res.params = std::move(stepped.second);
        }
    }

    res.per_sample_losses.reserve(data.size());
    double total = 0.0;
    for (const Sample& s : data) {
        const double l = loss(forward(res.params, s.features), s.label);
        res.per_sample_losses.push_back(l);
        total += l;
    }
    res.mean_loss = total / static_cast<double>(data.size());
    return res;
}

EvalResult evaluate(const ModelParams& params, const std::vector<Sample>& test) {
    if (test.empty()) throw ConfigError("evaluate: empty test set");
    std::size_t correct = 0;
    double total = 0.0;
    for (const Sample& s : test) {
        const std::vector<double> logits = forward(params, s.features);
        total += loss(logits, s.label);
        std::size_t best = 0;
        for (std::size_t i = 1; i < logits.size(); ++i)
            if (logits[i] > logits[best]) best = i;  // ties keep the lowest index
        if (best == static_cast<std::size_t>(s.label)) ++correct;
    }
    return EvalResult{static_cast<double>(correct) / static_cast<double>(test.size()),
                      total / static_cast<double>(test.size())};
}

PerSampleGradStats make_grad_stats(std::vector<double> norms) {
    PerSampleGradStats st;
    st.count = norms.size();
    double acc = 0.0;
    for (double n : norms) acc += n * n;
    st.mean_square = st.count == 0 ? 0.0 : acc / static_cast<double>(st.count);
    st.norms = std::move(norms);
    return st;
}

}  // namespace fedcarbon
