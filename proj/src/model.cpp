#include "noiselab/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "noiselab/error.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

namespace {

std::uint64_t next_revision() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2) throw ArgumentError("MLP needs at least an input and an output layer");
    for (std::size_t s : layer_sizes) {
        if (s == 0) throw ArgumentError("MLP layer sizes must be positive");
    }
    if (layer_sizes.back() < 2) throw ArgumentError("MLP output layer must have at least 2 classes");
}

MlpSpec default_mlp_spec(std::size_t feature_dim, int num_classes, std::uint64_t init_seed) {
    MlpSpec spec;
    spec.layer_sizes = {feature_dim, 128, 64, static_cast<std::size_t>(num_classes)};
    spec.init_seed = init_seed;
    return spec;
}

void ModelParams::validate() const {
    spec.validate();
    if (layers.size() + 1 != spec.layer_sizes.size()) throw DataError("layer count does not match MLP spec");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& layer = layers[l];
        if (layer.inputs != spec.layer_sizes[l] || layer.outputs != spec.layer_sizes[l + 1] ||
            layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
            throw DataError("layer " + std::to_string(l) + " shape does not match MLP spec");
        }
        auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
            !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
            throw DataError("layer " + std::to_string(l) + " has non-finite parameters");
        }
    }
}

void ModelParams::touch() { revision = next_revision(); }

std::size_t ModelParams::parameter_count() const {
    std::size_t total = 0;
    for (const auto& layer : layers) total += layer.weights.size() + layer.bias.size();
    return total;
}

Gradients Gradients::zeros_like(const ModelParams& params) {
    Gradients g;
    g.layers.reserve(params.layers.size());
    for (const auto& layer : params.layers) g.layers.emplace_back(layer.inputs, layer.outputs);
    return g;
}

void Gradients::set_zero() {
    for (auto& layer : layers) {
        std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
}

bool Gradients::all_finite() const {
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(layers.begin(), layers.end(), [&](const DenseLayer& layer) {
        return std::all_of(layer.weights.begin(), layer.weights.end(), finite) &&
               std::all_of(layer.bias.begin(), layer.bias.end(), finite);
    });
}

ModelParams init_params(const MlpSpec& spec) {
    spec.validate();
    ModelParams params;
    params.spec = spec;
    Xoshiro256 rng(spec.init_seed);
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        DenseLayer layer(spec.layer_sizes[l], spec.layer_sizes[l + 1]);
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.inputs));
        for (double& w : layer.weights) w = rng.uniform(-bound, bound);
        params.layers.push_back(std::move(layer));
    }
    params.revision = next_revision();
    return params;
}

std::vector<double> tempered_softmax(std::span<const double> logits, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ArgumentError("softmax temperature must be positive");
    }
    if (logits.empty()) throw ArgumentError("softmax of an empty vector");
    const double z_max = *std::max_element(logits.begin(), logits.end());
    if (!std::isfinite(z_max)) throw ArgumentError("softmax logits must be finite");
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i])) throw ArgumentError("softmax logits must be finite");
        out[i] = std::exp((logits[i] - z_max) / temperature);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

ForwardResult forward(const ModelParams& params, std::span<const double> x, double temperature) {
    if (params.layers.empty()) throw ArgumentError("model has no layers");
    if (x.size() != params.layers.front().inputs) {
        throw ArgumentError("input has " + std::to_string(x.size()) + " features, model expects " +
                            std::to_string(params.layers.front().inputs));
    }
    ForwardCache cache;
    cache.temperature = temperature;
    cache.revision = params.revision;
    cache.activations.reserve(params.layers.size());
    cache.activations.emplace_back(x.begin(), x.end());

    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const DenseLayer& layer = params.layers[l];
        const std::vector<double>& in = cache.activations.back();
        std::vector<double> out(layer.outputs);
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double* w = layer.weights.data() + o * layer.inputs;
            double acc = layer.bias[o];
            for (std::size_t i = 0; i < layer.inputs; ++i) acc += w[i] * in[i];
            out[o] = acc;
        }
        if (l + 1 < params.layers.size()) {
            for (double& v : out) v = std::max(v, 0.0);
            cache.activations.push_back(std::move(out));
        } else {
            cache.logits = std::move(out);
        }
    }
    cache.probs = tempered_softmax(cache.logits, temperature);
    ForwardResult result;
    result.probs = cache.probs;
    result.cache = std::move(cache);
    return result;
}

void accumulate_backward(const ModelParams& params, const ForwardCache& cache, std::span<const double> d_probs,
                         double scale, Gradients& acc) {
    if (cache.revision != params.revision || cache.activations.size() != params.layers.size() ||
        cache.logits.size() != params.layers.back().outputs) {
        throw UsageError("forward cache does not belong to these parameters");
    }
    if (d_probs.size() != cache.probs.size()) throw ArgumentError("gradient length does not match class count");
    if (acc.layers.size() != params.layers.size()) throw ArgumentError("gradient buffer has the wrong shape");

    // Tempered softmax Jacobian: dz_j = sigma_j (g_j - <g, sigma>) / tau.
    const std::vector<double>& sigma = cache.probs;
    double dot = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) dot += d_probs[i] * sigma[i];
    std::vector<double> delta(sigma.size());
    for (std::size_t j = 0; j < sigma.size(); ++j) {
        delta[j] = sigma[j] * (d_probs[j] - dot) / cache.temperature;
    }

    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const DenseLayer& layer = params.layers[l];
        DenseLayer& grad = acc.layers[l];
        const std::vector<double>& in = cache.activations[l];
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double d = scale * delta[o];
            if (d == 0.0) continue;
            double* gw = grad.weights.data() + o * layer.inputs;
            for (std::size_t i = 0; i < layer.inputs; ++i) gw[i] += d * in[i];
            grad.bias[o] += d;
        }
        if (l == 0) break;
        std::vector<double> prev(layer.inputs, 0.0);
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* w = layer.weights.data() + o * layer.inputs;
            for (std::size_t i = 0; i < layer.inputs; ++i) prev[i] += w[i] * d;
        }
        // ReLU derivative taken as 0 at the kink.
        for (std::size_t i = 0; i < layer.inputs; ++i) {
            if (in[i] <= 0.0) prev[i] = 0.0;
        }
        delta = std::move(prev);
    }
}

Gradients backward(const ModelParams& params, const ForwardCache& cache, std::span<const double> d_probs) {
    Gradients g = Gradients::zeros_like(params);
    accumulate_backward(params, cache, d_probs, 1.0, g);
    return g;
}

void sgd_step_inplace(ModelParams& params, const Gradients& grads, double lr, std::size_t batch_index) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ArgumentError("learning rate must be positive");
    if (grads.layers.size() != params.layers.size()) throw ArgumentError("gradient shape does not match params");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        if (grads.layers[l].weights.size() != params.layers[l].weights.size() ||
            grads.layers[l].bias.size() != params.layers[l].bias.size()) {
            throw ArgumentError("gradient shape does not match params");
        }
    }
    if (!grads.all_finite()) {
        throw TrainingError("non-finite gradient at batch " + std::to_string(batch_index), batch_index);
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& layer = params.layers[l];
        const auto& g = grads.layers[l];
        for (std::size_t k = 0; k < layer.weights.size(); ++k) layer.weights[k] -= lr * g.weights[k];
        for (std::size_t k = 0; k < layer.bias.size(); ++k) layer.bias[k] -= lr * g.bias[k];
    }
    params.revision = next_revision();
}

ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double lr, std::size_t batch_index) {
    ModelParams next = params;
    sgd_step_inplace(next, grads, lr, batch_index);
    return next;
}

RowMatrix predict_probs(const ModelParams& params, const Dataset& d, double temperature) {
    RowMatrix out(d.size(), params.spec.output_size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto probs = forward(params, d.samples[i].features, temperature).probs;
        std::copy(probs.begin(), probs.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace noiselab
