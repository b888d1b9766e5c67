#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "noiselab/data.hpp"
#include "noiselab/matrix.hpp"

namespace noiselab {

enum class Activation { relu };

struct MlpSpec {
    /// Input width first, class count last.
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::relu;
    std::uint64_t init_seed = 0;

    void validate() const;
    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
};

/// [feature_dim, 128, 64, c]
MlpSpec default_mlp_spec(std::size_t feature_dim, int num_classes, std::uint64_t init_seed = 0);

struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;  // outputs x inputs, row-major
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out) : inputs(in), outputs(out), weights(in * out, 0.0), bias(out, 0.0) {}

    double& w(std::size_t o, std::size_t i) { return weights[o * inputs + i]; }
    double w(std::size_t o, std::size_t i) const { return weights[o * inputs + i]; }
};

struct ModelParams {
    MlpSpec spec;
    std::vector<DenseLayer> layers;
    /// Identifies the value state the parameters were produced in. Fresh
    /// params and every optimizer step get a new revision; copies share it.
    std::uint64_t revision = 0;

    /// Throws DataError on shape mismatch or non-finite entries.
    void validate() const;
    std::size_t parameter_count() const;
    /// Assign a fresh revision after editing weights directly.
    void touch();
};

/// Same layout as ModelParams, holding partial derivatives.
struct Gradients {
    std::vector<DenseLayer> layers;

    static Gradients zeros_like(const ModelParams& params);
    void set_zero();
    bool all_finite() const;
};

/// Everything backward() needs from a forward pass.
struct ForwardCache {
    /// activations[0] is the input, activations[l] the post-ReLU output of
    /// hidden layer l.
    std::vector<std::vector<double>> activations;
    std::vector<double> logits;
    std::vector<double> probs;
    double temperature = 1.0;
    std::uint64_t revision = 0;
};

struct ForwardResult {
    std::vector<double> probs;
    ForwardCache cache;
};

/// He-uniform weights in +-sqrt(6 / fan_in), zero biases.
ModelParams init_params(const MlpSpec& spec);

/// exp(z_i / tau) / sum_j exp(z_j / tau), evaluated after subtracting max(z).
std::vector<double> tempered_softmax(std::span<const double> logits, double temperature);

ForwardResult forward(const ModelParams& params, std::span<const double> x, double temperature);

Gradients backward(const ModelParams& params, const ForwardCache& cache, std::span<const double> d_probs);

/// acc += scale * backward(params, cache, d_probs), without allocating a
/// gradient per sample.
void accumulate_backward(const ModelParams& params, const ForwardCache& cache,
                         std::span<const double> d_probs, double scale, Gradients& acc);

/// params - lr * grads. Non-finite gradients raise TrainingError carrying
/// batch_index.
ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double lr,
                     std::size_t batch_index = 0);
void sgd_step_inplace(ModelParams& params, const Gradients& grads, double lr,
                      std::size_t batch_index = 0);

/// n x c matrix of tempered-softmax outputs.
RowMatrix predict_probs(const ModelParams& params, const Dataset& d, double temperature);

}  // namespace noiselab
