#include "noiselab/training.hpp"

#include <cmath>
#include <numeric>

#include "noiselab/error.hpp"
#include "noiselab/metrics.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

TrainTrace train_epochs(ModelParams& params, const Dataset& d, const TrainOptions& options,
                        const EpochCallback& on_epoch_end) {
    if (options.batch_size == 0) throw ArgumentError("batch size must be positive");
    if (!(options.lr > 0.0)) throw ArgumentError("learning rate must be positive");
    options.objective.validate();
    if (d.empty()) throw RunError(options.phase, "training set is empty");

    TrainTrace trace;
    trace.initial_loss = evaluate_objective(params, d, options.objective);

    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    Gradients grads = Gradients::zeros_like(params);
    const double tau = options.objective.temperature;

    for (std::size_t e = 0; e < options.epochs; ++e) {
        const std::size_t epoch = options.first_epoch + e + 1;
        std::iota(order.begin(), order.end(), std::size_t{0});
        Xoshiro256 rng(derive_seed(options.seed, {epoch}));
        rng.shuffle(std::span<std::size_t>(order));

        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += options.batch_size, ++batch_index) {
            const std::size_t end = std::min(n, start + options.batch_size);
            const double scale = 1.0 / static_cast<double>(end - start);
            grads.set_zero();
            for (std::size_t k = start; k < end; ++k) {
                const Sample& s = d.samples[order[k]];
                const auto [probs, cache] = forward(params, s.features, tau);
                const double loss = total_loss(probs, s.observed_label, options.objective);
                if (!std::isfinite(loss)) {
                    throw RunError(options.phase, "non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                                      std::to_string(batch_index));
                }
                loss_sum += loss;
                const auto d_probs = total_loss_grad(probs, s.observed_label, options.objective);
                accumulate_backward(params, cache, d_probs, scale, grads);
            }
            try {
                sgd_step_inplace(params, grads, options.lr, batch_index);
            } catch (const TrainingError& err) {
                throw RunError(options.phase, "epoch " + std::to_string(epoch) + ": " + err.what());
            }
        }

        EpochRecord record;
        record.epoch = epoch;
        record.phase = options.phase;
        record.train_loss = loss_sum / static_cast<double>(n);
        if (on_epoch_end) on_epoch_end(record, params);
        trace.epochs.push_back(std::move(record));
    }
    return trace;
}

double evaluate_objective(const ModelParams& params, const Dataset& d, const ObjectiveConfig& objective) {
    if (d.empty()) return 0.0;
    double sum = 0.0;
    for (const Sample& s : d.samples) {
        const auto probs = forward(params, s.features, objective.temperature).probs;
        sum += total_loss(probs, s.observed_label, objective);
    }
    return sum / static_cast<double>(d.size());
}

std::vector<double> per_sample_ce_losses(const ModelParams& params, const Dataset& d) {
    std::vector<double> losses;
    losses.reserve(d.size());
    for (const Sample& s : d.samples) {
        losses.push_back(ce_loss(forward(params, s.features, 1.0).probs, s.observed_label));
    }
    return losses;
}

double accuracy(const ModelParams& params, const Dataset& d, const std::vector<int>& labels, double temperature) {
    if (labels.size() != d.size()) throw ArgumentError("label vector does not match dataset size");
    if (d.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto probs = forward(params, d.samples[i].features, temperature).probs;
        if (static_cast<int>(argmax(probs)) == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(d.size());
}

}  // namespace noiselab
