#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "noiselab/data.hpp"
#include "noiselab/model.hpp"
#include "noiselab/objective.hpp"

namespace noiselab {

struct EpochRecord {
    std::size_t epoch = 0;  // global across phases, 1-based
    std::string phase;
    double train_loss = 0.0;
    std::optional<double> val_accuracy;
};

struct TrainTrace {
    /// Mean objective over the training set before the first update.
    double initial_loss = 0.0;
    std::vector<EpochRecord> epochs;
};

struct TrainOptions {
    std::size_t epochs = 0;
    std::size_t batch_size = 128;
    double lr = 0.01;
    ObjectiveConfig objective = ObjectiveConfig::cross_entropy();
    /// Epoch e shuffles with derive_seed(seed, {first_epoch + e}).
    std::uint64_t seed = 0;
    std::size_t first_epoch = 0;
    std::string phase = "train";
};

using EpochCallback = std::function<void(EpochRecord&, const ModelParams&)>;

/// Minibatch SGD on the mean batch objective. Raises RunError (phase label,
/// epoch and batch index) if the loss or a gradient goes non-finite.
TrainTrace train_epochs(ModelParams& params, const Dataset& d, const TrainOptions& options,
                        const EpochCallback& on_epoch_end = {});

/// Mean objective over d with frozen params.
double evaluate_objective(const ModelParams& params, const Dataset& d, const ObjectiveConfig& objective);

/// Per-sample cross entropy against observed labels, untempered softmax.
std::vector<double> per_sample_ce_losses(const ModelParams& params, const Dataset& d);

/// Fraction of samples whose argmax matches `labels`.
double accuracy(const ModelParams& params, const Dataset& d, const std::vector<int>& labels, double temperature);

}  // namespace noiselab
