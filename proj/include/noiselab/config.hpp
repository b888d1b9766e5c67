#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "noiselab/model.hpp"
#include "noiselab/objective.hpp"

namespace noiselab {

/// Hyperparameters of one training run. Field names double as the keys of
/// the JSON config file.
struct RunConfig {
    std::size_t phase1_epochs = 90;
    std::size_t phase2_epochs = 20;
    std::size_t phase3_epochs = 90;
    std::size_t batch_size = 128;
    std::size_t phase2_batch_size = 16;
    double lr = 0.01;
    ObjectiveConfig objective;
    /// Forget rate is eta_hat minus this margin, floored at zero.
    double forget_margin = 0.05;
    std::optional<double> forget_rate_override;
    bool reinit_phase3 = true;
    std::uint64_t seed = 0;
    /// Empty layer_sizes means default_mlp_spec() for the dataset at hand.
    MlpSpec model_spec;
    std::string estimator_path;

    void validate() const;
    std::size_t total_epochs() const { return phase1_epochs + phase2_epochs + phase3_epochs; }
    MlpSpec resolve_model_spec(std::size_t feature_dim, int num_classes) const;
};

}  // namespace noiselab
