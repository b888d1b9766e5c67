#include "noiselab/config.hpp"

#include <cmath>

#include "noiselab/error.hpp"

namespace noiselab {

void RunConfig::validate() const {
    if (batch_size == 0 || phase2_batch_size == 0) throw ArgumentError("batch sizes must be positive");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ArgumentError("learning rate must be positive");
    objective.validate();
    if (!(forget_margin >= 0.0) || !std::isfinite(forget_margin)) {
        throw ArgumentError("forget_margin must be nonnegative");
    }
    if (forget_rate_override && !(*forget_rate_override >= 0.0 && *forget_rate_override < 1.0)) {
        throw ArgumentError("forget_rate_override must lie in [0, 1)");
    }
    if (!model_spec.layer_sizes.empty()) model_spec.validate();
}

MlpSpec RunConfig::resolve_model_spec(std::size_t feature_dim, int num_classes) const {
    if (model_spec.layer_sizes.empty()) return default_mlp_spec(feature_dim, num_classes, model_spec.init_seed);
    model_spec.validate();
    if (model_spec.input_size() != feature_dim || model_spec.output_size() != static_cast<std::size_t>(num_classes)) {
        throw ArgumentError("model_spec layer sizes do not match the dataset (feature_dim " +
                            std::to_string(feature_dim) + ", classes " + std::to_string(num_classes) + ")");
    }
    return model_spec;
}

}  // namespace noiselab
