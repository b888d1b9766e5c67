#pragma once

#include <optional>
#include <string>
#include <vector>

#include "noiselab/config.hpp"
#include "noiselab/data.hpp"
#include "noiselab/estimator.hpp"
#include "noiselab/metrics.hpp"
#include "noiselab/model.hpp"
#include "noiselab/noise.hpp"
#include "noiselab/training.hpp"

namespace noiselab {

struct PhaseOutput {
    ModelParams params;
    /// Frozen-weight CE loss per training sample at the end of the phase.
    /// Empty for phase 3.
    std::vector<double> losses;
    TrainTrace trace;
};

struct SelectionResult {
    std::vector<std::size_t> kept;
    std::vector<std::size_t> removed;
    double forget_rate = 0.0;
    std::optional<double> eta_hat;
    std::optional<double> eta_hat_raw;
    std::vector<double> losses;
};

struct SelectionQuality {
    std::size_t removed_count = 0;
    std::size_t kept_count = 0;
    std::size_t removed_noisy = 0;
    std::optional<double> precision;  // undefined when nothing is removed
    std::optional<double> recall;     // undefined when nothing is noisy
};

enum class RunMode { pipeline, baseline };

std::string_view to_string(RunMode mode);

struct EvaluationSummary {
    MetricSet metrics;
    std::size_t epoch = 0;
};

struct RunReport {
    RunMode mode = RunMode::pipeline;
    RunConfig config;
    std::optional<double> eta_hat;
    std::optional<double> eta_hat_raw;
    std::optional<double> forget_rate;
    std::optional<SelectionQuality> selection;
    /// Test metrics of the last epoch.
    EvaluationSummary final_test;
    /// Test metrics of the epoch with the best validation accuracy
    /// (earliest wins ties). Absent without validation data.
    std::optional<EvaluationSummary> best_val_test;
    std::vector<EpochRecord> curves;
    /// Weights after the last epoch; not part of the JSON report.
    ModelParams final_params;
};

/// Seed used to initialize the network of a phase.
std::uint64_t phase_init_seed(const RunConfig& cfg, int phase);

PhaseOutput phase1_pretrain(const Dataset& d_train, const RunConfig& cfg, const EpochCallback& on_epoch = {});

/// Vanilla CE training at phase2_batch_size, continuing from `params`.
PhaseOutput phase2_continue(const Dataset& d_train, const ModelParams& params, const RunConfig& cfg,
                            const EpochCallback& on_epoch = {});

/// Phases 1 and 2 back to back: the loss vector used for selection.
PhaseOutput pre_selection_training(const Dataset& d_train, const RunConfig& cfg, const EpochCallback& on_epoch = {});

/// Rank by loss (descending, ties to the lower index) and drop the top
/// floor(k * n). k is cfg.forget_rate_override when set, otherwise
/// max(0, eta_hat - forget_margin). The estimator may be null only with an
/// override.
SelectionResult phase2_select(const Dataset& d_train, std::span<const double> losses, const RunConfig& cfg,
                              const EstimatorModel* estimator);

/// Fresh init when cfg.reinit_phase3, otherwise continues from warm_params.
PhaseOutput phase3_train(const Dataset& d_clean, const RunConfig& cfg,
                         const std::optional<ModelParams>& warm_params = std::nullopt,
                         const EpochCallback& on_epoch = {});

SelectionQuality selection_quality(const SelectionResult& selection, const CorruptionRecord& record);

struct RunInputs {
    const Dataset& train;
    const Dataset& validation;
    const Dataset& test;
    const EstimatorModel* estimator = nullptr;
    const CorruptionRecord* corruption = nullptr;
};

/// Baseline mode trains phase 1 alone for the full epoch budget.
RunReport run_pipeline(const RunInputs& inputs, const RunConfig& cfg, RunMode mode = RunMode::pipeline);

struct AblationRow {
    std::string label;                 // "0", "0.1", ..., "estimated"
    std::optional<double> fixed_rate;  // absent for the estimated column
    double forget_rate = 0.0;
    std::optional<double> eta_hat;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

inline const std::vector<double> kAblationRates{0.0, 0.1, 0.2, 0.3, 0.4};

/// Fixed forget rates {0, 0.1, 0.2, 0.3, 0.4} plus the estimated rate.
/// Phases 1 and 2 are shared across the six configurations.
std::vector<AblationRow> ablate_forget_rate(const RunInputs& inputs, const RunConfig& cfg, unsigned threads = 1);

}  // namespace noiselab
