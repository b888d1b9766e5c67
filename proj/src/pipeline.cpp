#include "noiselab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "noiselab/error.hpp"
#include "noiselab/parallel.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

namespace {

constexpr const char* kPhase1 = "phase1";
constexpr const char* kPhase2 = "phase2";
constexpr const char* kPhase3 = "phase3";
constexpr const char* kBaseline = "baseline";

TrainOptions phase_options(const RunConfig& cfg, std::size_t epochs, std::size_t batch_size,
                           const ObjectiveConfig& objective, std::size_t first_epoch, const char* phase) {
    TrainOptions options;
    options.epochs = epochs;
    options.batch_size = batch_size;
    options.lr = cfg.lr;
    options.objective = objective;
    options.seed = cfg.seed;
    options.first_epoch = first_epoch;
    options.phase = phase;
    return options;
}

void append(TrainTrace& into, const TrainTrace& from) {
    into.epochs.insert(into.epochs.end(), from.epochs.begin(), from.epochs.end());
}

template <typename Fn>
auto with_phase(const char* phase, Fn&& fn) {
    try {
        return fn();
    } catch (const RunError&) {
        throw;
    } catch (const Error& err) {
        throw RunError(phase, err.what());
    }
}

void check_compatible(const Dataset& a, const Dataset& b) {
    if (a.num_classes != b.num_classes || a.feature_dim != b.feature_dim) {
        throw ArgumentError("datasets '" + a.name + "' and '" + b.name + "' disagree on class count or feature_dim");
    }
}

}  // namespace

std::string_view to_string(RunMode mode) { return mode == RunMode::pipeline ? "pipeline" : "baseline"; }

std::uint64_t phase_init_seed(const RunConfig& cfg, int phase) {
    return derive_seed(cfg.seed, {cfg.model_spec.init_seed, static_cast<std::uint64_t>(phase)});
}

PhaseOutput phase1_pretrain(const Dataset& d_train, const RunConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (d_train.empty()) throw RunError(kPhase1, "training set is empty");
    return with_phase(kPhase1, [&] {
        MlpSpec spec = cfg.resolve_model_spec(d_train.feature_dim, d_train.num_classes);
        spec.init_seed = phase_init_seed(cfg, 1);
        PhaseOutput out{init_params(spec), {}, {}};
        const auto options = phase_options(cfg, cfg.phase1_epochs, cfg.batch_size, ObjectiveConfig::cross_entropy(),
                                           0, kPhase1);
        out.trace = train_epochs(out.params, d_train, options, on_epoch);
        out.losses = per_sample_ce_losses(out.params, d_train);
        return out;
    });
}

PhaseOutput phase2_continue(const Dataset& d_train, const ModelParams& params, const RunConfig& cfg,
                            const EpochCallback& on_epoch) {
    cfg.validate();
    if (d_train.empty()) throw RunError(kPhase2, "training set is empty");
    return with_phase(kPhase2, [&] {
        PhaseOutput out{params, {}, {}};
        const auto options = phase_options(cfg, cfg.phase2_epochs, cfg.phase2_batch_size,
                                           ObjectiveConfig::cross_entropy(), cfg.phase1_epochs, kPhase2);
        out.trace = train_epochs(out.params, d_train, options, on_epoch);
        out.losses = per_sample_ce_losses(out.params, d_train);
        return out;
    });
}

PhaseOutput pre_selection_training(const Dataset& d_train, const RunConfig& cfg, const EpochCallback& on_epoch) {
    PhaseOutput first = phase1_pretrain(d_train, cfg, on_epoch);
    if (cfg.phase2_epochs == 0) return first;
    PhaseOutput second = phase2_continue(d_train, first.params, cfg, on_epoch);
    second.trace.initial_loss = first.trace.initial_loss;
    TrainTrace merged = first.trace;
    append(merged, second.trace);
    second.trace = std::move(merged);
    return second;
}

SelectionResult phase2_select(const Dataset& d_train, std::span<const double> losses, const RunConfig& cfg,
                              const EstimatorModel* estimator) {
    cfg.validate();
    const std::size_t n = d_train.size();
    if (losses.size() != n) {
        throw ArgumentError("loss vector has " + std::to_string(losses.size()) + " entries for " + std::to_string(n) +
                            " samples");
    }
    if (!estimator && !cfg.forget_rate_override) {
        throw ArgumentError("selection needs an estimator model or a forget-rate override");
    }

    SelectionResult result;
    result.losses.assign(losses.begin(), losses.end());
    if (estimator) {
        const auto features = featurize_losses(losses, d_train.num_classes, estimator->bins());
        const auto estimate = estimate_noise_rate(*estimator, features);
        result.eta_hat = estimate.clamped;
        result.eta_hat_raw = estimate.raw;
    }
    result.forget_rate = cfg.forget_rate_override ? *cfg.forget_rate_override
                                                  : std::max(0.0, *result.eta_hat - cfg.forget_margin);

    // The epsilon absorbs representation error in k * n (0.29 * 100 < 29).
    const auto remove_count = std::min(
        n, static_cast<std::size_t>(std::floor(result.forget_rate * static_cast<double>(n) + 1e-9)));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });

    result.removed.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(remove_count));
    result.kept.assign(order.begin() + static_cast<std::ptrdiff_t>(remove_count), order.end());
    std::sort(result.kept.begin(), result.kept.end());
    return result;
}

PhaseOutput phase3_train(const Dataset& d_clean, const RunConfig& cfg, const std::optional<ModelParams>& warm_params,
                         const EpochCallback& on_epoch) {
    cfg.validate();
    if (d_clean.empty()) throw RunError(kPhase3, "cleaned training set is empty (every sample was removed)");
    return with_phase(kPhase3, [&] {
        PhaseOutput out;
        if (cfg.reinit_phase3) {
            MlpSpec spec = cfg.resolve_model_spec(d_clean.feature_dim, d_clean.num_classes);
            spec.init_seed = phase_init_seed(cfg, 3);
            out.params = init_params(spec);
        } else {
            if (!warm_params) throw ArgumentError("reinit_phase3 is false but no warm parameters were given");
            out.params = *warm_params;
        }
        const auto options = phase_options(cfg, cfg.phase3_epochs, cfg.batch_size, cfg.objective,
                                           cfg.phase1_epochs + cfg.phase2_epochs, kPhase3);
        out.trace = train_epochs(out.params, d_clean, options, on_epoch);
        return out;
    });
}

SelectionQuality selection_quality(const SelectionResult& selection, const CorruptionRecord& record) {
    const std::size_t n = selection.kept.size() + selection.removed.size();
    if (record.flipped.size() != n) {
        throw ArgumentError("corruption record covers " + std::to_string(record.flipped.size()) +
                            " samples, selection covers " + std::to_string(n));
    }
    SelectionQuality q;
    q.removed_count = selection.removed.size();
    q.kept_count = selection.kept.size();
    for (std::size_t idx : selection.removed) {
        if (record.flipped[idx]) ++q.removed_noisy;
    }
    const std::size_t noisy = record.flipped_count();
    if (q.removed_count > 0) {
        q.precision = static_cast<double>(q.removed_noisy) / static_cast<double>(q.removed_count);
    }
    if (noisy > 0) q.recall = static_cast<double>(q.removed_noisy) / static_cast<double>(noisy);
    return q;
}

RunReport run_pipeline(const RunInputs& inputs, const RunConfig& cfg, RunMode mode) {
    cfg.validate();
    inputs.train.validate();
    inputs.validation.validate();
    inputs.test.validate();
    check_compatible(inputs.train, inputs.validation);
    check_compatible(inputs.train, inputs.test);
    if (inputs.corruption && inputs.corruption->flipped.size() != inputs.train.size()) {
        throw ArgumentError("corruption record does not match the training set size");
    }

    RunReport report;
    report.mode = mode;
    report.config = cfg;

    const Dataset& val = inputs.validation;
    const auto val_labels = val.true_labels();
    double best_val = -1.0;
    std::optional<ModelParams> best_params;
    double best_temperature = 1.0;
    std::size_t best_epoch = 0;

    auto tracker = [&](double temperature) {
        return [&, temperature](EpochRecord& record, const ModelParams& params) {
            if (val.empty()) return;
            record.val_accuracy = accuracy(params, val, val_labels, temperature);
            if (*record.val_accuracy > best_val) {
                best_val = *record.val_accuracy;
                best_params = params;
                best_temperature = temperature;
                best_epoch = record.epoch;
            }
        };
    };

    ModelParams final_params;
    double final_temperature = 1.0;
    if (mode == RunMode::baseline) {
        RunConfig baseline_cfg = cfg;
        baseline_cfg.phase1_epochs = cfg.total_epochs();
        auto out = with_phase(kBaseline, [&] { return phase1_pretrain(inputs.train, baseline_cfg, tracker(1.0)); });
        for (auto& rec : out.trace.epochs) rec.phase = kBaseline;
        report.curves = std::move(out.trace.epochs);
        final_params = std::move(out.params);
    } else {
        PhaseOutput pre = pre_selection_training(inputs.train, cfg, tracker(1.0));
        const SelectionResult selection =
            with_phase(kPhase2, [&] { return phase2_select(inputs.train, pre.losses, cfg, inputs.estimator); });
        report.eta_hat = selection.eta_hat;
        report.eta_hat_raw = selection.eta_hat_raw;
        report.forget_rate = selection.forget_rate;
        SelectionQuality quality;
        if (inputs.corruption) {
            quality = selection_quality(selection, *inputs.corruption);
        } else {
            quality.removed_count = selection.removed.size();
            quality.kept_count = selection.kept.size();
        }
        report.selection = quality;

        const Dataset cleaned = inputs.train.subset(selection.kept);
        PhaseOutput final_phase = phase3_train(cleaned, cfg, pre.params, tracker(cfg.objective.temperature));
        report.curves = std::move(pre.trace.epochs);
        report.curves.insert(report.curves.end(), final_phase.trace.epochs.begin(), final_phase.trace.epochs.end());
        final_params = std::move(final_phase.params);
        final_temperature = cfg.objective.temperature;
    }

    const auto test_labels = inputs.test.true_labels();
    report.final_test.metrics =
        compute_metrics(predict_probs(final_params, inputs.test, final_temperature), test_labels);
    report.final_test.epoch = report.curves.empty() ? 0 : report.curves.back().epoch;
    if (best_params) {
        EvaluationSummary best;
        best.metrics = compute_metrics(predict_probs(*best_params, inputs.test, best_temperature), test_labels);
        best.epoch = best_epoch;
        report.best_val_test = std::move(best);
    }
    report.final_params = std::move(final_params);
    return report;
}

std::vector<AblationRow> ablate_forget_rate(const RunInputs& inputs, const RunConfig& cfg, unsigned threads) {
    cfg.validate();
    inputs.train.validate();
    check_compatible(inputs.train, inputs.test);
    if (!inputs.estimator) throw ArgumentError("the forget-rate ablation needs an estimator model");

    const PhaseOutput pre = pre_selection_training(inputs.train, cfg);
    const auto test_labels = inputs.test.true_labels();

    std::vector<AblationRow> rows(kAblationRates.size() + 1);
    auto run_row = [&](std::size_t i) {
        RunConfig row_cfg = cfg;
        AblationRow& row = rows[i];
        if (i < kAblationRates.size()) {
            row_cfg.forget_rate_override = kAblationRates[i];
            row.fixed_rate = kAblationRates[i];
            char buf[16];
            std::snprintf(buf, sizeof buf, "%g", kAblationRates[i]);
            row.label = buf;
        } else {
            row_cfg.forget_rate_override.reset();
            row.label = "estimated";
        }
        const auto selection = phase2_select(inputs.train, pre.losses, row_cfg, inputs.estimator);
        row.forget_rate = selection.forget_rate;
        row.eta_hat = selection.eta_hat;
        const Dataset cleaned = inputs.train.subset(selection.kept);
        const PhaseOutput final_phase = phase3_train(cleaned, row_cfg, pre.params);
        const auto metrics = compute_metrics(
            predict_probs(final_phase.params, inputs.test, row_cfg.objective.temperature), test_labels);
        row.accuracy = metrics.accuracy;
        row.macro_f1 = metrics.macro_f1;
    };

    parallel_for(rows.size(), threads, run_row);
    return rows;
}

}  // namespace noiselab
