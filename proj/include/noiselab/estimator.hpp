#pragma once

#include <span>
#include <string>
#include <vector>

#include "noiselab/config.hpp"
#include "noiselab/data.hpp"
#include "noiselab/noise.hpp"

namespace noiselab {

inline constexpr std::size_t kHistogramBins = 1000;

/// Mass of the per-sample loss distribution in equal-width intervals over
/// [0, max loss]. ratios[0] is the highest-loss interval.
struct LossHistogramFeatures {
    std::vector<double> ratios;
    std::size_t n_samples = 0;
    int n_classes = 2;

    /// ratios followed by N and c: the regressor's raw input.
    std::vector<double> regressor_inputs() const;
};

LossHistogramFeatures featurize_losses(std::span<const double> losses, int num_classes,
                                       std::size_t bins = kHistogramBins);

/// eta = sum_i w_i (x_i - mean_i) / scale_i + bias over the regressor inputs.
struct EstimatorModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> feature_means;
    std::vector<double> feature_scales;

    std::size_t bins() const { return weights.size() - 2; }
    void validate() const;
    double predict_raw(const LossHistogramFeatures& features) const;
};

struct EstimatorTrainingRow {
    LossHistogramFeatures features;
    double target = 0.0;
    std::string source;
    NoiseKind kind = NoiseKind::symmetric;
};

struct EstimatorFit {
    EstimatorModel model;
    /// prediction - target per training row
    std::vector<double> residuals;

    double residual_rms() const;
};

inline constexpr double kDefaultRidge = 1e-6;

/// Standardize inputs, then solve the ridge system exactly. ridge = 0 gives
/// the minimum-norm least-squares solution.
EstimatorFit fit_estimator(const std::vector<EstimatorTrainingRow>& rows, double ridge = kDefaultRidge);

struct NoiseRateEstimate {
    double raw = 0.0;
    /// raw clamped to [0, (c - 1) / c - 1e-6]
    double clamped = 0.0;
};

NoiseRateEstimate estimate_noise_rate(const EstimatorModel& model, const LossHistogramFeatures& features);

/// One row per (dataset, kind, rate): corrupt, train the vanilla pre-selection
/// schedule of `cfg`, take frozen-weight CE losses, featurize. Cells run on up
/// to `threads` worker threads; the result order does not depend on it.
std::vector<EstimatorTrainingRow> build_training_rows(const std::vector<Dataset>& auxiliary,
                                                      const std::vector<double>& rates,
                                                      const std::vector<NoiseKind>& kinds,
                                                      const RunConfig& cfg, unsigned threads = 1);

}  // namespace noiselab
